#ifndef METASINR_CONFIG_HPP
#define METASINR_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "metasinr/model.hpp"

namespace metasinr {

// Flat key-value config, one `key = value` per line, '#' comments.
// Unknown keys are errors so typos never silently fall back to defaults.
//
// Keys (units in the names where they matter):
//   tierK.density              BS per m^2
//   tierK.tx_power_dbm         dBm
//   tierK.bias                 linear
//   tierK.blockage             per meter
//   channel.alpha_los / channel.alpha_nlos
//   channel.kappa_los / channel.kappa_nlos      loss at 1 m (linear); default (4 pi Fc / c)^2
//   channel.nakagami_los / channel.nakagami_nlos  positive integers
//   antenna.elements           perfect square >= 4
//   traffic.arrival_prob       per slot, in [0,1]
//   traffic.user_density       users per m^2
//   noise_power_dbm            default: thermal floor for the bandwidth
//   sinr_threshold_db
//   bandwidth_hz
//   carrier_freq_hz
//   interferer_gain_averaging  on | off

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + v + "'");
    }
}

}  // namespace detail

inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw ConfigError("config key '" + key + "' given twice");
        kv[key] = value;
    }
    return kv;
}

// The canonical parameter paths accepted both in config files and by
// `--sweep`. Per-tier keys take the tier index from the path itself.
inline std::vector<std::string> config_key_patterns() {
    return {
        "tierK.density", "tierK.tx_power_dbm", "tierK.bias", "tierK.blockage",
        "channel.alpha_los", "channel.alpha_nlos",
        "channel.kappa_los", "channel.kappa_nlos",
        "channel.nakagami_los", "channel.nakagami_nlos",
        "antenna.elements",
        "traffic.arrival_prob", "traffic.user_density",
        "noise_power_dbm", "sinr_threshold_db", "bandwidth_hz", "carrier_freq_hz",
        "interferer_gain_averaging",
    };
}

// Applies one key to the model. Throws ConfigError on unknown keys.
inline void apply_config_key(NetworkModel& m, const std::string& key, const std::string& value) {
    using detail::parse_number;
    auto num = [&] { return parse_number(key, value); };

    if (key.rfind("tier", 0) == 0) {
        auto dot = key.find('.');
        if (dot != std::string::npos) {
            const std::string idx = key.substr(4, dot - 4);
            const std::string field = key.substr(dot + 1);
            bool digits = !idx.empty() &&
                std::all_of(idx.begin(), idx.end(), [](unsigned char c) { return std::isdigit(c); });
            if (digits) {
                std::size_t k = std::stoul(idx);
                if (k == 0) throw ConfigError("config key '" + key + "': tiers are numbered from 1");
                if (m.tiers.size() < k) m.tiers.resize(k);
                TierParams& t = m.tiers[k - 1];
                if (field == "density") { t.density = num(); return; }
                if (field == "tx_power_dbm") { t.tx_power = dbm_to_watts(num()); return; }
                if (field == "bias") { t.bias = num(); return; }
                if (field == "blockage") { t.blockage = num(); return; }
            }
        }
    } else if (key == "channel.alpha_los") { m.channel.alpha_los = num(); return;
    } else if (key == "channel.alpha_nlos") { m.channel.alpha_nlos = num(); return;
    } else if (key == "channel.kappa_los") { m.channel.kappa_los = num(); return;
    } else if (key == "channel.kappa_nlos") { m.channel.kappa_nlos = num(); return;
    } else if (key == "channel.nakagami_los") { m.channel.nakagami_los = static_cast<int>(num()); return;
    } else if (key == "channel.nakagami_nlos") { m.channel.nakagami_nlos = static_cast<int>(num()); return;
    } else if (key == "antenna.elements") { m.antenna = derive_antenna(static_cast<int>(num())); return;
    } else if (key == "traffic.arrival_prob") { m.traffic.arrival_prob = num(); return;
    } else if (key == "traffic.user_density") { m.traffic.user_density = num(); return;
    } else if (key == "noise_power_dbm") { m.noise_power = dbm_to_watts(num()); return;
    } else if (key == "sinr_threshold_db") { m.sinr_threshold = db_to_linear(num()); return;
    } else if (key == "bandwidth_hz") { m.bandwidth = num(); return;
    } else if (key == "carrier_freq_hz") { m.carrier_freq = num(); return;
    } else if (key == "interferer_gain_averaging") {
        if (value == "on") { m.interferer_gain_averaging = true; return; }
        if (value == "off") { m.interferer_gain_averaging = false; return; }
        throw ConfigError("config key '" + key + "': expected on|off, got '" + value + "'");
    }

    std::string msg = "unknown config key '" + key + "'; valid keys:";
    for (const auto& p : config_key_patterns()) msg += " " + p;
    throw ConfigError(msg);
}

// Builds a model from the defaults plus config-file overrides. Re-derives
// the thermal noise floor and free-space intercepts when bandwidth/carrier
// change, unless the file pinned them explicitly.
inline NetworkModel model_from_config(const std::map<std::string, std::string>& kv) {
    NetworkModel m = default_model();
    const bool explicit_noise = kv.count("noise_power_dbm") > 0;
    const bool explicit_kappa = kv.count("channel.kappa_los") || kv.count("channel.kappa_nlos");
    // Apply frequency/bandwidth first so derived defaults see them.
    if (auto it = kv.find("carrier_freq_hz"); it != kv.end())
        apply_config_key(m, it->first, it->second);
    if (auto it = kv.find("bandwidth_hz"); it != kv.end())
        apply_config_key(m, it->first, it->second);
    if (!explicit_kappa) {
        m.channel.kappa_los = freespace_intercept(m.carrier_freq);
        m.channel.kappa_nlos = m.channel.kappa_los;
    }
    if (!explicit_noise) m.noise_power = thermal_noise_watts(m.bandwidth);
    for (const auto& [key, value] : kv) {
        if (key == "carrier_freq_hz" || key == "bandwidth_hz") continue;
        apply_config_key(m, key, value);
    }
    validate(m);
    return m;
}

inline NetworkModel load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return model_from_config(parse_config_text(in));
}

}  // namespace metasinr

#endif
