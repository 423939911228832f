#ifndef METASINR_MODEL_HPP
#define METASINR_MODEL_HPP

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metasinr/units.hpp"

namespace metasinr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-tier deployment, blockage and bias parameters.
struct TierParams {
    double density = 0.0;   // BS per m^2
    double tx_power = 0.0;  // watts
    double bias = 1.0;      // linear
    double blockage = 0.0;  // per meter
};

struct ChannelParams {
    double alpha_los = 2.0;
    double alpha_nlos = 4.0;
    double kappa_los = 0.0;   // loss at 1 m, linear
    double kappa_nlos = 0.0;
    int nakagami_los = 3;     // integer so the inner binomial sum is finite
    int nakagami_nlos = 2;
};

// Sector antenna pattern; every field derives from the element count.
struct AntennaPattern {
    int elements = 0;
    double g_max = 0.0;
    double g_min = 0.0;
    double beamwidth = 0.0;  // radians

    double main_lobe_prob() const { return beamwidth / (2.0 * M_PI); }
    double mean_interferer_gain() const {
        const double p = main_lobe_prob();
        return g_max * p + g_min * (1.0 - p);
    }
};

inline AntennaPattern derive_antenna(int elements) {
    if (elements < 4)
        throw ConfigError("antenna.elements: must be >= 4, got " + std::to_string(elements));
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(elements))));
    if (root * root != elements)
        throw ConfigError("antenna.elements: must be a perfect square, got " +
                          std::to_string(elements));
    AntennaPattern a;
    a.elements = elements;
    a.g_max = static_cast<double>(elements);
    const double s = std::sin(3.0 * M_PI / (2.0 * root));
    a.g_min = 1.0 / (s * s);
    a.beamwidth = std::sqrt(3.0) / root;
    return a;
}

struct TrafficParams {
    double arrival_prob = 0.3;   // per slot
    double user_density = 0.0;   // users per m^2
};

struct NetworkModel {
    std::vector<TierParams> tiers;
    ChannelParams channel;
    AntennaPattern antenna;
    TrafficParams traffic;
    double noise_power = 0.0;     // watts
    double sinr_threshold = 1.0;  // linear
    double bandwidth = 1e9;       // Hz
    double carrier_freq = 28e9;   // Hz
    bool interferer_gain_averaging = true;

    std::size_t num_tiers() const { return tiers.size(); }
};

namespace detail {
inline void require(bool ok, const std::string& field, double value) {
    if (!ok) {
        std::ostringstream os;
        os << "invalid " << field << ": " << value;
        throw ConfigError(os.str());
    }
}
}  // namespace detail

inline const NetworkModel& validate(const NetworkModel& m) {
    using detail::require;
    require(!m.tiers.empty(), "tiers (need at least one)", 0.0);
    for (std::size_t k = 0; k < m.tiers.size(); ++k) {
        const auto& t = m.tiers[k];
        const std::string p = "tier" + std::to_string(k + 1) + ".";
        require(t.density > 0.0, p + "density", t.density);
        require(t.tx_power > 0.0, p + "tx_power", t.tx_power);
        require(t.bias > 0.0, p + "bias", t.bias);
        require(t.blockage > 0.0, p + "blockage", t.blockage);
    }
    const auto& c = m.channel;
    require(c.alpha_los >= 2.0, "channel.alpha_los", c.alpha_los);
    require(c.alpha_nlos >= c.alpha_los, "channel.alpha_nlos", c.alpha_nlos);
    require(c.kappa_los > 0.0, "channel.kappa_los", c.kappa_los);
    require(c.kappa_nlos > 0.0, "channel.kappa_nlos", c.kappa_nlos);
    require(c.nakagami_los >= 1, "channel.nakagami_los", c.nakagami_los);
    require(c.nakagami_nlos >= 1, "channel.nakagami_nlos", c.nakagami_nlos);
    const auto& a = m.antenna;
    require(a.elements >= 4, "antenna.elements", a.elements);
    require(a.g_max >= a.g_min && a.g_min > 0.0, "antenna.g_min", a.g_min);
    require(a.beamwidth > 0.0 && a.beamwidth < 2.0 * M_PI, "antenna.beamwidth", a.beamwidth);
    require(m.traffic.arrival_prob >= 0.0 && m.traffic.arrival_prob <= 1.0,
            "traffic.arrival_prob", m.traffic.arrival_prob);
    require(m.traffic.user_density > 0.0, "traffic.user_density", m.traffic.user_density);
    require(m.sinr_threshold > 0.0, "sinr_threshold", m.sinr_threshold);
    require(m.noise_power >= 0.0, "noise_power", m.noise_power);
    require(m.bandwidth > 0.0, "bandwidth", m.bandwidth);
    require(m.carrier_freq > 0.0, "carrier_freq", m.carrier_freq);
    return m;
}

// Two-tier macro/small-cell deployment used throughout the tests and as the
// built-in CLI default.
inline NetworkModel default_model() {
    NetworkModel m;
    m.carrier_freq = 28e9;
    m.bandwidth = 1e9;
    const double kappa = freespace_intercept(m.carrier_freq);
    m.channel = ChannelParams{2.0, 4.0, kappa, kappa, 3, 2};
    m.antenna = derive_antenna(64);
    TierParams macro;
    macro.density = 5.0 / (500.0 * 500.0 * M_PI);
    macro.tx_power = dbm_to_watts(43.0);
    macro.bias = 1.0;
    macro.blockage = 0.006;
    TierParams small;
    small.density = 10.0 / (500.0 * 500.0 * M_PI);
    small.tx_power = dbm_to_watts(23.0);
    small.bias = 1.0;
    small.blockage = 0.024;
    m.tiers = {macro, small};
    m.traffic.arrival_prob = 0.3;
    m.traffic.user_density = 50.0 / (500.0 * 500.0 * M_PI);
    m.noise_power = thermal_noise_watts(m.bandwidth);
    m.sinr_threshold = 1.0;
    return m;
}

}  // namespace metasinr

#endif
