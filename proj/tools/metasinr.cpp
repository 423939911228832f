// metasinr: SINR meta distribution of K-tier mmWave networks under Geo/G/1
// traffic. Subcommands compute analytic moments, meta distributions, the
// queue-coupled fixed point, and Monte Carlo cross-validation, all emitted
// as CSV.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metasinr/metasinr.hpp"

namespace {

using namespace metasinr;

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSamples = 4;

struct CommonOpts {
    std::string config_path;
    std::string output = "out.csv";
    std::uint64_t seed = 1;
    int threads = 1;
};

NetworkModel load_model(const CommonOpts& c) {
    return c.config_path.empty() ? default_model() : load_config(c.config_path);
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
    return out;
}

std::vector<double> default_y_grid() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

const char* state_name(LinkState s) { return s == LinkState::LOS ? "L" : "N"; }

ActivityVector resolve_activity(const NetworkModel& m, const std::string& mode,
                                std::vector<double>* fixed_point_out = nullptr) {
    if (mode == "full") return full_buffer_activity(m);
    if (mode == "fixedpoint") {
        auto st = solve_fixed_point(m);
        if (!st.converged) throw QuadratureError("fixed point did not converge");
        if (fixed_point_out) *fixed_point_out = st.activity;
        return st.activity;
    }
    auto q = parse_list(mode, "--activity");
    if (q.size() != m.num_tiers())
        throw ConfigError("--activity: need one value per tier or full|fixedpoint");
    return q;
}

int cmd_moments(const CommonOpts& common, const std::string& theta_db_list,
                const std::string& activity_mode) {
    NetworkModel m = load_model(common);
    const auto thetas = parse_list(theta_db_list, "--theta-db");
    CsvWriter csv(common.output);
    csv.header({"theta_db", "tier", "state", "m1", "m2", "variance", "activity_mode"});
    for (double th : thetas) {
        m.sinr_threshold = db_to_linear(th);
        const ActivityVector q = resolve_activity(m, activity_mode);
        const TierMoments t1 = tier_moments(m, 1.0, q);
        const TierMoments t2 = tier_moments(m, 2.0, q);
        for (std::size_t k = 0; k < m.num_tiers(); ++k) {
            for (LinkState s : link_states) {
                const int i = s == LinkState::LOS ? 0 : 1;
                const double m1 = t1.per_state[k][i].value.real();
                const double m2 = t2.per_state[k][i].value.real();
                csv.row().col(th).col(static_cast<int>(k + 1)).col(std::string(state_name(s)))
                    .col(m1).col(m2).col(std::max(0.0, m2 - m1 * m1)).col(activity_mode);
            }
            const double m1 = t1.tier(k).real(), m2 = t2.tier(k).real();
            csv.row().col(th).col(static_cast<int>(k + 1)).col(std::string("all"))
                .col(m1).col(m2).col(std::max(0.0, m2 - m1 * m1)).col(activity_mode);
        }
        const double m1 = t1.total().real(), m2 = t2.total().real();
        csv.row().col(th).col(0).col(std::string("all"))
            .col(m1).col(m2).col(std::max(0.0, m2 - m1 * m1)).col(activity_mode);
    }
    return 0;
}

int cmd_metadist(const CommonOpts& common, const std::string& y_grid_list,
                 const std::string& method, const std::string& activity_mode) {
    if (method != "gil-pelaez" && method != "beta" && method != "both")
        throw ConfigError("--method: expected gil-pelaez|beta|both");
    NetworkModel m = load_model(common);
    const auto y_grid = y_grid_list.empty() ? default_y_grid()
                                            : parse_list(y_grid_list, "--y-grid");
    const ActivityVector q = resolve_activity(m, activity_mode);

    const bool want_gp = method != "beta";
    const bool want_beta = method != "gil-pelaez";
    MomentSeries series;
    if (want_gp) series = build_moment_series(m, q);
    TierMoments t1, t2;
    if (want_beta) {
        t1 = tier_moments(m, 1.0, q);
        t2 = tier_moments(m, 2.0, q);
    }
    CsvWriter csv(common.output);
    csv.header({"tier", "y", "ccdf_beta", "ccdf_gil_pelaez", "gap"});
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        MetaDistribution beta;
        if (want_beta) beta = beta_match(t1.tier(k).real(), t2.tier(k).real());
        for (double y : y_grid) {
            auto row = csv.row();
            row.col(static_cast<int>(k + 1)).col(y);
            double vb = 0.0, vg = 0.0;
            if (want_beta) row.col(vb = beta.ccdf(y)); else row.empty();
            if (want_gp) {
                vg = gil_pelaez_ccdf(
                    [&](double t) { return series.eval_tier(k, std::complex<double>(0.0, t)); },
                    y);
                row.col(vg);
            } else {
                row.empty();
            }
            if (method == "both") row.col(std::abs(vb - vg)); else row.empty();
        }
    }
    return 0;
}

int cmd_fixedpoint(const CommonOpts& common, const std::string& y_grid_list,
                   const std::string& trace_path) {
    NetworkModel m = load_model(common);
    if (m.traffic.arrival_prob <= 0.0)
        throw ConfigError("fixedpoint: traffic.arrival_prob must be > 0");
    const auto y_grid = y_grid_list.empty() ? default_y_grid()
                                            : parse_list(y_grid_list, "--y-grid");
    const FixedPointState st = solve_fixed_point(m);

    const std::string trace = trace_path.empty() ? common.output + ".trace.csv" : trace_path;
    {
        CsvWriter tcsv(trace);
        tcsv.header({"iteration", "tier", "activity", "change_norm"});
        for (const auto& rec : st.trajectory)
            for (std::size_t k = 0; k < rec.activity.size(); ++k)
                tcsv.row().col(rec.iteration).col(static_cast<int>(k + 1))
                    .col(rec.activity[k]).col(rec.change_norm);
    }
    CsvWriter csv(common.output);
    csv.header({"tier", "e_qa", "m1", "m2", "y", "ccdf"});
    for (std::size_t k = 0; k < m.num_tiers(); ++k)
        for (double y : y_grid)
            csv.row().col(static_cast<int>(k + 1)).col(st.activity[k]).col(st.m1[k])
                .col(st.m2[k]).col(y).col(st.meta[k].ccdf(y));
    if (!st.converged) {
        std::cerr << "fixedpoint: no stationary solution after " << st.iterations
                  << " iterations" << (st.oscillating ? " (oscillating)" : "")
                  << "; trajectory written to " << trace << "\n";
        return kExitNumerical;
    }
    return 0;
}

int cmd_simulate(const CommonOpts& common, const std::string& mode, int realizations, int slots,
                 const std::string& y_grid_list, double window_radius, bool dump_users) {
    if (mode != "static" && mode != "temporal")
        throw ConfigError("--mode: expected static|temporal");
    NetworkModel m = load_model(common);
    const auto y_grid = y_grid_list.empty() ? default_y_grid()
                                            : parse_list(y_grid_list, "--y-grid");
    EnsembleOptions opt;
    opt.realizations = realizations;
    opt.seed = common.seed;
    opt.threads = common.threads;
    opt.window_radius = window_radius;
    opt.slots = slots;

    CsvWriter csv(common.output);
    if (mode == "static") {
        const ActivityVector q = full_buffer_activity(m);
        const auto sim = run_static_ensemble(m, q, opt);
        const TierMoments t1 = tier_moments(m, 1.0, q);
        csv.header({"tier", "sim_m1", "sim_ci", "analytic_m1", "abs_diff", "sim_assoc",
                    "analytic_assoc", "users"});
        for (std::size_t k = 0; k < m.num_tiers(); ++k) {
            const double n = static_cast<double>(sim.tier_stp[k].size());
            double var = 0.0;
            for (double v : sim.tier_stp[k]) {
                const double d = v - sim.tier_mean_stp[k];
                var += d * d;
            }
            const double ci = n > 1 ? 1.96 * std::sqrt(var / (n - 1) / n) : 0.0;
            const double am1 = t1.tier(k).real();
            csv.row().col(static_cast<int>(k + 1)).col(sim.tier_mean_stp[k]).col(ci).col(am1)
                .col(std::abs(sim.tier_mean_stp[k] - am1)).col(sim.tier_assoc_fraction[k])
                .col(t1.assoc.per_tier[k]).col(sim.tier_stp[k].size());
        }
        if (dump_users) {
            CsvWriter ucsv(common.output + ".users.csv");
            ucsv.header({"tier", "stp"});
            for (std::size_t k = 0; k < m.num_tiers(); ++k)
                for (double v : sim.tier_stp[k])
                    ucsv.row().col(static_cast<int>(k + 1)).col(v);
        }
    } else {
        const auto sim = run_temporal_ensemble(m, opt);
        const FixedPointState st = solve_fixed_point(m);
        csv.header({"tier", "sim_activity", "fp_activity", "activity_diff", "sim_mean_stp",
                    "y", "sim_ccdf", "sim_ci", "fp_ccdf", "ccdf_diff"});
        for (std::size_t k = 0; k < m.num_tiers(); ++k) {
            const auto emp = empirical_meta(sim.tier_stp[k], y_grid);
            for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
                const double fp = st.meta[k].ccdf(y_grid[yi]);
                csv.row().col(static_cast<int>(k + 1)).col(sim.tier_mean_activity[k])
                    .col(st.activity[k])
                    .col(std::abs(sim.tier_mean_activity[k] - st.activity[k]))
                    .col(sim.tier_mean_stp[k]).col(y_grid[yi]).col(emp.dist.values[yi])
                    .col(emp.half_width[yi]).col(fp).col(std::abs(emp.dist.values[yi] - fp));
            }
        }
    }
    return 0;
}

struct SweepSpec {
    std::string key;
    std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep: expected KEY=START:STOP:COUNT");
    SweepSpec spec;
    spec.key = s.substr(0, eq);
    const std::string rhs = s.substr(eq + 1);
    auto c1 = rhs.find(':');
    if (c1 == std::string::npos) {
        spec.values = parse_list(rhs, "--sweep");
        return spec;
    }
    auto c2 = rhs.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ConfigError("--sweep: expected KEY=START:STOP:COUNT");
    const double start = std::stod(rhs.substr(0, c1));
    const double stop = std::stod(rhs.substr(c1 + 1, c2 - c1 - 1));
    const int count = std::stoi(rhs.substr(c2 + 1));
    if (count < 1) throw ConfigError("--sweep: COUNT must be >= 1");
    for (int i = 0; i < count; ++i)
        spec.values.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return spec;
}

int cmd_sweep(const CommonOpts& common, const std::string& sweep_arg, const std::string& command,
              const std::string& y_grid_list) {
    if (command != "moments" && command != "fixedpoint")
        throw ConfigError("--command: expected moments|fixedpoint");
    const SweepSpec spec = parse_sweep(sweep_arg);
    const auto y_grid = y_grid_list.empty() ? default_y_grid()
                                            : parse_list(y_grid_list, "--y-grid");
    const NetworkModel base = load_model(common);
    CsvWriter csv(common.output);

    std::vector<std::string> cols{"swept_key", "swept_value", "tier", "m1", "m2", "variance",
                                  "e_qa"};
    for (double y : y_grid) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ccdf_y%.9g", y);
        cols.push_back(buf);
    }
    csv.header(cols);

    for (double value : spec.values) {
        NetworkModel m = base;
        {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12g", value);
            apply_config_key(m, spec.key, buf);  // lists valid keys on typo
        }
        validate(m);
        if (command == "moments") {
            const ActivityVector q = full_buffer_activity(m);
            const TierMoments t1 = tier_moments(m, 1.0, q);
            const TierMoments t2 = tier_moments(m, 2.0, q);
            for (std::size_t k = 0; k < m.num_tiers(); ++k) {
                const double m1 = t1.tier(k).real(), m2 = t2.tier(k).real();
                const MetaDistribution beta = beta_match(m1, m2);
                auto row = csv.row();
                row.col(spec.key).col(value).col(static_cast<int>(k + 1)).col(m1).col(m2)
                    .col(std::max(0.0, m2 - m1 * m1)).empty();
                for (double y : y_grid) row.col(beta.ccdf(y));
            }
        } else {
            const FixedPointState st = solve_fixed_point(m);
            if (!st.converged) return kExitNumerical;
            for (std::size_t k = 0; k < m.num_tiers(); ++k) {
                auto row = csv.row();
                row.col(spec.key).col(value).col(static_cast<int>(k + 1)).col(st.m1[k])
                    .col(st.m2[k]).col(std::max(0.0, st.m2[k] - st.m1[k] * st.m1[k]))
                    .col(st.activity[k]);
                for (double y : y_grid) row.col(st.meta[k].ccdf(y));
            }
        }
    }
    return 0;
}

int run_check(const CommonOpts& common) {
    NetworkModel m = load_model(common);
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, double value) {
        std::printf("%-48s %s  (%.3g)\n", name.c_str(), ok ? "PASS" : "FAIL", value);
        if (!ok) ++failures;
    };

    const auto assoc = association_probabilities(m);
    report("association normalization |sum A - 1|", std::abs(assoc.total() - 1.0) < 1e-6,
           std::abs(assoc.total() - 1.0));

    const ActivityVector q = full_buffer_activity(m);
    const double m0 = total_moment(m, 0.0, q).value.real();
    report("zeroth moment M0 = 1", std::abs(m0 - 1.0) < 1e-12, m0);

    const double m1 = total_moment(m, 1.0, q).value.real();
    const double m2 = total_moment(m, 2.0, q).value.real();
    report("moment ordering M2 <= M1 <= 1", m2 <= m1 + 1e-12 && m1 <= 1.0, m1);
    report("variance M2 - M1^2 >= 0", m2 - m1 * m1 >= -1e-10, m2 - m1 * m1);

    // Blockage-split identity under kappa_L = kappa_N, alpha_L = alpha_N.
    NetworkModel ms = m;
    ms.channel.kappa_nlos = ms.channel.kappa_los;
    ms.channel.alpha_nlos = ms.channel.alpha_los;
    double worst = 0.0;
    for (double l : {1e4, 1e6, 1e8, 1e10}) {
        const double split = intensity(ms.tiers[0], ms.channel, LinkState::LOS, l) +
                             intensity(ms.tiers[0], ms.channel, LinkState::NLOS, l);
        const double disc = M_PI * ms.tiers[0].density *
                            std::pow(l / ms.channel.kappa_los, 2.0 / ms.channel.alpha_los);
        worst = std::max(worst, std::abs(split - disc) / std::max(1e-300, disc));
    }
    report("blockage split = unblocked intensity", worst < 1e-9, worst);

    double pmf_worst = 0.0;
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        const auto uc = build_user_counts(m, k, assoc.per_tier[k]);
        double sum = 0.0;
        for (double p : uc.pmf) sum += p;
        pmf_worst = std::max(pmf_worst, std::abs(sum - 1.0));
    }
    report("user-count PMF normalization", pmf_worst < 1e-6, pmf_worst);

    return failures == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SINR meta distribution of K-tier mmWave networks under Geo/G/1 traffic"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    CommonOpts common;
    app.add_option("--config", common.config_path, "config file (flat key = value)");
    app.add_option("--output", common.output, "output CSV path");
    app.add_option("--seed", common.seed, "base RNG seed");
    app.add_option("--threads", common.threads, "worker threads (output is thread-count invariant)");
    bool check = false;
    app.add_flag("--check", check, "run the invariant suite on the config and exit");

    std::string theta_db = "0";
    std::string activity_mode = "full";
    std::string y_grid_list;
    std::string method = "both";
    std::string mode = "static";
    std::string sweep_arg, sweep_command = "fixedpoint", trace_path;
    int realizations = 100, slots = 5000;
    double window_radius = 2000.0;
    bool dump_users = false;

    auto* moments = app.add_subcommand("moments", "per-tier conditional STP moments over theta");
    moments->add_option("--theta-db", theta_db, "comma-separated SINR thresholds in dB");
    moments->add_option("--activity", activity_mode, "full | fixedpoint | q1,q2,...");

    auto* metadist = app.add_subcommand("metadist", "meta distribution CCDF per tier");
    metadist->add_option("--y-grid", y_grid_list, "comma-separated y values");
    metadist->add_option("--method", method, "gil-pelaez | beta | both");
    metadist->add_option("--activity", activity_mode, "full | fixedpoint | q1,q2,...");

    auto* fixedpoint = app.add_subcommand("fixedpoint", "queue-coupled fixed point");
    fixedpoint->add_option("--y-grid", y_grid_list, "comma-separated y values");
    fixedpoint->add_option("--trace", trace_path, "convergence trace CSV path");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo cross-validation");
    simulate->add_option("--mode", mode, "static | temporal");
    simulate->add_option("--realizations", realizations, "spatial realizations");
    simulate->add_option("--slots", slots, "time slots (temporal mode)");
    simulate->add_option("--window-radius", window_radius, "simulation window radius (m)");
    simulate->add_option("--y-grid", y_grid_list, "comma-separated y values");
    simulate->add_flag("--dump-users", dump_users, "also write raw per-user STP estimates");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep");
    sweep->add_option("--sweep", sweep_arg, "KEY=START:STOP:COUNT or KEY=v1,v2,...")->required();
    sweep->add_option("--command", sweep_command, "moments | fixedpoint");
    sweep->add_option("--y-grid", y_grid_list, "comma-separated y values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (check) return run_check(common);
        if (moments->parsed()) return cmd_moments(common, theta_db, activity_mode);
        if (metadist->parsed()) return cmd_metadist(common, y_grid_list, method, activity_mode);
        if (fixedpoint->parsed()) return cmd_fixedpoint(common, y_grid_list, trace_path);
        if (simulate->parsed())
            return cmd_simulate(common, mode, realizations, slots, y_grid_list, window_radius,
                                dump_users);
        if (sweep->parsed()) return cmd_sweep(common, sweep_arg, sweep_command, y_grid_list);
        std::cerr << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const QuadratureError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const SimError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitSamples;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
