#ifndef METASINR_SIMULATOR_HPP
#define METASINR_SIMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "metasinr/geometry.hpp"
#include "metasinr/metadist.hpp"
#include "metasinr/model.hpp"
#include "metasinr/moments.hpp"
#include "metasinr/rng.hpp"

namespace metasinr {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BaseStation {
    double x = 0.0, y = 0.0;
    std::size_t tier = 0;
};

struct InterfererLink {
    std::uint32_t bs = 0;
    double rx_mean = 0.0;  // P_j / L, before gain/fading
    std::uint8_t tier = 0;
    bool los = false;
};

struct UserSite {
    double x = 0.0, y = 0.0;
    std::uint32_t serving_bs = 0;
    LinkState serving_state = LinkState::LOS;
    double serving_loss = 0.0;
    bool edge = false;  // within 10% of the window boundary, excluded from stats
    std::vector<InterfererLink> interferers;  // sorted by rx_mean, truncated
};

// One sampled spatial network with blockage marks and biased association.
struct Realization {
    double window_radius = 0.0;
    std::uint64_t seed = 0;
    std::vector<BaseStation> bs;
    std::vector<UserSite> users;
    std::vector<std::size_t> tier_counts;
};

namespace detail {

// Mean in-window vs beyond-window interference power (per unit density,
// unit gain) from the Lambda tails; the window is adequate when the excluded
// fraction is below 1%.
inline double mean_interference_annulus(const NetworkModel& m, double r_a, double r_b) {
    double total = 0.0;
    for (const auto& t : m.tiers) {
        auto integrand = [&](double r) {
            const double pl = std::exp(-t.blockage * r);
            const double los = pl / path_loss(m.channel, LinkState::LOS, r);
            const double nlos = (1.0 - pl) / path_loss(m.channel, LinkState::NLOS, r);
            return 2.0 * M_PI * r * (los + nlos);
        };
        total += t.density * t.tx_power * quad::integrate(integrand, r_a, r_b, 1e-12);
    }
    return total;
}

inline void check_window(const NetworkModel& m, double radius) {
    const double inside = mean_interference_annulus(m, 1.0, radius);
    const double outside = mean_interference_annulus(m, radius, 50.0 * radius);
    if (outside > 0.01 * inside) {
        double r = radius;
        while (r < 1e6 &&
               mean_interference_annulus(m, r, 50.0 * r) >
                   0.01 * mean_interference_annulus(m, 1.0, r))
            r *= 1.5;
        throw SimError("window radius " + std::to_string(radius) +
                       " m too small; need about " + std::to_string(r) + " m");
    }
}

}  // namespace detail

inline Realization sample_network(const NetworkModel& m, double window_radius,
                                  std::uint64_t seed) {
    detail::check_window(m, window_radius);
    Realization real;
    real.window_radius = window_radius;
    real.seed = seed;
    Rng rng(derive_seed(seed, 0, 0x5a4e));

    auto sample_disk = [&](double& x, double& y) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const double r = window_radius * std::sqrt(uni(rng));
        const double phi = 2.0 * M_PI * uni(rng);
        x = r * std::cos(phi);
        y = r * std::sin(phi);
    };

    real.tier_counts.assign(m.num_tiers(), 0);
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        std::poisson_distribution<int> pois(m.tiers[k].density * M_PI * window_radius *
                                            window_radius);
        const int n = pois(rng);
        real.tier_counts[k] = static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) {
            BaseStation b;
            b.tier = k;
            sample_disk(b.x, b.y);
            real.bs.push_back(b);
        }
    }
    std::poisson_distribution<int> upois(m.traffic.user_density * M_PI * window_radius *
                                         window_radius);
    const int nu = upois(rng);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> loss(real.bs.size());
    std::vector<bool> los(real.bs.size());
    for (int i = 0; i < nu; ++i) {
        UserSite u;
        sample_disk(u.x, u.y);
        u.edge = std::hypot(u.x, u.y) > 0.9 * window_radius;

        double best_metric = -1.0;
        std::size_t best = 0;
        for (std::size_t b = 0; b < real.bs.size(); ++b) {
            const auto& bs = real.bs[b];
            const double d = std::max(1.0, std::hypot(u.x - bs.x, u.y - bs.y));
            const bool is_los = uni(rng) < los_probability(d, m.tiers[bs.tier].blockage);
            los[b] = is_los;
            loss[b] = path_loss(m.channel, is_los ? LinkState::LOS : LinkState::NLOS, d);
            const double metric = m.tiers[bs.tier].tx_power * m.tiers[bs.tier].bias / loss[b];
            if (metric > best_metric) {
                best_metric = metric;
                best = b;
            }
        }
        if (best_metric <= 0.0) continue;  // empty window
        u.serving_bs = static_cast<std::uint32_t>(best);
        u.serving_state = los[best] ? LinkState::LOS : LinkState::NLOS;
        u.serving_loss = loss[best];

        // Interferer list sorted by mean received power, truncated at a
        // 1e-4 relative residual.
        std::vector<InterfererLink> links;
        links.reserve(real.bs.size() - 1);
        double total_rx = 0.0;
        for (std::size_t b = 0; b < real.bs.size(); ++b) {
            if (b == best) continue;
            InterfererLink il;
            il.bs = static_cast<std::uint32_t>(b);
            il.tier = static_cast<std::uint8_t>(real.bs[b].tier);
            il.los = los[b];
            il.rx_mean = m.tiers[real.bs[b].tier].tx_power / loss[b];
            total_rx += il.rx_mean;
            links.push_back(il);
        }
        std::sort(links.begin(), links.end(),
                  [](const InterfererLink& a, const InterfererLink& b) {
                      return a.rx_mean > b.rx_mean;
                  });
        double kept = 0.0;
        std::size_t cut = links.size();
        for (std::size_t j = 0; j < links.size(); ++j) {
            kept += links[j].rx_mean;
            if (kept >= (1.0 - 1e-4) * total_rx) {
                cut = j + 1;
                break;
            }
        }
        links.resize(cut);
        u.interferers = std::move(links);
        real.users.push_back(std::move(u));
    }
    return real;
}

namespace detail {

inline double gamma_fading(Rng& rng, int m) {
    std::gamma_distribution<double> g(static_cast<double>(m), 1.0 / m);
    return g(rng);
}

inline double interferer_gain(Rng& rng, const AntennaPattern& a) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    return uni(rng) < a.main_lobe_prob() ? a.g_max : a.g_min;
}

}  // namespace detail

// Fixed-activity (no queue dynamics) per-user conditional STP estimates.
// Validates Theorem 1: interferers toggle on/off per draw with per-tier
// Bernoulli marks, beams and fading are redrawn each draw.
inline std::vector<double> run_static(const Realization& real, const NetworkModel& m,
                                      const ActivityVector& activity, int fading_draws,
                                      std::size_t max_users = 0) {
    check_activity(m, activity);
    if (fading_draws < 1) throw SimError("run_static: fading_draws must be >= 1");
    Rng rng(derive_seed(real.seed, 1, 0xfade));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    const std::size_t n_users =
        max_users == 0 ? real.users.size() : std::min(max_users, real.users.size());
    std::vector<double> stp(n_users, 0.0);
    for (std::size_t ui = 0; ui < n_users; ++ui) {
        const UserSite& u = real.users[ui];
        const int m_serv = nakagami(m.channel, u.serving_state);
        const double sig_base = m.tiers[real.bs[u.serving_bs].tier].tx_power * m.antenna.g_max /
                                u.serving_loss;
        int successes = 0;
        for (int d = 0; d < fading_draws; ++d) {
            double interference = 0.0;
            for (const auto& il : u.interferers) {
                if (uni(rng) >= activity[il.tier]) continue;
                const double g = detail::interferer_gain(rng, m.antenna);
                const double h =
                    detail::gamma_fading(rng, il.los ? m.channel.nakagami_los
                                                     : m.channel.nakagami_nlos);
                interference += il.rx_mean * g * h;
            }
            const double signal = sig_base * detail::gamma_fading(rng, m_serv);
            if (signal > m.sinr_threshold * (m.noise_power + interference)) ++successes;
        }
        stp[ui] = static_cast<double>(successes) / fading_draws;
    }
    return stp;
}

struct SimulationResult {
    std::vector<double> user_stp;       // successes / attempts, post-warmup
    std::vector<int> user_attempts;
    std::vector<std::uint8_t> user_tier;
    std::vector<std::uint8_t> user_edge;
    std::vector<double> bs_activity;    // fraction of active slots
    std::vector<std::uint8_t> bs_tier;
    std::vector<std::uint8_t> bs_counted;  // has users and away from the edge
    std::vector<double> tier_mean_activity;
    std::vector<double> tier_mean_stp;
    // Queue conservation, exact integers: arrivals - departures = backlog.
    long long arrivals = 0, departures = 0, backlog = 0;
};

// Slot-level Geo/G/1 dynamics with random scheduling and head-of-line
// retransmission.
inline SimulationResult run_temporal(const Realization& real, const NetworkModel& m, int slots,
                                     int warmup) {
    if (slots < 10 * warmup) throw SimError("run_temporal: need slots >= 10 * warmup");
    Rng rng(derive_seed(real.seed, 2, 0x7e30));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    const std::size_t n_users = real.users.size();
    const std::size_t n_bs = real.bs.size();
    std::vector<std::vector<std::uint32_t>> roster(n_bs);
    for (std::size_t ui = 0; ui < n_users; ++ui)
        roster[real.users[ui].serving_bs].push_back(static_cast<std::uint32_t>(ui));

    std::vector<std::uint32_t> queue(n_users, 0);
    std::vector<int> successes(n_users, 0), attempts(n_users, 0);
    std::vector<int> active_slots(n_bs, 0);
    std::vector<std::uint8_t> bs_active(n_bs, 0);
    std::vector<std::int32_t> scheduled(n_bs, -1);
    std::vector<std::uint32_t> candidates;
    SimulationResult res;

    const double xi = m.traffic.arrival_prob;
    for (int slot = 0; slot < slots; ++slot) {
        for (std::size_t ui = 0; ui < n_users; ++ui) {
            if (uni(rng) < xi) {
                ++queue[ui];
                ++res.arrivals;
            }
        }
        // Scheduling pass: each BS with a backlogged user picks one uniformly.
        for (std::size_t b = 0; b < n_bs; ++b) {
            scheduled[b] = -1;
            bs_active[b] = 0;
            if (roster[b].empty()) continue;
            candidates.clear();
            for (std::uint32_t ui : roster[b])
                if (queue[ui] > 0) candidates.push_back(ui);
            if (candidates.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            scheduled[b] = static_cast<std::int32_t>(candidates[pick(rng)]);
            bs_active[b] = 1;
            if (slot >= warmup) ++active_slots[b];
        }
        // Transmission pass: SINR with fresh fading and beams per slot.
        for (std::size_t b = 0; b < n_bs; ++b) {
            if (scheduled[b] < 0) continue;
            const std::uint32_t ui = static_cast<std::uint32_t>(scheduled[b]);
            const UserSite& u = real.users[ui];
            double interference = 0.0;
            for (const auto& il : u.interferers) {
                if (!bs_active[il.bs]) continue;
                const double g = detail::interferer_gain(rng, m.antenna);
                const double h =
                    detail::gamma_fading(rng, il.los ? m.channel.nakagami_los
                                                     : m.channel.nakagami_nlos);
                interference += il.rx_mean * g * h;
            }
            const double signal = m.tiers[real.bs[b].tier].tx_power * m.antenna.g_max /
                                  u.serving_loss *
                                  detail::gamma_fading(rng, nakagami(m.channel, u.serving_state));
            const bool success = signal > m.sinr_threshold * (m.noise_power + interference);
            if (slot >= warmup) ++attempts[ui];
            if (success) {
                --queue[ui];
                if (slot >= warmup) ++successes[ui];
            }
        }
    }
    for (std::size_t ui = 0; ui < n_users; ++ui) res.backlog += queue[ui];
    // Conservation is over the whole run; attempts/successes are post-warmup.
    res.departures = res.arrivals - res.backlog;

    const int counted_slots = slots - warmup;
    res.user_stp.resize(n_users, 0.0);
    res.user_attempts.resize(n_users);
    res.user_tier.resize(n_users);
    res.user_edge.resize(n_users);
    for (std::size_t ui = 0; ui < n_users; ++ui) {
        res.user_attempts[ui] = attempts[ui];
        res.user_stp[ui] = attempts[ui] > 0
                               ? static_cast<double>(successes[ui]) / attempts[ui]
                               : 0.0;
        res.user_tier[ui] = static_cast<std::uint8_t>(real.bs[real.users[ui].serving_bs].tier);
        res.user_edge[ui] = real.users[ui].edge ? 1 : 0;
    }
    res.bs_activity.resize(n_bs);
    res.bs_tier.resize(n_bs);
    res.bs_counted.resize(n_bs);
    res.tier_mean_activity.assign(m.num_tiers(), 0.0);
    res.tier_mean_stp.assign(m.num_tiers(), 0.0);
    std::vector<int> tier_bs(m.num_tiers(), 0), tier_users(m.num_tiers(), 0);
    for (std::size_t b = 0; b < n_bs; ++b) {
        res.bs_activity[b] = static_cast<double>(active_slots[b]) / counted_slots;
        res.bs_tier[b] = static_cast<std::uint8_t>(real.bs[b].tier);
        const bool edge = std::hypot(real.bs[b].x, real.bs[b].y) > 0.9 * real.window_radius;
        res.bs_counted[b] = (!roster[b].empty() && !edge) ? 1 : 0;
        if (res.bs_counted[b]) {
            res.tier_mean_activity[real.bs[b].tier] += res.bs_activity[b];
            ++tier_bs[real.bs[b].tier];
        }
    }
    for (std::size_t k = 0; k < m.num_tiers(); ++k)
        if (tier_bs[k] > 0) res.tier_mean_activity[k] /= tier_bs[k];
    for (std::size_t ui = 0; ui < n_users; ++ui) {
        if (res.user_edge[ui] || attempts[ui] == 0) continue;
        res.tier_mean_stp[res.user_tier[ui]] += res.user_stp[ui];
        ++tier_users[res.user_tier[ui]];
    }
    for (std::size_t k = 0; k < m.num_tiers(); ++k)
        if (tier_users[k] > 0) res.tier_mean_stp[k] /= tier_users[k];
    return res;
}

struct EmpiricalMeta {
    MetaDistribution dist;
    std::vector<double> half_width;  // binomial CI half-widths per grid point
    std::size_t sample_size = 0;
};

// F_bar(y) = fraction of per-user conditional-STP estimates above y.
inline EmpiricalMeta empirical_meta(const std::vector<double>& stp_estimates,
                                    const std::vector<double>& y_grid) {
    if (stp_estimates.size() < 100)
        throw SimError("empirical_meta: need at least 100 qualifying users, have " +
                       std::to_string(stp_estimates.size()));
    EmpiricalMeta out;
    out.sample_size = stp_estimates.size();
    out.dist.kind = MetaDistribution::Kind::Tabulated;
    out.dist.provenance = MetaProvenance::Empirical;
    out.dist.grid = y_grid;
    const double n = static_cast<double>(stp_estimates.size());
    for (double y : y_grid) {
        std::size_t above = 0;
        for (double p : stp_estimates)
            if (p > y) ++above;
        const double f = above / n;
        out.dist.values.push_back(f);
        out.half_width.push_back(1.96 * std::sqrt(std::max(f * (1.0 - f), 1.0 / n) / n));
    }
    return out;
}

// ---- Ensemble drivers -------------------------------------------------------
// Realizations run independently (optionally across threads) and reduce in
// realization order, so results are bit-identical for any thread count.

struct EnsembleOptions {
    int realizations = 100;
    double window_radius = 2000.0;
    std::uint64_t seed = 1;
    int threads = 1;
    int fading_draws = 200;       // static mode
    std::size_t max_users = 0;    // static mode; 0 = all users
    int slots = 5000;             // temporal mode
    int warmup = 500;
    int min_attempts = 50;        // inclusion threshold for the meta estimate
};

namespace detail {

template <typename Fn>
void parallel_realizations(int realizations, int threads, const Fn& body) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int i = 0; i < realizations; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < realizations; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

struct StaticEnsemble {
    std::vector<std::vector<double>> tier_stp;  // pooled per-user estimates
    std::vector<double> tier_mean_stp;
    std::vector<double> tier_assoc_fraction;    // empirical association split
    std::vector<std::array<double, 2>> tier_state_fraction;
    std::size_t total_users = 0;
};

inline StaticEnsemble run_static_ensemble(const NetworkModel& m, const ActivityVector& activity,
                                          const EnsembleOptions& opt) {
    const std::size_t K = m.num_tiers();
    std::vector<std::vector<std::vector<double>>> per_real(opt.realizations);
    std::vector<std::vector<std::size_t>> assoc_counts(opt.realizations);
    std::vector<std::vector<std::array<std::size_t, 2>>> state_counts(opt.realizations);
    detail::parallel_realizations(opt.realizations, opt.threads, [&](int i) {
        const auto real = sample_network(m, opt.window_radius,
                                         derive_seed(opt.seed, static_cast<std::uint64_t>(i), 1));
        const auto stp = run_static(real, m, activity, opt.fading_draws, opt.max_users);
        per_real[i].assign(K, {});
        assoc_counts[i].assign(K, 0);
        state_counts[i].assign(K, {0, 0});
        for (std::size_t ui = 0; ui < real.users.size(); ++ui) {
            const auto& u = real.users[ui];
            const std::size_t k = real.bs[u.serving_bs].tier;
            if (u.edge) continue;
            ++assoc_counts[i][k];
            ++state_counts[i][k][u.serving_state == LinkState::LOS ? 0 : 1];
            if (ui < stp.size()) per_real[i][k].push_back(stp[ui]);
        }
    });
    StaticEnsemble out;
    out.tier_stp.assign(K, {});
    out.tier_mean_stp.assign(K, 0.0);
    out.tier_assoc_fraction.assign(K, 0.0);
    out.tier_state_fraction.assign(K, {0.0, 0.0});
    std::size_t total = 0;
    for (int i = 0; i < opt.realizations; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            out.tier_stp[k].insert(out.tier_stp[k].end(), per_real[i][k].begin(),
                                   per_real[i][k].end());
            out.tier_assoc_fraction[k] += assoc_counts[i][k];
            out.tier_state_fraction[k][0] += state_counts[i][k][0];
            out.tier_state_fraction[k][1] += state_counts[i][k][1];
            total += assoc_counts[i][k];
        }
    out.total_users = total;
    for (std::size_t k = 0; k < K; ++k) {
        out.tier_assoc_fraction[k] /= std::max<std::size_t>(1, total);
        for (int s = 0; s < 2; ++s) out.tier_state_fraction[k][s] /= std::max<std::size_t>(1, total);
        if (!out.tier_stp[k].empty())
            out.tier_mean_stp[k] =
                std::accumulate(out.tier_stp[k].begin(), out.tier_stp[k].end(), 0.0) /
                out.tier_stp[k].size();
    }
    return out;
}

struct TemporalEnsemble {
    std::vector<double> tier_mean_activity;
    std::vector<double> tier_mean_stp;
    std::vector<std::vector<double>> tier_stp;  // pooled, attempts >= min_attempts, non-edge
    long long arrivals = 0, departures = 0, backlog = 0;
};

inline TemporalEnsemble run_temporal_ensemble(const NetworkModel& m, const EnsembleOptions& opt) {
    const std::size_t K = m.num_tiers();
    std::vector<SimulationResult> results(opt.realizations);
    detail::parallel_realizations(opt.realizations, opt.threads, [&](int i) {
        const auto real = sample_network(m, opt.window_radius,
                                         derive_seed(opt.seed, static_cast<std::uint64_t>(i), 2));
        results[i] = run_temporal(real, m, opt.slots, opt.warmup);
    });
    TemporalEnsemble out;
    out.tier_mean_activity.assign(K, 0.0);
    out.tier_mean_stp.assign(K, 0.0);
    out.tier_stp.assign(K, {});
    std::vector<int> act_counts(K, 0), stp_counts(K, 0);
    for (const auto& r : results) {
        out.arrivals += r.arrivals;
        out.departures += r.departures;
        out.backlog += r.backlog;
        for (std::size_t k = 0; k < K; ++k) {
            // Realization-weighted means; each realization contributes its
            // per-tier mean once (equal spatial weight).
            if (r.tier_mean_activity[k] >= 0.0) {
                out.tier_mean_activity[k] += r.tier_mean_activity[k];
                ++act_counts[k];
            }
        }
        for (std::size_t ui = 0; ui < r.user_stp.size(); ++ui) {
            if (r.user_edge[ui] || r.user_attempts[ui] < opt.min_attempts) continue;
            out.tier_stp[r.user_tier[ui]].push_back(r.user_stp[ui]);
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (act_counts[k] > 0) out.tier_mean_activity[k] /= act_counts[k];
        if (!out.tier_stp[k].empty())
            out.tier_mean_stp[k] =
                std::accumulate(out.tier_stp[k].begin(), out.tier_stp[k].end(), 0.0) /
                out.tier_stp[k].size();
    }
    return out;
}

}  // namespace metasinr

#endif
