#ifndef METASINR_GEOMETRY_HPP
#define METASINR_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "metasinr/model.hpp"
#include "metasinr/quadrature.hpp"

namespace metasinr {

enum class LinkState { LOS, NLOS };
inline constexpr std::array<LinkState, 2> link_states{LinkState::LOS, LinkState::NLOS};

inline double los_probability(double distance, double blockage) {
    if (distance < 0.0) throw std::domain_error("los_probability: negative distance");
    return std::exp(-blockage * distance);
}

inline double state_probability(LinkState s, double distance, double blockage) {
    const double pl = los_probability(distance, blockage);
    return s == LinkState::LOS ? pl : 1.0 - pl;
}

inline double path_loss_exponent(const ChannelParams& c, LinkState s) {
    return s == LinkState::LOS ? c.alpha_los : c.alpha_nlos;
}
inline double path_loss_intercept(const ChannelParams& c, LinkState s) {
    return s == LinkState::LOS ? c.kappa_los : c.kappa_nlos;
}
inline int nakagami(const ChannelParams& c, LinkState s) {
    return s == LinkState::LOS ? c.nakagami_los : c.nakagami_nlos;
}

inline double path_loss(const ChannelParams& c, LinkState s, double distance) {
    return path_loss_intercept(c, s) * std::pow(distance, path_loss_exponent(c, s));
}

// Distance whose path loss equals `level` under state s.
inline double loss_to_distance(const ChannelParams& c, LinkState s, double level) {
    return std::pow(level / path_loss_intercept(c, s), 1.0 / path_loss_exponent(c, s));
}

// Intensity measure of the path-loss process: Lambda_{k,rho}([0, l)).
// The LOS branch is the loss-domain image of the exp(-beta r)-thinned PPP;
// the NLOS branch is the unblocked disc measure minus the LOS-form term.
inline double intensity(const TierParams& t, const ChannelParams& c, LinkState s, double level) {
    if (level < 0.0) throw std::domain_error("intensity: negative level");
    if (level == 0.0) return 0.0;
    const double beta = t.blockage;
    const double r = loss_to_distance(c, s, level);
    const double br = beta * r;
    const double scale = 2.0 * M_PI * t.density / (beta * beta);
    // blocked = 1 - e^{-x}(1+x) = x^2/2 - x^3/3 + x^4/8 - x^5/30 + x^6/144 - ...
    // Both it and the NLOS complement x^2/2 - blocked cancel badly for small x,
    // so each gets its own series branch.
    if (s == LinkState::LOS) {
        double blocked;
        if (br < 0.05)
            blocked = br * br *
                      (0.5 + br * (-1.0 / 3.0 + br * (0.125 + br * (-1.0 / 30.0 + br / 144.0))));
        else
            blocked = 1.0 - std::exp(-br) * (1.0 + br);
        return scale * blocked;
    }
    if (br < 0.05) {
        const double g = br * br * br *
                         (1.0 / 3.0 +
                          br * (-0.125 + br * (1.0 / 30.0 + br * (-1.0 / 144.0 + br / 840.0))));
        return scale * g;
    }
    const double disc = 0.5 * scale * br * br;
    const double los_form = scale * (1.0 - std::exp(-br) * (1.0 + br));
    return std::max(0.0, disc - los_form);
}

// d/dl Lambda_{k,rho}([0, l)). Equals 2 pi lambda r p_rho(r) dr/dl with
// r = (l/kappa)^{1/alpha}.
inline double intensity_derivative(const TierParams& t, const ChannelParams& c, LinkState s,
                                   double level) {
    if (level <= 0.0) throw std::domain_error("intensity_derivative: level must be > 0");
    const double alpha = path_loss_exponent(c, s);
    const double r = loss_to_distance(c, s, level);
    const double p = state_probability(s, r, t.blockage);
    return 2.0 * M_PI * t.density * r * r / (alpha * level) * p;
}

// Association bias ratio: the factor scaling a tier-k serving level into the
// competing tier-j level. Candidate serving links are beam-aligned, so the
// antenna gains cancel.
inline double bias_ratio(const NetworkModel& m, std::size_t j, std::size_t k) {
    return (m.tiers[j].tx_power * m.tiers[j].bias) / (m.tiers[k].tx_power * m.tiers[k].bias);
}

// Sum over tiers and states of Lambda_j([0, ratio_jk * l)): the exponent of
// the probability that no BS anywhere beats a tier-k link at loss l.
inline double competitor_exponent(const NetworkModel& m, std::size_t k, double level) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m.num_tiers(); ++j) {
        const double lj = bias_ratio(m, j, k) * level;
        for (LinkState s : link_states) sum += intensity(m.tiers[j], m.channel, s, lj);
    }
    return sum;
}

// Joint density that the tier-k state-rho nearest-in-loss BS sits at loss l
// and wins the biased association across all tiers and states.
inline double serving_pathloss_pdf(const NetworkModel& m, std::size_t k, LinkState rho,
                                   double level) {
    if (level <= 0.0) throw std::domain_error("serving_pathloss_pdf: level must be > 0");
    return intensity_derivative(m.tiers[k], m.channel, rho, level) *
           std::exp(-competitor_exponent(m, k, level));
}

namespace detail {

// Serving level beyond which exp(-competitor_exponent) < 1e-14 for tier k.
inline double serving_level_cutoff(const NetworkModel& m, std::size_t k) {
    double lo = 1.0, hi = 1.0;
    while (competitor_exponent(m, k, hi) < 40.0) {
        hi *= 4.0;
        if (hi > 1e300) return hi;
    }
    while (competitor_exponent(m, k, lo) > 40.0 && lo > 1e-300) lo /= 4.0;
    for (int i = 0; i < 200 && hi / lo > 1.0001; ++i) {
        double mid = std::sqrt(lo * hi);
        (competitor_exponent(m, k, mid) < 40.0 ? lo : hi) = mid;
    }
    return hi;
}

// Integrates g(l) f-style integrands over the serving level on a log axis.
inline double integrate_serving_level(const NetworkModel& m, std::size_t k,
                                      const std::function<double(double)>& g,
                                      double tol = 1e-9) {
    const double l_hi = serving_level_cutoff(m, k);
    // Below kappa * (1 mm)^alpha the intensity mass is negligible for any
    // sane density.
    const double l_lo = std::min(path_loss(m.channel, LinkState::LOS, 1e-3),
                                 path_loss(m.channel, LinkState::NLOS, 1e-3));
    return quad::integrate([&](double u) { const double l = std::exp(u); return g(l) * l; },
                           std::log(l_lo), std::log(l_hi), tol);
}

}  // namespace detail

// Per-(tier, state) and per-tier association probabilities.
struct AssociationTable {
    std::vector<std::array<double, 2>> per_state;  // [tier][LOS, NLOS]
    std::vector<double> per_tier;

    double a(std::size_t k, LinkState s) const {
        return per_state[k][s == LinkState::LOS ? 0 : 1];
    }
    double total() const {
        double t = 0.0;
        for (double a : per_tier) t += a;
        return t;
    }
};

inline AssociationTable association_probabilities(const NetworkModel& m) {
    AssociationTable tab;
    tab.per_state.resize(m.num_tiers());
    tab.per_tier.assign(m.num_tiers(), 0.0);
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        for (LinkState s : link_states) {
            const double a = detail::integrate_serving_level(
                m, k, [&](double l) { return serving_pathloss_pdf(m, k, s, l); });
            tab.per_state[k][s == LinkState::LOS ? 0 : 1] = a;
            tab.per_tier[k] += a;
        }
    }
    return tab;
}

inline double association_probability(const NetworkModel& m, std::size_t k) {
    return association_probabilities(m).per_tier[k];
}

}  // namespace metasinr

#endif
