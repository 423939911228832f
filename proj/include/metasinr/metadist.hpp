#ifndef METASINR_METADIST_HPP
#define METASINR_METADIST_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "metasinr/moments.hpp"

namespace metasinr {

enum class MetaProvenance { GilPelaez, BetaMatched, Empirical };

// CCDF of the conditional STP over [0,1], either beta-parameterized,
// tabulated on a grid, or a point mass (degenerate variance).
struct MetaDistribution {
    enum class Kind { Beta, Tabulated, Point };
    Kind kind = Kind::Beta;
    MetaProvenance provenance = MetaProvenance::BetaMatched;
    double a = 1.0, b = 1.0;          // Kind::Beta
    double point = 0.0;               // Kind::Point
    std::vector<double> grid, values; // Kind::Tabulated, values = CCDF

    double ccdf(double y) const {
        if (y <= 0.0) return 1.0;
        if (y >= 1.0) return 0.0;
        switch (kind) {
            case Kind::Beta: return 1.0 - boost::math::ibeta(a, b, y);
            case Kind::Point: return y < point ? 1.0 : 0.0;
            case Kind::Tabulated: {
                auto it = std::lower_bound(grid.begin(), grid.end(), y);
                if (it == grid.begin()) return values.front();
                if (it == grid.end()) return values.back();
                const std::size_t i = static_cast<std::size_t>(it - grid.begin());
                const double t = (y - grid[i - 1]) / (grid[i] - grid[i - 1]);
                return values[i - 1] + t * (values[i] - values[i - 1]);
            }
        }
        return 0.0;
    }
    double mean() const {
        switch (kind) {
            case Kind::Beta: return a / (a + b);
            case Kind::Point: return point;
            case Kind::Tabulated: {
                // E[P] = int_0^1 ccdf(y) dy, trapezoid on the grid.
                double m = 0.0, prev_y = 0.0, prev_v = 1.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    m += 0.5 * (prev_v + values[i]) * (grid[i] - prev_y);
                    prev_y = grid[i];
                    prev_v = values[i];
                }
                m += 0.5 * prev_v * (1.0 - prev_y);
                return m;
            }
        }
        return 0.0;
    }
};

struct GilPelaezDiagnostics {
    double clamp_magnitude = 0.0;
    double tail_error = 0.0;
    bool converged = true;
};

// F_bar(y) = 1/2 + (1/pi) int_0^inf Im(e^{-jt ln y} M_{jt}) / t dt.
// Head by adaptive panels; tail by lobe splitting at the integrand's sign
// changes with Euler acceleration, so step-like distributions (whose M_{jt}
// never decays) still come out to ~1e-4 within the t <= 500 cap.
inline double gil_pelaez_ccdf(const std::function<std::complex<double>(double)>& moment_jt,
                              double y, GilPelaezDiagnostics* diag = nullptr) {
    if (y <= 0.0) return 1.0;
    if (y >= 1.0) return 0.0;
    const double lny = std::log(y);
    auto integrand = [&](double t) {
        const std::complex<double> m = moment_jt(t);
        const std::complex<double> phase = std::exp(std::complex<double>(0.0, -t * lny));
        return (phase * m).imag() / t;
    };
    const double t_break = 32.0, t_max = 500.0;
    double head = 0.0;
    int dead_panels = 0;
    double t = 1e-8;
    bool reached_break = true;
    for (double panel_end = 1.0; panel_end <= t_break; panel_end += 1.0) {
        const double p = quad::integrate(integrand, t, panel_end, 1e-9);
        head += p;
        t = panel_end;
        dead_panels = (std::abs(p) < 1e-9) ? dead_panels + 1 : 0;
        if (dead_panels >= 3) { reached_break = false; break; }
    }
    double tail = 0.0, tail_err = 0.0;
    bool converged = true;
    if (reached_break) {
        auto osc = quad::oscillatory_tail(integrand, t_break, t_max, 1e-7);
        tail = osc.value;
        tail_err = osc.error_estimate;
        converged = osc.converged;
    }
    double v = 0.5 + (head + tail) / M_PI;
    const double clamped = std::clamp(v, 0.0, 1.0);
    if (diag) {
        diag->clamp_magnitude = std::abs(v - clamped);
        diag->tail_error = tail_err;
        diag->converged = converged;
    }
    return clamped;
}

// Beta shape parameters from the first two moments:
// b = (M1 - M2)(1 - M1) / (M2 - M1^2), a = M1 b / (1 - M1).
inline MetaDistribution beta_match(double m1, double m2) {
    if (m1 >= 1.0 || m1 <= 0.0) {
        if (m1 > 1.0 + 1e-9 || m1 < -1e-9)
            throw std::domain_error("beta_match: need 0 <= M1 <= 1");
        MetaDistribution d;
        d.kind = MetaDistribution::Kind::Point;
        d.point = std::clamp(m1, 0.0, 1.0);
        return d;
    }
    if (m2 > m1 + 1e-12 || m2 < m1 * m1 - 1e-12)
        throw std::domain_error("beta_match: need 0 < M1 < 1 and M1^2 <= M2 <= M1");
    const double var = m2 - m1 * m1;
    if (var <= 1e-14) {
        MetaDistribution d;
        d.kind = MetaDistribution::Kind::Point;
        d.point = m1;
        return d;
    }
    MetaDistribution d;
    d.kind = MetaDistribution::Kind::Beta;
    d.b = (m1 - m2) * (1.0 - m1) / var;
    d.a = m1 * d.b / (1.0 - m1);
    return d;
}

// Size-biased Voronoi user-count model for one tier.
struct UserCountModel {
    std::size_t tier = 0;
    double load = 0.0;          // mu_k = lambda_u A_k / (3.5 lambda_k)
    std::vector<double> pmf;    // pmf[nu], nu = 0 .. nu_max
    double p_zero = 0.0;        // pmf[0], the void-BS mass

    // E over nu >= 1 of g(nu), weighted by U(nu)/(1 - U(0)).
    double conditional_expect(const std::function<double(int)>& g) const {
        double s = 0.0;
        for (std::size_t nu = 1; nu < pmf.size(); ++nu)
            s += pmf[nu] * g(static_cast<int>(nu));
        return s / (1.0 - p_zero);
    }
};

// U_k(nu) for nu >= 1: (1/Gamma(nu)) mu^{nu-1} Gamma(3.5+nu)/Gamma(4.5)
// (1+mu)^{-3.5-nu}. U_k(0) carries the remaining mass so the PMF normalizes.
inline double user_count_pmf_term(double mu, int nu) {
    if (nu < 0) throw std::domain_error("user_count_pmf: nu must be >= 0");
    if (nu == 0) return 0.0;  // resolved via normalization in build_user_counts
    const double log_term = -std::lgamma(static_cast<double>(nu)) +
                            (nu - 1) * std::log(mu) + std::lgamma(3.5 + nu) -
                            std::lgamma(4.5) - (3.5 + nu) * std::log1p(mu);
    return std::exp(log_term);
}

inline UserCountModel build_user_counts(const NetworkModel& m, std::size_t k, double assoc_k,
                                        double tail_tol = 1e-6) {
    UserCountModel uc;
    uc.tier = k;
    uc.load = m.traffic.user_density * assoc_k / (3.5 * m.tiers[k].density);
    uc.pmf.push_back(0.0);
    double cum = 0.0;
    for (int nu = 1; nu < 100000; ++nu) {
        const double p = user_count_pmf_term(uc.load, nu);
        uc.pmf.push_back(p);
        cum += p;
        // Geometric-tail bound once terms decay.
        if (nu > 4) {
            const double ratio = uc.pmf[nu] / uc.pmf[nu - 1];
            if (ratio < 1.0 && uc.pmf[nu] * ratio / (1.0 - ratio) < tail_tol) break;
        }
    }
    uc.p_zero = std::max(0.0, 1.0 - cum);
    uc.pmf[0] = uc.p_zero;
    return uc;
}

inline double user_count_pmf(const NetworkModel& m, std::size_t k, int nu) {
    const double ak = association_probability(m, k);
    const auto uc = build_user_counts(m, k, ak);
    if (nu >= static_cast<int>(uc.pmf.size())) return 0.0;
    return uc.pmf[nu];
}

namespace detail {

// E[min(1, c/P)] for P distributed per `meta`.
inline double expected_utilization(const MetaDistribution& meta, double c) {
    if (c <= 0.0) return 0.0;
    if (c >= 1.0) return 1.0;
    switch (meta.kind) {
        case MetaDistribution::Kind::Point:
            return meta.point <= c ? 1.0 : c / meta.point;
        case MetaDistribution::Kind::Beta: {
            const double a = meta.a, b = meta.b;
            const double cdf_c = boost::math::ibeta(a, b, c);
            if (a > 1.0 + 1e-9) {
                // int_c^1 p^{a-2}(1-p)^{b-1} dp / B(a,b) in closed form.
                const double integral =
                    (a + b - 1.0) / (a - 1.0) * (1.0 - boost::math::ibeta(a - 1.0, b, c));
                return std::min(1.0, cdf_c + c * integral);
            }
            // By parts: E[min(1,c/P)] = c + c int_c^1 F(p)/p^2 dp.  The CDF
            // integrand is bounded, unlike the density, which blows up at
            // both endpoints when a, b < 1.
            const double integral = quad::integrate(
                [&](double p) { return boost::math::ibeta(a, b, p) / (p * p); }, c, 1.0, 1e-10);
            return std::min(1.0, c + c * integral);
        }
        case MetaDistribution::Kind::Tabulated: {
            // E[min(1,c/P)] = 1 - c Fbar(1) - c int_c^1 Fbar(p)/p^2 dp (by parts).
            const int n = 400;
            double integral = 0.0;
            double prev = meta.ccdf(c) / (c * c);
            for (int i = 1; i <= n; ++i) {
                const double p = c + (1.0 - c) * i / n;
                const double cur = meta.ccdf(p) / (p * p);
                integral += 0.5 * (prev + cur) * (1.0 - c) / n;
                prev = cur;
            }
            return std::clamp(1.0 - c * meta.ccdf(1.0) - c * integral, 0.0, 1.0);
        }
    }
    return 0.0;
}

}  // namespace detail

// E[q_{a,k}] = sum_{nu>=1} U(nu)/(1-U(0)) E[min(1, nu xi / P)].
inline double mean_active_probability(const NetworkModel& m, std::size_t /*k*/,
                                      const MetaDistribution& meta,
                                      const UserCountModel& users) {
    const double xi = m.traffic.arrival_prob;
    if (xi <= 0.0) return 0.0;
    return std::clamp(users.conditional_expect([&](int nu) {
        return detail::expected_utilization(meta, nu * xi);
    }), 0.0, 1.0);
}

// Utilization with no retransmissions: E[min(nu xi, 1)] over the user counts.
// This is both the fixed-point initializer and the degree-1 favorable
// activity.
inline double no_retransmission_activity(const NetworkModel& m, const UserCountModel& users) {
    const double xi = m.traffic.arrival_prob;
    return std::clamp(users.conditional_expect([&](int nu) {
        return std::min(nu * xi, 1.0);
    }), 0.0, 1.0);
}

struct FixedPointTrace {
    int iteration = 0;
    ActivityVector activity;
    double change_norm = 0.0;
};

struct FixedPointState {
    int iterations = 0;
    bool converged = false;
    bool oscillating = false;
    ActivityVector activity;                 // converged E[q_{a,k}]
    std::vector<MetaDistribution> meta;      // per-tier, conditioned on tier k
    std::vector<double> m1, m2;              // per-tier conditioned moments
    std::vector<FixedPointTrace> trajectory;
    AssociationTable assoc;
    std::vector<UserCountModel> users;
};

namespace detail {

// Per-tier conditioned M1, M2 and the beta-matched meta under a fixed
// activity vector. One pass over the (k, rho) W series covers both moments.
inline void tier_meta_under_activity(const NetworkModel& m, const ActivityVector& q,
                                     std::vector<MetaDistribution>& meta,
                                     std::vector<double>& m1, std::vector<double>& m2,
                                     const AssociationTable& assoc) {
    const std::size_t K = m.num_tiers();
    meta.resize(K);
    m1.assign(K, 0.0);
    m2.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        double n1 = 0.0, n2 = 0.0;
        for (LinkState s : link_states) {
            const int i = s == LinkState::LOS ? 0 : 1;
            auto series = stp_w_series(m, k, s, q, 3);
            // M1 = W0 - W1, M2 = W0 - 2 W1 + W2.
            n1 += assoc.per_state[k][i] * (series.w[0] - series.w[1]);
            n2 += assoc.per_state[k][i] * (series.w[0] - 2.0 * series.w[1] + series.w[2]);
        }
        m1[k] = std::clamp(n1 / assoc.per_tier[k], 0.0, 1.0);
        m2[k] = std::clamp(n2 / assoc.per_tier[k], 0.0, m1[k]);
        meta[k] = beta_match(m1[k], m2[k]);
        meta[k].provenance = MetaProvenance::BetaMatched;
    }
}

}  // namespace detail

// Queue-coupled fixed point: activities -> moments -> beta meta -> activities,
// damped 0.5/0.5, until max per-tier change < 1e-5 or 200 iterations.
inline FixedPointState solve_fixed_point(const NetworkModel& m, double tol = 1e-5,
                                         int max_iter = 200) {
    FixedPointState st;
    const std::size_t K = m.num_tiers();
    st.assoc = association_probabilities(m);
    st.users.reserve(K);
    for (std::size_t k = 0; k < K; ++k)
        st.users.push_back(build_user_counts(m, k, st.assoc.per_tier[k]));

    st.activity.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
        st.activity[k] = no_retransmission_activity(m, st.users[k]);
    if (m.traffic.arrival_prob <= 0.0) {
        detail::tier_meta_under_activity(m, st.activity, st.meta, st.m1, st.m2, st.assoc);
        st.converged = true;
        return st;
    }

    std::vector<double> change_history;
    for (int it = 1; it <= max_iter; ++it) {
        detail::tier_meta_under_activity(m, st.activity, st.meta, st.m1, st.m2, st.assoc);
        ActivityVector next(K);
        double change = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double raw = mean_active_probability(m, k, st.meta[k], st.users[k]);
            next[k] = 0.5 * st.activity[k] + 0.5 * raw;  // damping
            change = std::max(change, std::abs(next[k] - st.activity[k]));
        }
        st.activity = next;
        st.iterations = it;
        st.trajectory.push_back({it, next, change});
        change_history.push_back(change);
        if (change < tol) {
            st.converged = true;
            break;
        }
    }
    if (!st.converged && change_history.size() >= 4) {
        // Two-cycle detection over the last four iterations.
        const std::size_t n = change_history.size();
        st.oscillating = std::abs(change_history[n - 1] - change_history[n - 3]) < 1e-9 &&
                         std::abs(change_history[n - 2] - change_history[n - 4]) < 1e-9;
    }
    // Final meta under the converged activities.
    detail::tier_meta_under_activity(m, st.activity, st.meta, st.m1, st.m2, st.assoc);
    return st;
}

enum class BoundSystem { Dominant, Favorable };

// Dominant / favorable interference-coupling bounds. Degree 1 fixes the
// interferer activities directly (1, or the no-retransmission utilization);
// degree 2 re-derives the activities from the degree-1 meta and recomputes.
inline std::vector<MetaDistribution> bound_meta(const NetworkModel& m, BoundSystem system,
                                                int degree) {
    if (degree != 1 && degree != 2) throw std::invalid_argument("bound_meta: degree must be 1 or 2");
    const std::size_t K = m.num_tiers();
    const AssociationTable assoc = association_probabilities(m);
    std::vector<UserCountModel> users;
    for (std::size_t k = 0; k < K; ++k) users.push_back(build_user_counts(m, k, assoc.per_tier[k]));

    ActivityVector q(K, 1.0);
    if (system == BoundSystem::Favorable)
        for (std::size_t k = 0; k < K; ++k) q[k] = no_retransmission_activity(m, users[k]);

    std::vector<MetaDistribution> meta;
    std::vector<double> m1, m2;
    detail::tier_meta_under_activity(m, q, meta, m1, m2, assoc);
    if (degree == 1) return meta;

    ActivityVector q2(K);
    for (std::size_t k = 0; k < K; ++k)
        q2[k] = mean_active_probability(m, k, meta[k], users[k]);
    detail::tier_meta_under_activity(m, q2, meta, m1, m2, assoc);
    return meta;
}

// Var[P] = M2 - M1^2 under a fixed activity vector.
inline double variance_conditional_stp(const NetworkModel& m, const ActivityVector& activity) {
    const TierMoments t1 = tier_moments(m, 1.0, activity);
    TierMoments t2 = t1;
    for (std::size_t k = 0; k < m.num_tiers(); ++k)
        for (LinkState s : link_states)
            t2.per_state[k][s == LinkState::LOS ? 0 : 1] =
                conditional_stp_moment(m, k, s, 2.0, activity);
    const double var = t2.total().real() - t1.total().real() * t1.total().real();
    return std::max(0.0, var);
}

}  // namespace metasinr

#endif
