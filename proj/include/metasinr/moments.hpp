#ifndef METASINR_MOMENTS_HPP
#define METASINR_MOMENTS_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "metasinr/geometry.hpp"
#include "metasinr/model.hpp"
#include "metasinr/quadrature.hpp"
#include "metasinr/special.hpp"

namespace metasinr {

// Per-tier interferer activity probabilities q_{a,k}.
using ActivityVector = std::vector<double>;

inline void check_activity(const NetworkModel& m, const ActivityVector& q) {
    if (q.size() != m.num_tiers())
        throw std::invalid_argument("activity vector size does not match tier count");
    for (double v : q)
        if (v < 0.0 || v > 1.0) throw std::domain_error("activity probability outside [0,1]");
}

inline ActivityVector full_buffer_activity(const NetworkModel& m) {
    return ActivityVector(m.num_tiers(), 1.0);
}

struct MomentResult {
    std::complex<double> order;
    std::complex<double> value;
    int terms_used = 0;                     // tau1 terms actually summed
    double truncation_error_estimate = 0.0; // |last term| + numeric-cancellation bound
};

// zeta_rho = (m!)^{-1/m}, the tightness constant of the Gamma-CDF bound.
inline double gamma_bound_zeta(int m) {
    return std::pow(std::tgamma(static_cast<double>(m) + 1.0), -1.0 / m);
}

// Laplace argument pairing the serving link at loss l with the Gamma bound:
// s = m_rho * theta * l / (P_k G_max).
inline double laplace_s(const NetworkModel& m, std::size_t k, LinkState rho, double level) {
    return nakagami(m.channel, rho) * m.sinr_threshold * level /
           (m.tiers[k].tx_power * m.antenna.g_max);
}

namespace detail {

// x^{-mu} for small positive integer mu, avoiding std::pow in the hot loop.
inline double inv_ipow(double x, int mu) {
    double p = 1.0;
    for (int i = 0; i < mu; ++i) p *= x;
    return 1.0 / p;
}

// int_{x0}^inf [1 - E_G (1 + a P_j G / (M_u x))^{-M_u}] Lambda'_{j,u}(dx) for
// a whole batch of Laplace arguments at once: the per-unit-activity exponents
// of the interference Laplace transform. One adaptive pass over interferer
// distance r (thinned intensity 2 pi lambda r p_u(r) dr) serves every a, which
// is what makes the tau2-indexed moment sums affordable.
inline void laplace_exponent_multi(const NetworkModel& m, std::size_t j, LinkState u, double x0,
                                   const std::vector<double>& a_vals, std::vector<double>& out,
                                   double tol = 1e-9) {
    const std::size_t n = a_vals.size();
    out.assign(n, 0.0);
    double a_max = 0.0;
    for (double a : a_vals) {
        if (a < 0.0) throw std::domain_error("laplace_exponent: need a >= 0");
        a_max = std::max(a_max, a);
    }
    if (a_max == 0.0) return;

    const double alpha = path_loss_exponent(m.channel, u);
    const double kappa = path_loss_intercept(m.channel, u);
    const int mu = nakagami(m.channel, u);
    const double r0 = std::pow(x0 / kappa, 1.0 / alpha);
    const double pj = m.tiers[j].tx_power;
    const double beta = m.tiers[j].blockage;
    const double lambda = m.tiers[j].density;

    struct GainAtom { double g, p; };
    GainAtom atoms[2];
    int n_atoms;
    if (m.interferer_gain_averaging) {
        const double pm = m.antenna.main_lobe_prob();
        atoms[0] = {m.antenna.g_max, pm};
        atoms[1] = {m.antenna.g_min, 1.0 - pm};
        n_atoms = 2;
    } else {
        atoms[0] = {m.antenna.g_max, 1.0};
        n_atoms = 1;
    }

    // Map [r0, inf) to t in [0, 1) with a scale matching where the integrand
    // lives: the blockage decay length for LOS, the radius where the largest
    // argument stops mattering for NLOS.
    const double r_star = std::pow(a_max * pj * atoms[0].g / (mu * kappa), 1.0 / alpha);
    const double scale = std::max({1.0, 1.0 / beta, r_star});

    auto integrand = [&](double t, std::vector<double>& fv) {
        const double it = 1.0 - t;
        const double r = r0 + scale * t / it;
        const double jac = scale / (it * it);
        const double loss = kappa * std::pow(r, alpha);
        const double pl = std::exp(-beta * r);
        const double p_state = (u == LinkState::LOS) ? pl : 1.0 - pl;
        const double base = 2.0 * M_PI * lambda * r * p_state * jac;
        if (base == 0.0 || !std::isfinite(base)) {
            std::fill(fv.begin(), fv.end(), 0.0);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (a_vals[i] == 0.0) {
                fv[i] = 0.0;
                continue;
            }
            double kept = 0.0;
            for (int at = 0; at < n_atoms; ++at)
                kept += atoms[at].p *
                        inv_ipow(1.0 + a_vals[i] * pj * atoms[at].g / (mu * loss), mu);
            fv[i] = (1.0 - kept) * base;
        }
    };
    out = quad::integrate_vector(integrand, 0.0, 1.0 - 1e-14, n, tol);
    for (double v : out)
        if (!std::isfinite(v))
            throw QuadratureError("laplace_exponent: divergent interference integral");
}

inline double laplace_exponent(const NetworkModel& m, std::size_t j, LinkState u, double x0,
                               double a) {
    if (a == 0.0) return 0.0;
    std::vector<double> out;
    laplace_exponent_multi(m, j, u, x0, std::vector<double>{a}, out, 1e-10);
    return out[0];
}

}  // namespace detail

// E[exp(-a I_{j,u})] for the interference from tier j, state u, seen by a user
// served at loss l from tier k with state rho. Interferers closer in biased
// loss than the serving link are excluded by the association rule.
inline std::complex<double> laplace_interference(const NetworkModel& m, std::size_t k,
                                                 LinkState /*rho*/, double level, std::size_t j,
                                                 LinkState u, std::complex<double> a,
                                                 const ActivityVector& activity) {
    if (level <= 0.0) throw std::domain_error("laplace_interference: level must be > 0");
    if (a.real() < 0.0)
        throw std::domain_error("laplace_interference: Re(a) must be >= 0");
    const double x0 = bias_ratio(m, j, k) * level;
    if (activity[j] == 0.0 || a == 0.0) return 1.0;
    if (a.imag() == 0.0)
        return std::exp(-activity[j] * detail::laplace_exponent(m, j, u, x0, a.real()));
    // Complex argument: integrate real and imaginary exponent parts separately.
    const double alpha = path_loss_exponent(m.channel, u);
    const double kappa = path_loss_intercept(m.channel, u);
    const int mu = nakagami(m.channel, u);
    const double r0 = std::pow(x0 / kappa, 1.0 / alpha);
    const double pm = m.antenna.main_lobe_prob();
    auto term = [&](double r) {
        const double loss = kappa * std::pow(r, alpha);
        auto one_gain = [&](double g) {
            return std::pow(1.0 + a * m.tiers[j].tx_power * g / (mu * loss),
                            -std::complex<double>(mu));
        };
        std::complex<double> kept =
            m.interferer_gain_averaging
                ? pm * one_gain(m.antenna.g_max) + (1.0 - pm) * one_gain(m.antenna.g_min)
                : one_gain(m.antenna.g_max);
        const double p_state = state_probability(u, r, m.tiers[j].blockage);
        return (1.0 - kept) * (2.0 * M_PI * m.tiers[j].density * r * p_state);
    };
    const double re = quad::integrate_to_inf([&](double r) { return term(r).real(); }, r0, 1e-10);
    const double im = quad::integrate_to_inf([&](double r) { return term(r).imag(); }, r0, 1e-10);
    return std::exp(-activity[j] * std::complex<double>(re, im));
}

namespace detail {

// W(tau1) = (1/A_{k,rho}) int f_L(l) D(l, tau1) dl with
// D(l, tau1) = sum_{tau2=0}^{m tau1} C(m tau1, tau2) (-1)^{tau2} phi_l(tau2),
// phi_l(tau2) = exp(-s sigma^2 zeta tau2) prod_{j,u} L_{I_{j,u}}(s zeta tau2).
// W(tau1) is the tau1-th building block of every moment: M_b = sum_tau1
// C(b,tau1) (-1)^{tau1} W(tau1). All W are real and in [0,1].
//
// The alternating tau2 sum is a high-order finite difference; it is summed in
// long double and its cancellation error (~2^n eps) is tracked so the series
// is cut before the numerics go bad.
struct WSeries {
    std::vector<double> w;        // w[tau1]
    double numeric_error = 0.0;   // worst cancellation bound over tau1
    double assoc = 0.0;           // A_{k,rho}
};

inline double cancellation_bound(int n) {
    // max_j C(n,j) times the noise floor of phi itself.  phi comes out of an
    // adaptive quadrature in double precision, so its entries carry ~1e-14
    // relative noise; the alternating binomial sum amplifies that by up to
    // 2^n regardless of the accumulator's precision.
    return std::exp2(static_cast<double>(n)) * 1e-14;
}

inline WSeries stp_w_series(const NetworkModel& m, std::size_t k, LinkState rho,
                            const ActivityVector& activity, int tau1_count,
                            double quad_tol = 1e-8) {
    check_activity(m, activity);
    const int mr = nakagami(m.channel, rho);
    const double zeta = gamma_bound_zeta(mr);
    const int tau2_count = mr * (tau1_count - 1) + 1;

    // Binomial tables C(m tau1, tau2) in long double.
    std::vector<std::vector<long double>> binom(tau1_count);
    for (int t1 = 0; t1 < tau1_count; ++t1) {
        const int n = mr * t1;
        binom[t1].resize(n + 1);
        binom[t1][0] = 1.0L;
        for (int j = 1; j <= n; ++j)
            binom[t1][j] = binom[t1][j - 1] * static_cast<long double>(n - j + 1) / j;
    }

    const std::size_t dim = static_cast<std::size_t>(tau1_count) + 1;  // +1: A_{k,rho}
    std::vector<double> phi(tau2_count), avals(tau2_count), expo;
    std::vector<double> log_phi(tau2_count);
    auto integrand = [&](double log_l, std::vector<double>& out) {
        const double l = std::exp(log_l);
        const double f = serving_pathloss_pdf(m, k, rho, l) * l;  // log-axis Jacobian
        if (f <= 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        const double s = laplace_s(m, k, rho, l);
        for (int t2 = 0; t2 < tau2_count; ++t2) {
            avals[t2] = s * zeta * t2;
            log_phi[t2] = -avals[t2] * m.noise_power;
        }
        for (std::size_t j = 0; j < m.num_tiers(); ++j) {
            if (activity[j] == 0.0) continue;
            const double x0 = bias_ratio(m, j, k) * l;
            for (LinkState u : link_states) {
                laplace_exponent_multi(m, j, u, x0, avals, expo);
                for (int t2 = 0; t2 < tau2_count; ++t2)
                    log_phi[t2] -= activity[j] * expo[t2];
            }
        }
        for (int t2 = 0; t2 < tau2_count; ++t2) phi[t2] = std::exp(log_phi[t2]);
        for (int t1 = 0; t1 < tau1_count; ++t1) {
            long double d = 0.0L;
            const int n = mr * t1;
            for (int t2 = 0; t2 <= n; ++t2) {
                const long double term = binom[t1][t2] * static_cast<long double>(phi[t2]);
                d += (t2 % 2 == 0) ? term : -term;
            }
            out[t1] = f * static_cast<double>(d);
        }
        out[tau1_count] = f;
    };

    const double l_hi = serving_level_cutoff(m, k);
    const double l_lo = std::min(path_loss(m.channel, LinkState::LOS, 1e-3),
                                 path_loss(m.channel, LinkState::NLOS, 1e-3));
    std::vector<double> vals =
        quad::integrate_vector(integrand, std::log(l_lo), std::log(l_hi), dim, quad_tol);

    WSeries out;
    out.assoc = vals[tau1_count];
    out.w.resize(tau1_count);
    for (int t1 = 0; t1 < tau1_count; ++t1) {
        out.w[t1] = (out.assoc > 0.0) ? vals[t1] / out.assoc : 0.0;
        out.numeric_error = std::max(out.numeric_error, cancellation_bound(mr * t1));
    }
    if (tau1_count > 0) out.w[0] = 1.0;  // D(l,0) = 1 identically
    return out;
}

// Analytic continuation of a Hausdorff moment sequence to complex order.
//
// W(tau1) = E[Q^tau1] with Q = 1 - (conditional STP) on [0,1].  The finite-
// difference construction only yields a short reliable prefix of W, and the
// alternating series for E[(1-Q)^b] diverges under truncation once |Im b| is
// a few units (the coefficients grow like 1/|Gamma(-b)|).  Instead, the
// distribution of Q is reconstructed from the reliable prefix as a matched
// Beta kernel times an orthogonal-polynomial correction; every matched moment
// is reproduced exactly and E[(1-Q)^b] becomes a short sum of Beta-function
// ratios that is entire in b.
struct OrderContinuation {
    bool point = false;   // degenerate: all mass at q0
    double q0 = 0.0;
    double a = 1.0, b = 1.0;       // Beta kernel parameters
    std::vector<double> d;         // density / kernel = sum_m d[m] q^m
    double fit_residual = 0.0;     // magnitude of the top orthonormal coefficient

    std::complex<double> operator()(std::complex<double> order) const {
        if (point) {
            if (q0 >= 1.0) return 0.0;  // P = 0: no contribution for Re(order) > 0
            return std::exp(order * std::log(1.0 - q0));
        }
        const std::complex<double> log_b0 =
            log_gamma(a) + log_gamma(b) - log_gamma(a + b);
        std::complex<double> sum = 0.0;
        for (std::size_t m = 0; m < d.size(); ++m) {
            const std::complex<double> lb = log_gamma(a + static_cast<double>(m)) +
                                            log_gamma(b + order) -
                                            log_gamma(a + static_cast<double>(m) + b + order);
            sum += d[m] * std::exp(lb - log_b0);
        }
        // The polynomial correction can overshoot the unit disc by a sliver;
        // a characteristic-function value never can.
        const double mag = std::abs(sum);
        if (mag > 1.0) sum /= mag;
        return sum;
    }
};

inline OrderContinuation continue_w_series(const std::vector<double>& w_in) {
    // Keep only the monotone nonnegative prefix: W is a moment sequence of a
    // [0,1] variable, so any violation marks the onset of cancellation noise.
    std::vector<double> mu{1.0};
    for (std::size_t t = 1; t < w_in.size(); ++t) {
        if (!(w_in[t] >= 0.0) || w_in[t] > mu.back() * (1.0 + 1e-9)) break;
        mu.push_back(std::min(w_in[t], mu.back()));
    }

    OrderContinuation oc;
    const double m1 = mu.size() > 1 ? mu[1] : 0.0;
    const double m2 = mu.size() > 2 ? mu[2] : m1 * m1;
    const double var = m2 - m1 * m1;
    if (mu.size() <= 2 || var < 1e-10 || m1 < 1e-12 || m1 > 1.0 - 1e-12) {
        oc.point = true;
        oc.q0 = std::min(1.0, std::max(0.0, m1));
        return oc;
    }
    // s -> 0 is the two-point {0,1} limit, which Beta(a,b) with a,b -> 0
    // reproduces with the right masses, so a tiny floor keeps it well posed.
    const double s = std::max(m1 * (1.0 - m1) / var - 1.0, 1e-6);
    oc.a = m1 * s;
    oc.b = (1.0 - m1) * s;

    const int N = std::min<int>(static_cast<int>(mu.size()) - 1, 8);
    const int L = N + 1;
    // Kernel moments nu_m = E_Beta(a,b)[Q^m].
    std::vector<long double> nu(2 * L + 1);
    nu[0] = 1.0L;
    for (int m = 1; m <= 2 * L; ++m)
        nu[m] = nu[m - 1] * static_cast<long double>(oc.a + m - 1) / (oc.a + oc.b + m - 1);
    // Orthonormal polynomials wrt the kernel, by Gram-Schmidt on monomials.
    std::vector<std::vector<long double>> r(L, std::vector<long double>(L, 0.0L));
    std::vector<long double> dacc(L, 0.0L);
    int degree_used = 0;
    for (int i = 0; i < L; ++i) {
        r[i][i] = 1.0L;
        for (int j = 0; j < i; ++j) {
            long double ip = 0.0L;
            for (int m = 0; m <= j; ++m) ip += r[j][m] * nu[i + m];
            for (int m = 0; m <= j; ++m) r[i][m] -= ip * r[j][m];
        }
        long double nrm2 = 0.0L;
        for (int m = 0; m <= i; ++m)
            for (int mm = 0; mm <= i; ++mm) nrm2 += r[i][m] * r[i][mm] * nu[m + mm];
        if (!(nrm2 > 1e-24L)) break;  // kernel cannot resolve higher degrees
        const long double nrm = sqrtl(nrm2);
        for (int m = 0; m <= i; ++m) r[i][m] /= nrm;
        long double ci = 0.0L;
        for (int m = 0; m <= i; ++m) ci += r[i][m] * static_cast<long double>(mu[m]);
        for (int m = 0; m <= i; ++m) dacc[m] += ci * r[i][m];
        degree_used = i;
        oc.fit_residual = std::abs(static_cast<double>(ci));
    }
    if (degree_used <= 2) oc.fit_residual = 0.0;  // pure Beta match
    oc.d.assign(dacc.begin(), dacc.begin() + degree_used + 1);
    return oc;
}

// Longest tau1 prefix whose finite differences stay under the cancellation
// budget for Nakagami parameter mr.
inline int reliable_tau1_count(int mr, int cap = 64) {
    int count = cap + 1;
    while (count > 1 && cancellation_bound(mr * (count - 1)) > 1e-6) --count;
    return count;
}

}  // namespace detail

// b-th moment of the conditional STP given association with tier k, state rho
// (M_{b,k,rho}). For nonnegative integer b within the cancellation budget the
// series terminates exactly at b.  Otherwise the series over the reliable W
// prefix is used when it converges (three consecutive terms below 1e-8);
// when it does not, the order is reached by analytic continuation of the
// moment sequence instead, since truncating the series at complex order
// diverges.
inline MomentResult conditional_stp_moment(const NetworkModel& m, std::size_t k, LinkState rho,
                                           std::complex<double> b,
                                           const ActivityVector& activity) {
    if (b.imag() == 0.0 && b.real() < 0.0)
        throw std::domain_error("conditional_stp_moment: need Re(b) >= 0 or purely imaginary b");
    MomentResult res;
    res.order = b;

    const bool integer_b = b.imag() == 0.0 &&
                           std::abs(b.real() - std::round(b.real())) < 1e-12;
    const int mr = nakagami(m.channel, rho);
    const int reliable = detail::reliable_tau1_count(mr);
    const bool exact = integer_b && std::lround(b.real()) + 1 <= reliable;
    const int tau1_count =
        exact ? static_cast<int>(std::lround(b.real())) + 1 : reliable;
    const auto series = detail::stp_w_series(m, k, rho, activity, tau1_count);

    std::complex<double> sum = 0.0;
    int small_run = 0;
    int used = 0;
    double last_mag = 0.0;
    for (int t1 = 0; t1 < tau1_count; ++t1) {
        const std::complex<double> c = generalized_binomial(b, t1);
        const std::complex<double> term =
            c * ((t1 % 2 == 0) ? 1.0 : -1.0) * series.w[t1];
        sum += term;
        ++used;
        last_mag = std::abs(term);
        if (!exact) {
            small_run = (last_mag < 1e-8) ? small_run + 1 : 0;
            if (small_run >= 3) break;
        }
    }
    if (exact || small_run >= 3) {
        res.terms_used = used;
        res.truncation_error_estimate = (exact ? 0.0 : last_mag) + series.numeric_error;
    } else {
        const auto cont = detail::continue_w_series(series.w);
        sum = cont(b);
        res.terms_used = tau1_count;
        res.truncation_error_estimate = cont.fit_residual + series.numeric_error;
    }
    if (b.imag() == 0.0) {
        // Clean up the residual imaginary part for real orders.
        sum = std::complex<double>(std::min(1.0, std::max(0.0, sum.real())), 0.0);
        if (b.real() == 0.0) sum = 1.0;
    }
    res.value = sum;
    return res;
}

// Per-(tier, state) moments plus the association table, the building block of
// total and per-tier moments.
struct TierMoments {
    AssociationTable assoc;
    std::vector<std::array<MomentResult, 2>> per_state;  // [tier][LOS, NLOS]

    std::complex<double> total() const {
        std::complex<double> s = 0.0;
        for (std::size_t k = 0; k < per_state.size(); ++k)
            for (int i = 0; i < 2; ++i) s += assoc.per_state[k][i] * per_state[k][i].value;
        return s;
    }
    std::complex<double> tier(std::size_t k) const {
        std::complex<double> s = 0.0;
        for (int i = 0; i < 2; ++i) s += assoc.per_state[k][i] * per_state[k][i].value;
        return s / assoc.per_tier[k];
    }
};

inline TierMoments tier_moments(const NetworkModel& m, std::complex<double> b,
                                const ActivityVector& activity) {
    TierMoments tm;
    tm.assoc = association_probabilities(m);
    tm.per_state.resize(m.num_tiers());
    for (std::size_t k = 0; k < m.num_tiers(); ++k)
        for (LinkState s : link_states)
            tm.per_state[k][s == LinkState::LOS ? 0 : 1] =
                conditional_stp_moment(m, k, s, b, activity);
    return tm;
}

// M_b = sum_k sum_rho A_{k,rho} M_{b,k,rho}.
inline MomentResult total_moment(const NetworkModel& m, std::complex<double> b,
                                 const ActivityVector& activity) {
    if (b == std::complex<double>(0.0)) {
        // Empty product: P^0 = 1 regardless of the realization, so the
        // association-weighted average is exactly 1 with no quadrature.
        check_activity(m, activity);
        MomentResult unit;
        unit.order = b;
        unit.value = 1.0;
        return unit;
    }
    const TierMoments tm = tier_moments(m, b, activity);
    MomentResult res;
    res.order = b;
    res.value = tm.total();
    for (const auto& row : tm.per_state)
        for (const auto& mr : row) {
            res.terms_used = std::max(res.terms_used, mr.terms_used);
            res.truncation_error_estimate =
                std::max(res.truncation_error_estimate, mr.truncation_error_estimate);
        }
    if (b.imag() == 0.0)
        res.value = std::complex<double>(std::min(1.0, std::max(0.0, res.value.real())), 0.0);
    return res;
}

// Precomputed W series for evaluating M_{jt} at many imaginary orders, as the
// Gil-Pelaez inversion needs. One build, cheap complex-coefficient sums per t.
struct MomentSeries {
    AssociationTable assoc;
    std::vector<std::array<std::vector<double>, 2>> w;  // [tier][state][tau1]
    std::vector<std::array<detail::OrderContinuation, 2>> cont;  // same layout
    double numeric_error = 0.0;

    std::complex<double> eval(std::complex<double> b) const {
        std::complex<double> sum = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            for (int i = 0; i < 2; ++i)
                sum += assoc.per_state[k][i] * eval_component(k, i, b);
        return sum;
    }
    std::complex<double> eval_tier(std::size_t k, std::complex<double> b) const {
        std::complex<double> sum = 0.0;
        for (int i = 0; i < 2; ++i) sum += assoc.per_state[k][i] * eval_component(k, i, b);
        return sum / assoc.per_tier[k];
    }

private:
    std::complex<double> eval_component(std::size_t k, int i, std::complex<double> b) const {
        const std::vector<double>& wv = w[k][i];
        // Exact finite sum for integer orders inside the reliable prefix.
        const bool integer_b =
            b.imag() == 0.0 && std::abs(b.real() - std::round(b.real())) < 1e-12;
        if (integer_b && std::lround(b.real()) < static_cast<long>(wv.size())) {
            const int n = static_cast<int>(std::lround(b.real()));
            std::complex<double> sum = 0.0;
            std::complex<double> coef = 1.0;  // C(b, 0)
            for (int t1 = 0; t1 <= n; ++t1) {
                if (t1 > 0) coef *= (b - static_cast<double>(t1) + 1.0) / static_cast<double>(t1);
                sum += coef * ((t1 % 2 == 0) ? 1.0 : -1.0) * wv[t1];
            }
            return sum;
        }
        // Otherwise the plain series when it converges within the prefix, ...
        std::complex<double> sum = 0.0;
        std::complex<double> coef = 1.0;
        int small_run = 0;
        for (std::size_t t1 = 0; t1 < wv.size(); ++t1) {
            if (t1 > 0) coef *= (b - static_cast<double>(t1) + 1.0) / static_cast<double>(t1);
            const std::complex<double> term = coef * ((t1 % 2 == 0) ? 1.0 : -1.0) * wv[t1];
            sum += term;
            small_run = (std::abs(term) < 1e-8) ? small_run + 1 : 0;
            if (small_run >= 3) return sum;
        }
        // ... else the continuation of the moment sequence.
        return cont[k][i](b);
    }
};

inline MomentSeries build_moment_series(const NetworkModel& m, const ActivityVector& activity,
                                        int tau1_cap = 64) {
    MomentSeries ms;
    ms.assoc = association_probabilities(m);
    ms.w.resize(m.num_tiers());
    ms.cont.resize(m.num_tiers());
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        for (LinkState s : link_states) {
            const int mr = nakagami(m.channel, s);
            const int count = std::min(detail::reliable_tau1_count(mr), tau1_cap + 1);
            auto series = detail::stp_w_series(m, k, s, activity, count);
            const int idx = s == LinkState::LOS ? 0 : 1;
            ms.cont[k][idx] = detail::continue_w_series(series.w);
            ms.w[k][idx] = std::move(series.w);
            ms.numeric_error = std::max(ms.numeric_error, series.numeric_error);
        }
    }
    return ms;
}

}  // namespace metasinr

#endif
