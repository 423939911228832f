#ifndef METASINR_QUADRATURE_HPP
#define METASINR_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace metasinr {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace quad {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-9, double* err_out = nullptr) {
    double err = 0.0;
    double v = GK::integrate(f, a, b, 15, tol, &err);
    if (err_out) *err_out = err;
    return v;
}

// Semi-infinite integral on [a, inf).
inline double integrate_to_inf(const std::function<double(double)>& f, double a,
                               double tol = 1e-9, double* err_out = nullptr) {
    double err = 0.0;
    double v = GK::integrate(f, a, std::numeric_limits<double>::infinity(), 15, tol, &err);
    if (err_out) *err_out = err;
    return v;
}

// Gauss-Kronrod 15(7) nodes and weights (QUADPACK qk15 constants).
inline constexpr double gk15_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk15_weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double g7_weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

// Adaptive GK15 for vector-valued integrands, absolute tolerance in max norm.
// Used where many related integrals share one expensive integrand (the
// tau1-indexed moment series shares the Laplace transforms per level node).
template <typename F>
std::vector<double> integrate_vector(const F& f, double a, double b, std::size_t dim,
                                     double tol = 1e-8, int max_depth = 12) {
    struct Panel { double a, b; int depth; };
    std::vector<double> total(dim, 0.0);
    std::vector<Panel> stack{{a, b, 0}};
    std::vector<double> k15(dim), g7(dim), fv(dim);
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double c = 0.5 * (p.a + p.b), h = 0.5 * (p.b - p.a);
        std::fill(k15.begin(), k15.end(), 0.0);
        std::fill(g7.begin(), g7.end(), 0.0);
        for (int i = 0; i < 8; ++i) {
            const int reps = (i == 7) ? 1 : 2;
            for (int sgn = 0; sgn < reps; ++sgn) {
                const double x = c + (sgn == 0 ? -1.0 : 1.0) * gk15_nodes[i] * h;
                f(x, fv);
                for (std::size_t d = 0; d < dim; ++d) {
                    k15[d] += gk15_weights[i] * fv[d];
                    if (i % 2 == 1) g7[d] += g7_weights[i / 2] * fv[d];
                }
            }
        }
        double err = 0.0;
        for (std::size_t d = 0; d < dim; ++d) err = std::max(err, std::abs(k15[d] - g7[d]) * h);
        if (err > tol && p.depth < max_depth) {
            stack.push_back({p.a, c, p.depth + 1});
            stack.push_back({c, p.b, p.depth + 1});
        } else {
            for (std::size_t d = 0; d < dim; ++d) total[d] += k15[d] * h;
        }
    }
    return total;
}

// Oscillatory tail of int_{t0}^{inf} h(t) dt for integrands that eventually
// alternate in sign (Gil-Pelaez type). Splits the tail at the integrand's own
// sign changes and accelerates the lobe series with the Euler transform, so
// slowly decaying envelopes (~1/t) still converge to ~1e-7.
struct OscillatoryTail {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

inline double euler_transform(const std::vector<double>& terms) {
    // Accelerated sum of sum_i terms[i] for (eventually) alternating terms.
    std::vector<double> row(terms.begin(), terms.end());
    double sum = 0.0;
    std::size_t n = row.size();
    if (n == 0) return 0.0;
    // Use the plain partial sum for the first half, Euler on the rest.
    std::size_t keep = n / 2;
    for (std::size_t i = 0; i < keep; ++i) sum += row[i];
    std::vector<double> tail(row.begin() + keep, row.end());
    // Iterated averaging of partial sums of the tail.
    std::vector<double> partial(tail.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) { acc += tail[i]; partial[i] = acc; }
    while (partial.size() > 1) {
        for (std::size_t i = 0; i + 1 < partial.size(); ++i)
            partial[i] = 0.5 * (partial[i] + partial[i + 1]);
        partial.pop_back();
    }
    return sum + partial[0];
}

inline OscillatoryTail oscillatory_tail(const std::function<double(double)>& h, double t0,
                                        double t_max, double abs_tol = 1e-7,
                                        std::size_t max_lobes = 64) {
    OscillatoryTail out;
    // Locate sign changes by scanning; the scan step adapts to the observed
    // lobe length.
    double step = 0.25;
    double t = t0;
    double ht = h(t);
    std::vector<double> lobes;
    std::vector<double> boundaries{t0};
    std::size_t quiet = 0;
    while (boundaries.size() <= max_lobes && t < t_max) {
        double tn = std::min(t + step, t_max);
        double hn = h(tn);
        if ((ht <= 0.0 && hn > 0.0) || (ht >= 0.0 && hn < 0.0)) {
            // Bisect to the zero.
            double lo = t, hi = tn, flo = ht;
            for (int i = 0; i < 40 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
                double mid = 0.5 * (lo + hi);
                double fm = h(mid);
                if ((flo <= 0.0 && fm > 0.0) || (flo >= 0.0 && fm < 0.0)) hi = mid;
                else { lo = mid; flo = fm; }
            }
            double zero = 0.5 * (lo + hi);
            lobes.push_back(integrate([&](double x) { return h(x); },
                                      boundaries.back(), zero, abs_tol * 0.01));
            boundaries.push_back(zero);
            // Adapt scan step to roughly 1/8 of the last lobe length.
            if (boundaries.size() >= 3)
                step = std::max(0.05, 0.125 * (boundaries.back() - boundaries[boundaries.size() - 2]));
            quiet = 0;
        } else if (std::abs(hn) < abs_tol * 1e-3) {
            ++quiet;
            if (quiet > 32) break;  // integrand has died out
        }
        t = tn;
        ht = hn;
    }
    // Whatever precedes the first located zero integrates directly; the lobe
    // series from there on is accelerated.
    if (lobes.size() < 4) {
        out.value = integrate([&](double x) { return h(x); }, t0, std::min(t, t_max), abs_tol * 0.1);
        out.error_estimate = std::abs(ht);
        return out;
    }
    double head = lobes[0];
    std::vector<double> series(lobes.begin() + 1, lobes.end());
    double accel = euler_transform(series);
    out.value = head + accel;
    // Error estimate: change when dropping the last lobe.
    std::vector<double> shorter(series.begin(), series.end() - 1);
    out.error_estimate = std::abs(accel - euler_transform(shorter));
    out.converged = out.error_estimate < 10.0 * abs_tol;
    return out;
}

}  // namespace quad
}  // namespace metasinr

#endif
