#ifndef METASINR_SPECIAL_HPP
#define METASINR_SPECIAL_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

namespace metasinr {

// log Gamma(z) for complex z, Lanczos approximation (g = 7, n = 9).
// Accurate to ~1e-13 for Re(z) > 0; the reflection formula covers the rest.
inline std::complex<double> log_gamma(std::complex<double> z) {
    static const double coef[9] = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (z.real() < 0.5) {
        // log Gamma(z) = log(pi / sin(pi z)) - log Gamma(1 - z)
        return std::log(M_PI) - std::log(std::sin(M_PI * z)) - log_gamma(1.0 - z);
    }
    z -= 1.0;
    std::complex<double> x = coef[0];
    for (int i = 1; i < 9; ++i) x += coef[i] / (z + static_cast<double>(i));
    std::complex<double> t = z + 7.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(x);
}

// Generalized binomial coefficient C(b, tau) = Gamma(b+1) / (Gamma(tau+1) Gamma(b-tau+1))
// for complex order b and nonnegative integer tau. For nonnegative integer b
// this is the ordinary binomial coefficient (0 past the order).
inline std::complex<double> generalized_binomial(std::complex<double> b, int tau) {
    if (tau < 0) return 0.0;
    if (tau == 0) return 1.0;
    if (b.imag() == 0.0 && b.real() >= 0.0 &&
        std::abs(b.real() - std::round(b.real())) < 1e-12) {
        const long n = std::lround(b.real());
        if (tau > n) return 0.0;
        // Exact integer path.
        double v = 1.0;
        for (long i = 1; i <= tau; ++i) v *= static_cast<double>(n - i + 1) / static_cast<double>(i);
        return v;
    }
    const std::complex<double> arg = b - static_cast<double>(tau) + 1.0;
    if (arg.imag() == 0.0 && arg.real() <= 0.0 &&
        std::abs(arg.real() - std::round(arg.real())) < 1e-14)
        throw std::domain_error("generalized_binomial: gamma pole at b - tau + 1");
    return std::exp(log_gamma(b + 1.0) - log_gamma(std::complex<double>(tau + 1.0)) -
                    log_gamma(arg));
}

}  // namespace metasinr

#endif
