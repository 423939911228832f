#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "metasinr/geometry.hpp"
#include "metasinr/model.hpp"
#include "metasinr/quadrature.hpp"

using namespace metasinr;

TEST_CASE("LOS probability") {
    REQUIRE(los_probability(0.0, 0.006) == 1.0);
    REQUIRE(los_probability(1.0 / 0.006, 0.006) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
    REQUIRE(los_probability(200.0, 0.006) == Catch::Approx(std::exp(-1.2)).epsilon(1e-12));
    REQUIRE_THROWS_AS(los_probability(-1.0, 0.006), std::domain_error);
}

TEST_CASE("intensity boundary values and limits") {
    const auto m = default_model();
    const auto& t = m.tiers[0];
    REQUIRE(intensity(t, m.channel, LinkState::LOS, 0.0) == 0.0);
    REQUIRE(intensity(t, m.channel, LinkState::NLOS, 0.0) == 0.0);
    // Total LOS intensity is finite: 2 pi lambda / beta^2.
    const double cap = 2.0 * M_PI * t.density / (t.blockage * t.blockage);
    REQUIRE(intensity(t, m.channel, LinkState::LOS, 1e30) == Catch::Approx(cap).epsilon(1e-9));
}

TEST_CASE("LOS intensity matches the quadrature oracle") {
    const auto m = default_model();
    const auto& t = m.tiers[0];
    // Lambda_L([0, kappa 100^2)) = 2 pi lambda int_0^100 e^{-beta r} r dr.
    const double level = m.channel.kappa_los * 100.0 * 100.0;
    const double oracle = quad::integrate(
        [&](double r) { return 2.0 * M_PI * t.density * std::exp(-t.blockage * r) * r; },
        0.0, 100.0, 1e-12);
    REQUIRE(oracle == Catch::Approx(0.1354).epsilon(1e-3));  // frozen from the oracle
    REQUIRE(intensity(t, m.channel, LinkState::LOS, level) == Catch::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("intensity derivative matches finite differences") {
    const auto m = default_model();
    const double lo = m.channel.kappa_los;
    const double hi = m.channel.kappa_nlos * std::pow(2000.0, 4.0);
    for (const auto& t : m.tiers) {
        for (LinkState s : link_states) {
            for (int i = 0; i < 20; ++i) {
                const double l = lo * std::pow(hi / lo, i / 19.0);
                const double h = l * 1e-6;
                const double up = intensity(t, m.channel, s, l + h);
                const double dn = intensity(t, m.channel, s, l - h);
                const double fd = (up - dn) / (2.0 * h);
                const double an = intensity_derivative(t, m.channel, s, l);
                // Skip once the central difference itself is all cancellation.
                if (fd > 1e-300 && up - dn > 1e-8 * up)
                    REQUIRE(an == Catch::Approx(fd).epsilon(1e-4));
            }
        }
    }
    REQUIRE_THROWS_AS(intensity_derivative(m.tiers[0], m.channel, LinkState::LOS, 0.0),
                      std::domain_error);
}

TEST_CASE("NLOS derivative approaches the unblocked-PPP density at large loss") {
    const auto m = default_model();
    const auto& t = m.tiers[0];
    const double l = m.channel.kappa_nlos * std::pow(5000.0, 4.0);
    const double unblocked = 2.0 * M_PI * t.density / m.channel.alpha_nlos *
                             std::pow(m.channel.kappa_nlos, -2.0 / m.channel.alpha_nlos) *
                             std::pow(l, 2.0 / m.channel.alpha_nlos - 1.0);
    REQUIRE(intensity_derivative(t, m.channel, LinkState::NLOS, l) ==
            Catch::Approx(unblocked).epsilon(1e-6));
    // LOS derivative dies off.
    REQUIRE(intensity_derivative(t, m.channel, LinkState::LOS, l) < 1e-30);
}

TEST_CASE("intensity is linear in density and monotone in level") {
    auto m = default_model();
    auto t2 = m.tiers[0];
    t2.density *= 2.0;
    double prev = -1.0;
    for (double l : {1e4, 1e6, 1e8, 1e10}) {
        for (LinkState s : link_states) {
            const double v = intensity(m.tiers[0], m.channel, s, l);
            REQUIRE(intensity(t2, m.channel, s, l) == Catch::Approx(2.0 * v).epsilon(1e-12));
        }
        const double v = intensity(m.tiers[0], m.channel, LinkState::LOS, l);
        REQUIRE(v >= prev);
        prev = v;
    }
}

TEST_CASE("blockage split preserves the unblocked intensity") {
    auto m = default_model();
    m.channel.kappa_nlos = m.channel.kappa_los;
    m.channel.alpha_nlos = m.channel.alpha_los;
    for (double l : {1e5, 1e7, 1e9}) {
        const double split = intensity(m.tiers[0], m.channel, LinkState::LOS, l) +
                             intensity(m.tiers[0], m.channel, LinkState::NLOS, l);
        const double disc = M_PI * m.tiers[0].density *
                            std::pow(l / m.channel.kappa_los, 2.0 / m.channel.alpha_los);
        REQUIRE(split == Catch::Approx(disc).epsilon(1e-9));
    }
}

TEST_CASE("association probabilities: certainty, symmetry, normalization") {
    auto m = default_model();
    m.tiers.resize(1);
    REQUIRE(association_probability(m, 0) == Catch::Approx(1.0).margin(1e-6));

    m = default_model();
    m.tiers[1] = m.tiers[0];
    const auto sym = association_probabilities(m);
    REQUIRE(sym.per_tier[0] == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(sym.per_tier[1] == Catch::Approx(0.5).margin(1e-6));

    m = default_model();
    const auto tab = association_probabilities(m);
    REQUIRE(tab.total() == Catch::Approx(1.0).margin(1e-6));
    for (std::size_t k = 0; k < 2; ++k)
        REQUIRE(tab.per_state[k][0] + tab.per_state[k][1] ==
                Catch::Approx(tab.per_tier[k]).margin(1e-9));
}

TEST_CASE("bias pulls association") {
    auto m = default_model();
    const double base = association_probability(m, 1);
    m.tiers[1].bias = 4.0;
    REQUIRE(association_probability(m, 1) > base);
}

TEST_CASE("serving path-loss density concentrates at lower losses for denser tiers") {
    auto m = default_model();
    m.tiers.resize(1);
    m.tiers[0].blockage = 1e-4;  // near-LOS regime
    auto cdf_at = [&](const NetworkModel& mm, double level) {
        return quad::integrate(
            [&](double u) {
                const double l = std::exp(u);
                return serving_pathloss_pdf(mm, 0, LinkState::LOS, l) * l;
            },
            std::log(m.channel.kappa_los * 1e-4), std::log(level), 1e-10);
    };
    auto dense = m;
    dense.tiers[0].density *= 2.0;
    for (double r : {50.0, 100.0, 200.0, 400.0}) {
        const double level = m.channel.kappa_los * r * r;
        REQUIRE(cdf_at(dense, level) >= cdf_at(m, level) - 1e-9);
    }
}

// Monte Carlo oracle: serving loss of a user at the origin, conditioned on
// tier-1 LOS service, against the analytic density (KS distance < 0.02).
TEST_CASE("serving path-loss density matches Monte Carlo", "[slow]") {
    const auto m = default_model();
    std::mt19937_64 rng(42);
    const double R = 1500.0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<double> losses;
    for (int it = 0; it < 10000; ++it) {
        double best_metric = -1.0, best_loss = 0.0;
        std::size_t best_tier = 0;
        bool best_los = false;
        for (std::size_t k = 0; k < m.num_tiers(); ++k) {
            std::poisson_distribution<int> pois(m.tiers[k].density * M_PI * R * R);
            const int n = pois(rng);
            for (int i = 0; i < n; ++i) {
                const double r = R * std::sqrt(uni(rng));
                const bool los = uni(rng) < los_probability(r, m.tiers[k].blockage);
                const double loss = path_loss(m.channel, los ? LinkState::LOS : LinkState::NLOS,
                                              std::max(1.0, r));
                const double metric = m.tiers[k].tx_power * m.tiers[k].bias / loss;
                if (metric > best_metric) {
                    best_metric = metric;
                    best_loss = loss;
                    best_tier = k;
                    best_los = los;
                }
            }
        }
        if (best_metric > 0.0 && best_tier == 0 && best_los) losses.push_back(best_loss);
    }
    REQUIRE(losses.size() > 2000);
    std::sort(losses.begin(), losses.end());

    // Analytic conditional CDF on a grid, interpolated at the sample points.
    const auto tab = association_probabilities(m);
    const double a = tab.a(0, LinkState::LOS);
    const int grid_n = 240;
    const double l_lo = losses.front() * 0.5, l_hi = losses.back() * 2.0;
    std::vector<double> gl(grid_n), gc(grid_n);
    double cum = 0.0, prev_l = l_lo, prev_f = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        gl[i] = l_lo * std::pow(l_hi / l_lo, i / (grid_n - 1.0));
        const double f = serving_pathloss_pdf(m, 0, LinkState::LOS, gl[i]);
        cum += 0.5 * (prev_f + f) * (gl[i] - prev_l);
        prev_l = gl[i];
        prev_f = f;
        gc[i] = cum / a;
    }
    double ks = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        auto it = std::lower_bound(gl.begin(), gl.end(), losses[i]);
        const double analytic = it == gl.begin() ? 0.0 : gc[it - gl.begin() - 1];
        const double empirical = (i + 1.0) / losses.size();
        ks = std::max(ks, std::abs(empirical - analytic));
    }
    REQUIRE(ks < 0.02);
}
