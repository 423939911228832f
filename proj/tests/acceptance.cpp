// Acceptance suite: one line per criterion, nonzero exit if any fail.
// argv[1] (optional) is the CLI binary path, needed by the determinism check.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metasinr/metasinr.hpp"

using namespace metasinr;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("ACCEPTANCE %d %-38s %s  (%s)\n", idx, name, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double total_m1_from(const std::vector<double>& m1, const AssociationTable& assoc) {
    double s = 0.0;
    for (std::size_t k = 0; k < m1.size(); ++k) s += assoc.per_tier[k] * m1[k];
    return s;
}

// 1. Analytic first moment vs static-mode Monte Carlo at three thresholds.
void criterion_theorem1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (double th : {-10.0, 0.0, 10.0}) {
        auto m = default_model();
        m.sinr_threshold = db_to_linear(th);
        const auto q = full_buffer_activity(m);
        const TierMoments t1 = tier_moments(m, 1.0, q);
        EnsembleOptions opt;
        opt.realizations = 500;
        opt.window_radius = 2000.0;
        opt.fading_draws = 200;
        opt.max_users = 20;
        opt.seed = 20260826;
        const auto sim = run_static_ensemble(m, q, opt);
        for (std::size_t k = 0; k < m.num_tiers(); ++k) {
            const double gap = std::abs(sim.tier_mean_stp[k] - t1.tier(k).real());
            worst = std::max(worst, gap);
        }
    }
    ok = worst <= 0.02;
    report(1, "theorem1 vs static Monte Carlo", ok,
           fmt("max |sim - analytic| = %.4f, %.0f s", worst, elapsed_s(t0)));
}

// 2. Queue-aware first moment dominates the full-buffer one.
void criterion_queue_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double gap_at_0 = 0.0;
    std::string detail;
    for (double th : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
        auto m = default_model();
        m.sinr_threshold = db_to_linear(th);
        const auto fb = tier_moments(m, 1.0, full_buffer_activity(m));
        const auto st = solve_fixed_point(m);
        const double m1_fb = fb.total().real();
        const double m1_fp = total_m1_from(st.m1, st.assoc);
        if (!st.converged || m1_fp < m1_fb - 1e-9) ok = false;
        if (th == 0.0) gap_at_0 = m1_fp - m1_fb;
    }
    if (gap_at_0 <= 0.005) ok = false;
    report(2, "fixed-point M1 >= full-buffer M1", ok,
           fmt("gap at 0 dB = %.4f, %.0f s", gap_at_0, elapsed_s(t0)));
}

// 3. Tier-2 activity increases strictly with the arrival rate.
void criterion_arrival_monotonicity() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double prev = -1.0;
    std::string seq;
    for (double xi : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto m = default_model();
        m.traffic.arrival_prob = xi;
        const auto st = solve_fixed_point(m);
        if (!st.converged || st.activity[1] <= prev) ok = false;
        prev = st.activity[1];
        char buf[16];
        std::snprintf(buf, sizeof(buf), " %.3f", prev);
        seq += buf;
    }
    report(3, "activity increasing in arrival rate", ok,
           "E[qa2] =" + seq + fmt(", %.0f s", elapsed_s(t0)));
}

// 4. Tier-2 activity nondecreasing in the blockage parameter.
void criterion_blockage_monotonicity() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::vector<double> qs;
    for (double beta : {0.012, 0.024, 0.048}) {
        auto m = default_model();
        m.tiers[1].blockage = beta;
        const auto st = solve_fixed_point(m);
        if (!st.converged) ok = false;
        qs.push_back(st.activity[1]);
    }
    for (std::size_t i = 1; i < qs.size(); ++i)
        if (qs[i] < qs[i - 1] - 1e-9) ok = false;
    if (qs.back() - qs.front() <= 0.01) ok = false;
    report(4, "activity nondecreasing in blockage", ok,
           fmt("E[qa2] = %.3f .. %.3f, %.0f s", qs.front(), qs.back(), elapsed_s(t0)));
}

// 5. Temporal simulator against the analytic fixed point.
void criterion_temporal() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = default_model();
    const auto st = solve_fixed_point(m);
    EnsembleOptions opt;
    opt.realizations = 200;
    opt.slots = 5000;
    opt.warmup = 500;
    opt.window_radius = 2000.0;
    opt.seed = 555;
    const auto sim = run_temporal_ensemble(m, opt);
    double act_gap = 0.0, ccdf_gap = 0.0;
    bool ok = st.converged;
    const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        act_gap = std::max(act_gap, std::abs(sim.tier_mean_activity[k] - st.activity[k]));
        const auto emp = empirical_meta(sim.tier_stp[k], grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            ccdf_gap = std::max(ccdf_gap,
                                std::abs(emp.dist.values[i] - st.meta[k].ccdf(grid[i])));
    }
    if (act_gap > 0.03 || ccdf_gap > 0.05) ok = false;
    report(5, "temporal simulator vs fixed point", ok,
           fmt("activity gap %.4f, ccdf sup gap %.4f, %.0f s", act_gap, ccdf_gap,
               elapsed_s(t0)));
}

// 6. Gil-Pelaez inversion on distributions with closed-form moments.
void criterion_gil_pelaez() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    const double p = 0.37;  // point mass away from the y grid
    auto deg = [&](double t) {
        return std::exp(std::complex<double>(0.0, t * std::log(p)));
    };
    auto uni = [](double t) { return 1.0 / std::complex<double>(1.0, t); };
    auto b22 = [](double t) {
        const std::complex<double> jt(0.0, t);
        return 6.0 / ((2.0 + jt) * (3.0 + jt));
    };
    MetaDistribution beta;
    beta.kind = MetaDistribution::Kind::Beta;
    beta.a = 2.0;
    beta.b = 2.0;
    for (int i = 1; i <= 9; ++i) {
        const double y = i / 10.0;
        worst = std::max(worst, std::abs(gil_pelaez_ccdf(deg, y) - (y < p ? 1.0 : 0.0)));
        worst = std::max(worst, std::abs(gil_pelaez_ccdf(uni, y) - (1.0 - y)));
        worst = std::max(worst, std::abs(gil_pelaez_ccdf(b22, y) - beta.ccdf(y)));
    }
    report(6, "Gil-Pelaez oracle distributions", worst <= 1e-3,
           fmt("max pointwise error %.2e, %.0f s", worst, elapsed_s(t0)));
}

// 7. Structural identities.
void criterion_identities() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string why;

    const auto m = default_model();
    const auto assoc = association_probabilities(m);
    if (std::abs(assoc.total() - 1.0) >= 1e-6) { ok = false; why += " assoc-norm"; }

    if (total_moment(m, 0.0, full_buffer_activity(m)).value.real() != 1.0) {
        ok = false;
        why += " M0";
    }

    // Variance nonnegative over a threshold x arrival grid; the activity at
    // each arrival rate is the per-tier no-retransmission utilization.
    for (double th : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
        for (double xi : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            auto mm = default_model();
            mm.sinr_threshold = db_to_linear(th);
            mm.traffic.arrival_prob = xi;
            ActivityVector q(mm.num_tiers());
            for (std::size_t k = 0; k < mm.num_tiers(); ++k)
                q[k] = no_retransmission_activity(
                    mm, build_user_counts(mm, k, assoc.per_tier[k]));
            const double m1 = total_moment(mm, 1.0, q).value.real();
            const double m2 = total_moment(mm, 2.0, q).value.real();
            if (m2 - m1 * m1 < -1e-10) { ok = false; why += fmt(" var@%g,%g", th, xi); }
        }
    }

    auto ms = default_model();
    ms.channel.kappa_nlos = ms.channel.kappa_los;
    ms.channel.alpha_nlos = ms.channel.alpha_los;
    for (double l : {1e4, 1e6, 1e8, 1e10}) {
        const double split = intensity(ms.tiers[0], ms.channel, LinkState::LOS, l) +
                             intensity(ms.tiers[0], ms.channel, LinkState::NLOS, l);
        const double disc = M_PI * ms.tiers[0].density *
                            std::pow(l / ms.channel.kappa_los, 2.0 / ms.channel.alpha_los);
        if (std::abs(split - disc) / disc >= 1e-9) { ok = false; why += " blockage-split"; }
    }

    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        const auto uc = build_user_counts(m, k, assoc.per_tier[k]);
        double sum = 0.0;
        for (double p : uc.pmf) sum += p;
        if (std::abs(sum - 1.0) >= 1e-6) { ok = false; why += " pmf-norm"; }
    }
    report(7, "structural identities", ok,
           (why.empty() ? std::string("all hold") : "violated:" + why) +
               fmt(", %.0f s", elapsed_s(t0)));
}

// 8. Dominant / favorable bounds bracket the fixed point.
void criterion_bounds() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = default_model();
    const auto st = solve_fixed_point(m);
    const auto fav1 = bound_meta(m, BoundSystem::Favorable, 1);
    const auto fav2 = bound_meta(m, BoundSystem::Favorable, 2);
    const auto dom2 = bound_meta(m, BoundSystem::Dominant, 2);
    const auto dom1 = bound_meta(m, BoundSystem::Dominant, 1);
    bool ok = st.converged;
    double worst = 0.0;
    for (std::size_t k = 0; k < m.num_tiers(); ++k) {
        for (int i = 1; i <= 99; ++i) {
            const double y = i / 100.0;
            const double f1 = fav1[k].ccdf(y), f2 = fav2[k].ccdf(y);
            const double fp = st.meta[k].ccdf(y);
            const double d2 = dom2[k].ccdf(y), d1 = dom1[k].ccdf(y);
            const double viol = std::max({f2 - f1, fp - f2, d2 - fp, d1 - d2});
            worst = std::max(worst, viol);
        }
    }
    if (worst > 1e-3) ok = false;
    report(8, "bound bracketing on the y grid", ok,
           fmt("worst ordering violation %.2e, %.0f s", worst, elapsed_s(t0)));
}

// 9. CLI determinism across reruns and thread counts.
void criterion_determinism(const char* cli) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!cli) {
        report(9, "CLI determinism (1 and 8 threads)", false, "CLI path not provided");
        return;
    }
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    bool ok = true;
    const std::string base =
        "simulate --mode static --realizations 8 --window-radius 2000 --seed 31 --output ";
    ok &= run("--threads 1 " + base + "acc9_a.csv") == 0;
    ok &= run("--threads 1 " + base + "acc9_b.csv") == 0;
    ok &= run("--threads 8 " + base + "acc9_c.csv") == 0;
    const auto a = slurp("acc9_a.csv");
    ok &= !a.empty() && a == slurp("acc9_b.csv") && a == slurp("acc9_c.csv");

    ok &= run("--output acc9_m1.csv moments --theta-db -5,0,5") == 0;
    ok &= run("--output acc9_m2.csv moments --theta-db -5,0,5") == 0;
    const auto m1 = slurp("acc9_m1.csv");
    ok &= !m1.empty() && m1 == slurp("acc9_m2.csv");
    report(9, "CLI determinism (1 and 8 threads)", ok, fmt("%.0f s", elapsed_s(t0)));
}

}  // namespace

int main(int argc, char** argv) {
    const char* cli = argc > 1 ? argv[1] : nullptr;
    try {
        criterion_gil_pelaez();        // 6: cheap, fail fast on numerics
        criterion_identities();        // 7
        criterion_queue_ordering();    // 2
        criterion_arrival_monotonicity();  // 3
        criterion_blockage_monotonicity(); // 4
        criterion_bounds();            // 8
        criterion_theorem1();          // 1
        criterion_determinism(cli);    // 9
        criterion_temporal();          // 5
    } catch (const std::exception& e) {
        std::printf("ACCEPTANCE ABORT: %s\n", e.what());
        return 1;
    }
    std::printf("ACCEPTANCE SUMMARY: %d failure(s)\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
