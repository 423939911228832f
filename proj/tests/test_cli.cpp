#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
    const char* p = std::getenv("METASINR_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tmp_file(const std::string& name) {
    return "cli_test_" + name;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("usage and help exit codes") {
    REQUIRE(run("") == 1);
    REQUIRE(run("--help") == 0);
    REQUIRE(run("--definitely-not-a-flag") == 1);
    REQUIRE(run("moments --theta-db") == 1);  // missing value
}

TEST_CASE("config errors exit with code 2") {
    REQUIRE(run("--config /nonexistent/path.cfg moments") == 2);

    const auto bad = tmp_file("bad.cfg");
    write_file(bad, "tier1.densty = 1e-5\n");
    REQUIRE(run("--config " + bad + " moments") == 2);

    const auto dup = tmp_file("dup.cfg");
    write_file(dup, "tier1.bias = 1\ntier1.bias = 2\n");
    REQUIRE(run("--config " + dup + " moments") == 2);

    const auto invalid = tmp_file("invalid.cfg");
    write_file(invalid, "tier2.density = -1\n");
    REQUIRE(run("--config " + invalid + " moments") == 2);
}

TEST_CASE("moments subcommand writes deterministic CSV") {
    const auto out1 = tmp_file("m1.csv"), out2 = tmp_file("m2.csv");
    REQUIRE(run("--output " + out1 + " moments --theta-db 0") == 0);
    REQUIRE(run("--output " + out2 + " moments --theta-db 0") == 0);
    const auto text = slurp(out1);
    REQUIRE(text == slurp(out2));
    REQUIRE(text.rfind("theta_db,tier,state,m1,m2,variance,activity_mode", 0) == 0);
    // 2 tiers x (L, N, all) + the network total per threshold.
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 1 + 7);
}

TEST_CASE("metadist beta method writes the grid") {
    const auto out = tmp_file("md.csv");
    REQUIRE(run("--output " + out + " metadist --method beta --y-grid 0.2,0.5,0.8") == 0);
    const auto text = slurp(out);
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 3);
    REQUIRE(run("metadist --method nope") == 2);
}

TEST_CASE("sweep agrees with individual moments runs") {
    const auto sweep_out = tmp_file("sweep.csv");
    REQUIRE(run("--output " + sweep_out +
                " sweep --sweep sinr_threshold_db=-5,5 --command moments --y-grid 0.5") == 0);
    const auto text = slurp(sweep_out);

    // Per-value single runs must produce the same m1 figures.
    for (const char* th : {"-5", "5"}) {
        const auto out = tmp_file(std::string("sw") + th + ".csv");
        REQUIRE(run("--output " + out + " moments --theta-db " + th) == 0);
        const auto single = slurp(out);
        // Find the tier-1 "all" row m1 value in the single run...
        std::istringstream ss(single);
        std::string line, tier1_m1;
        while (std::getline(ss, line))
            if (line.find(std::string(th) + ",1,all,") == 0) {
                auto p = line.find("all,") + 4;
                tier1_m1 = line.substr(p, line.find(',', p) - p);
            }
        REQUIRE(!tier1_m1.empty());
        // ...and require it verbatim in the sweep output.
        REQUIRE(text.find("," + tier1_m1 + ",") != std::string::npos);
    }
    REQUIRE(run("sweep --sweep nonsense") == 2);
    REQUIRE(run("sweep --sweep tier1.densty=1,2 --command moments") == 2);
}

TEST_CASE("invariant check runs clean on the defaults") {
    REQUIRE(run("--check") == 0);
}

TEST_CASE("config round-trip changes the result") {
    const auto cfg = tmp_file("thr.cfg");
    write_file(cfg, "# higher threshold\nsinr_threshold_db = 10\n");
    const auto a = tmp_file("thr_a.csv"), b = tmp_file("thr_b.csv");
    REQUIRE(run("--output " + a + " moments --theta-db 0") == 0);
    REQUIRE(run("--config " + cfg + " --output " + b + " moments --theta-db 10") == 0);
    REQUIRE(slurp(a) != slurp(b));
}
