#include "macshape/json_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

// Runs the bundled command-line tool, capturing stdout; stderr is discarded.
RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(MACSHAPE_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int st = pclose(pipe);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "macshape_cli_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    REQUIRE(f.good());
    f << text;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("eval --dist uniform").code == 2); // missing --snr-db
    CHECK(run_cli("eval --constellation pam4 --dist uniform --snr-db 10 --no-such-flag").code ==
          2);
    CHECK(run_cli("eval --constellation pam3 --dist uniform --snr-db 10").code == 2);
    CHECK(run_cli("eval --dist uniform --snr-db 10").code == 2); // constellation unknown
    CHECK(run_cli("eval --constellation pam4 --dist uniform --snr-db 10 --kernel bogus").code ==
          2);
    CHECK(run_cli("eval --constellation pam4 --dist /no/such/file.json --snr-db 10").code == 2);
}

TEST_CASE("eval emits manifest and result") {
    const RunResult r =
        run_cli("eval --constellation pam4 --dist uniform --snr-db 10 --kernel scalar");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("manifest").at("command") == "eval");
    CHECK(j.at("manifest").at("flags").at("--snr-db") == "10");
    CHECK(j.at("manifest").contains("tool_version"));
    const json& res = j.at("result");
    CHECK(res.at("method") == "quadrature");
    const double mi = res.at("mi_bits").get<double>();
    CHECK(mi > 0.0);
    CHECK(mi <= res.at("h_wc_bits").get<double>() + 1e-9);
    CHECK(res.at("grid").at("spacing_in_sigma") == 0.125);
}

TEST_CASE("monte carlo evaluation is reproducible and close to quadrature") {
    const std::string args =
        "eval --constellation pam4 --dist uniform --snr-db 6 --method mc "
        "--mc-samples 50000 --seed 5";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    // identical modulo the manifest timestamp
    CHECK(json::parse(a.out).at("result") == json::parse(b.out).at("result"));

    const json mc = json::parse(a.out).at("result");
    const RunResult q = run_cli("eval --constellation pam4 --dist uniform --snr-db 6");
    const double quad = json::parse(q.out).at("result").at("mi_bits").get<double>();
    CHECK(std::abs(mc.at("mi_bits").get<double>() - quad) <=
          5.0 * mc.at("mc_stderr").get<double>());
}

TEST_CASE("optimize saves a distribution that feeds back into threshold") {
    const fs::path dist = scratch_dir() / "best_pam2.json";
    const RunResult r = run_cli("optimize --constellation pam2 --snr-db 10 --starts 2 --seed 3 "
                                "--save-dist " +
                                dist.string());
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    const double mi = j.at("result").at("mi_bits").get<double>();
    CHECK(mi > 0.5);
    CHECK(j.at("result").at("starts").size() == 2);

    // round-trip through the library loader
    const macshape::InputDistribution d = macshape::load_distribution_file(dist.string(), 1e-6);
    CHECK(d.constellation_id == "pam2");

    char rate[32];
    std::snprintf(rate, sizeof rate, "%.6f", mi - 0.05);
    const RunResult t = run_cli("threshold --constellation pam2 --family fixed --dist " +
                                dist.string() + " --rate " + rate);
    REQUIRE(t.code == 0);
    const json tj = json::parse(t.out);
    CHECK(tj.at("result").at("family") == "fixed");
    CHECK(tj.at("result").at("threshold_snr_db").get<double>() < 10.0);
}

TEST_CASE("threshold cutset matches the closed form") {
    const RunResult r =
        run_cli("threshold --constellation pam16 --family cutset --rate 3.0067");
    REQUIRE(r.code == 0);
    const double db = json::parse(r.out).at("result").at("threshold_snr_db").get<double>();
    CHECK(std::abs(db - 18.0349) <= 0.01);
}

TEST_CASE("unreachable rates exit with 1") {
    const RunResult r = run_cli("threshold --constellation pam2 --family uniform --rate 1.5");
    CHECK(r.code == 1);
}

TEST_CASE("sweep csv shape") {
    const RunResult r = run_cli("sweep --constellation pam4 --snr-from-db 0 --snr-to-db 4 "
                                "--snr-step-db 2 --families cutset,uniform");
    REQUIRE(r.code == 0);
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : r.out) {
        if (ch == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] == "snr_db,family,rate_bits");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& ln = lines[i];
        CHECK(std::count(ln.begin(), ln.end(), ',') == 2);
        CHECK((ln.find("cutset") != std::string::npos ||
               ln.find("uniform") != std::string::npos));
    }
}

TEST_CASE("sweep json shape") {
    const RunResult r = run_cli("sweep --constellation pam4 --snr-from-db 0 --snr-to-db 4 "
                                "--snr-step-db 2 --families cutset,uniform --format json");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("manifest").at("command") == "sweep");
    REQUIRE(j.at("result").size() == 6);
    CHECK(j.at("result")[0].at("family") == "cutset");
    CHECK(j.at("result")[1].at("family") == "uniform");
}

TEST_CASE("ambiguity reports both outcomes honestly") {
    const RunResult pam = run_cli("ambiguity --constellation pam16");
    REQUIRE(pam.code == 0);
    CHECK(json::parse(pam.out).at("result").at("ambiguity_free") == true);

    const RunResult qam = run_cli("ambiguity --constellation qam16-gray");
    REQUIRE(qam.code == 0);
    const json jr = json::parse(qam.out).at("result");
    CHECK(jr.at("ambiguity_free") == false);
    CHECK(jr.contains("witness"));
}

TEST_CASE("mbfit returns the searched parameter") {
    const RunResult r = run_cli("mbfit --constellation pam4 --rate 1.5");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out).at("result");
    CHECK(j.at("lambda").get<double>() > 0.0);
    CHECK(j.at("threshold_snr_db").get<double>() > 0.0);
}

TEST_CASE("reproduce validates a table fixture directory") {
    // Synthetic one-column fixture whose only row is the closed-form family:
    // exercises the full reproduce path in milliseconds.
    const fs::path dir = scratch_dir() / "fixture_ok";
    fs::create_directories(dir);
    write_file(dir / "table1_pam16.json",
               R"({"constellation": "pam4",
                   "columns": [{"rate": 1.0, "snr_cs_db": 4.7712}]})");
    const RunResult ok = run_cli("reproduce --table 1 --data-dir " + dir.string());
    CHECK(ok.code == 0);
    CHECK(ok.out.find("all checks passed") != std::string::npos);

    const fs::path bad = scratch_dir() / "fixture_bad";
    fs::create_directories(bad);
    write_file(bad / "table1_pam16.json",
               R"({"constellation": "pam4",
                   "columns": [{"rate": 1.0, "snr_cs_db": 5.5}]})");
    const RunResult fail = run_cli("reproduce --table 1 --data-dir " + bad.string());
    CHECK(fail.code == 1);
    CHECK(fail.out.find("FAIL") != std::string::npos);

    CHECK(run_cli("reproduce --table 3").code == 2);
    CHECK(run_cli("reproduce --table 1 --data-dir /no/such/dir").code == 2);
}

TEST_CASE("results do not depend on the kernel backend") {
    const RunResult s =
        run_cli("eval --constellation pam16 --dist uniform --snr-db 14 --kernel scalar");
    const RunResult a =
        run_cli("eval --constellation pam16 --dist uniform --snr-db 14 --kernel auto");
    REQUIRE(s.code == 0);
    REQUIRE(a.code == 0);
    const double ms = json::parse(s.out).at("result").at("mi_bits").get<double>();
    const double ma = json::parse(a.out).at("result").at("mi_bits").get<double>();
    CHECK(std::abs(ms - ma) <= 1e-9 * std::max(1.0, std::abs(ms)));
}

} // TEST_SUITE
