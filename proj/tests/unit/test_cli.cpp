#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "latdisc/cli.hpp"

using namespace latdisc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "latdisc_cli_test" / name;
    fs::remove_all(p);
    return p;
}

Run run(const std::string& command, const std::string& config_text, const fs::path& out_dir) {
    std::ostringstream out, err;
    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.out = &out;
    Run r;
    r.code = run_command(command, Config::parse(config_text), ctx, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string shell(const std::string& cmd) {
    std::string text;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) text += buf;
    const int status = pclose(pipe);
    return std::to_string(WEXITSTATUS(status)) + ":" + text;
}

}  // namespace

TEST_CASE("angles") {
    const auto a = parse_angles("0, golden atan:3/7 atan:0.5 1.25");
    REQUIRE(a.size() == 5);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == doctest::Approx(std::atan((std::sqrt(5.0) - 1) / 2)));
    CHECK(a[2] == doctest::Approx(std::atan(3.0 / 7.0)));
    CHECK(a[3] == doctest::Approx(std::atan(0.5)));
    CHECK(a[4] == 1.25);
    CHECK_THROWS(parse_angles("atan:3/0"));
    CHECK_THROWS(parse_angles("north"));
}

TEST_CASE("count prints the lattice count") {
    const auto dir = scratch("count");
    const auto r = run("count", "body = ball:d=2,r=1\nt = 2\n", dir);
    CHECK(r.code == 0);
    CHECK(r.out == "13\n");
}

TEST_CASE("count with a lower bound writes the events") {
    const auto dir = scratch("events");
    const auto r = run("count", "body = ball:d=2,r=1\nt = 2\nlo = 0\n", dir);
    CHECK(r.code == 0);
    const auto csv = slurp(dir / "events.csv");
    CHECK(csv.find("# body: ball:d=2,r=1\n") != std::string::npos);
    CHECK(csv.find("# tool: latdisc 0.1.0\n") != std::string::npos);
    CHECK(csv.find("rho,multiplicity\n1,4\n1.4142135623730951,4\n2,4\n") != std::string::npos);
}

TEST_CASE("invalid input exits with 1 and writes nothing") {
    for (const auto& [cmd, cfg] : std::vector<std::pair<std::string, std::string>>{
             {"count", "body = blob:d=2\nt = 2\n"},
             {"count", "body = ball:d=2,r=1\nt = -2\n"},
             {"sweep", "body = ball:d=2,r=1\nR = 16,8,4,2\n"},
             {"mollify", "body = ball:d=2,r=1\nt = 1\neps = 1\n"},
             {"rotate-scan", "body = ball:d=2,r=1\nK = 100\n"},
             {"unknown", "body = ball:d=2,r=1\n"}}) {
        const auto dir = scratch("invalid");
        const auto r = run(cmd, cfg, dir);
        CHECK_MESSAGE(r.code == 1, cmd, " ", cfg);
        CHECK(!r.err.empty());
        CHECK(!fs::exists(dir));
    }
}

TEST_CASE("budget and convergence failures exit with 2") {
    const auto dir = scratch("budget");
    CHECK(run("count", "body = ball:d=2,r=1\nt = 1000\nlo = 0\nbudget = 100\n", dir).code == 2);
    CHECK(!fs::exists(dir));
    const auto p = run("poisson-check", "body = ball:d=2,r=1\nt = 7.3\neps = 0.02\nK = 10\n", dir);
    CHECK(p.code == 2);
    CHECK(p.err.find("K") != std::string::npos);
    CHECK(!fs::exists(dir));
}

TEST_CASE("sweep writes a table, a report and a plot") {
    const auto dir = scratch("sweep");
    const std::string cfg = "body = ball:d=2,r=1\n[sweep]\nR = 2^4..2^11\n";
    const auto r = run("sweep", cfg, dir);
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "sweep.json"));
    const double slope = report.at("slope").get<double>();
    CHECK(slope >= -1.65);
    CHECK(slope <= -1.35);
    CHECK(report.at("meta").at("body") == "ball:d=2,r=1");
    const auto csv = slurp(dir / "sweep.csv");
    CHECK(csv.find("R,h,G,normalized,events_used\n") != std::string::npos);
    CHECK(slurp(dir / "sweep.svg").find("<svg") == 0);

    // reruns are byte-identical
    const auto dir2 = scratch("sweep2");
    REQUIRE(run("sweep", cfg, dir2).code == 0);
    for (const char* f : {"sweep.csv", "sweep.json", "sweep.svg"}) CHECK(slurp(dir / f) == slurp(dir2 / f));
}

TEST_CASE("each command produces its artifacts") {
    struct Item {
        std::string cmd, cfg;
        std::vector<std::string> files;
    };
    const std::vector<Item> items{
        {"msd", "body = ball:d=2,r=1\nR = 1\nh = 1\nrelative = false\n", {"msd.json"}},
        {"mollify", "body = ball:d=2,r=1\nt = 3\neps = 0.1\nsandwich_t = 1..4:7\n", {"mollify.json", "sandwich.csv"}},
        {"poisson-check", "body = ball:d=2,r=1\nt = 3\neps = 0.5\nK = 60\n", {"poisson.json"}},
        {"fourier-scan", "body = ball:d=2,r=1\nradii = log:1..200:40\ndirections = 4\n",
         {"fourier.csv", "fourier.json", "fourier.svg"}},
        {"rotate-scan", "body = superellipse:m=4,a=1,b=1\nK = 500\nR = 32\n", {"rotations.csv", "rotations.json"}},
        {"diag", "body = ball:d=2,r=1\ntau = 1\neps = 0.1\n", {"diag.json"}}};
    for (const auto& it : items) {
        const auto dir = scratch(it.cmd);
        const auto r = run(it.cmd, it.cfg, dir);
        CHECK_MESSAGE(r.code == 0, it.cmd, ": ", r.err);
        CHECK(!r.out.empty());
        for (const auto& f : it.files) CHECK_MESSAGE(fs::exists(dir / f), it.cmd, " ", f);
    }
    const auto msd = nlohmann::json::parse(slurp(fs::temp_directory_path() / "latdisc_cli_test/msd/msd.json"));
    CHECK(msd.at("G").get<double>() == doctest::Approx(1.5383405356729549).epsilon(1e-12));
    const auto rot = slurp(fs::temp_directory_path() / "latdisc_cli_test/rotate-scan/rotations.csv");
    CHECK(rot.find("theta,mP,K,M_hat,cond_stat,G_scaled\n") != std::string::npos);
}

TEST_CASE("command line binary") {
    const char* bin = std::getenv("LATDISC_CLI");
    if (!bin) {
        MESSAGE("LATDISC_CLI not set; skipping the binary checks");
        return;
    }
    const auto dir = scratch("binary");
    const std::string b = std::string("\"") + bin + "\"";
    CHECK(shell(b + " count --body ball:d=2,r=1 --t 2 --out " + dir.string() + " 2>/dev/null") == "0:13\n");
    CHECK(shell(b + " count --body nonsense --t 2 --out " + dir.string() + " 2>/dev/null") == "1:");
    CHECK(!fs::exists(dir));

    const auto cfg = dir.parent_path() / "run.ini";
    {
        std::ofstream f(cfg);
        f << "body = ball:d=3,r=1\n[count]\nt = 5\n";
    }
    CHECK(shell(b + " --config " + cfg.string() + " count 2>/dev/null") == "0:" + std::to_string(515) + "\n");
    // flags override the file
    CHECK(shell(b + " --config " + cfg.string() + " count --t 1 2>/dev/null") == "0:7\n");
    CHECK(shell(b + " --config " + cfg.string() + " --set count.t=1 count 2>/dev/null") == "0:7\n");
    CHECK(shell(b + " count --body ball:d=2,r=1 --t 1000 --lo 0 --budget 10 --out " + dir.string() +
                " 2>/dev/null") == "2:");
}
