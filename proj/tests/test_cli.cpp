#include "fhr/cli.hpp"
#include "fhr/dgp.hpp"
#include "fhr/panel_io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace fhr;
using fhr::cli::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("CSV round trip is byte identical") {
    const Panel p = simulate_panel(DgpConfig::experiment('B'), 50, 9);
    for (bool latent : {false, true}) {
        std::ostringstream a;
        write_panel_csv(a, p, latent);
        std::istringstream in(a.str());
        std::ostringstream b;
        write_panel_csv(b, read_panel_csv(in), latent);
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("CSV parse errors name the line") {
    std::istringstream bad("unit,y0,x1,y1,x2,y2\n0,1,0,1,1,1\n1,1,0,1,1\n");
    try {
        read_panel_csv(bad, "bad.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("bad.csv:3") == 0);
    }
    std::istringstream neg("unit,y0,x1,y1,x2,y2\n0,-1,0,1,1,1\n");
    CHECK_THROWS_AS(read_panel_csv(neg), ParseError);
    std::istringstream head("unit,y0,y1\n");
    CHECK_THROWS_AS(read_panel_csv(head), ParseError);
}

TEST_CASE("config merge rejects unknown keys and keeps precedence") {
    cli::RunConfig cfg;
    cfg.merge(json{{"n", 10}, {"experiment", "B"}});
    cfg.merge(json{{"n", 20}});
    CHECK(cfg.n == 20);
    CHECK(cfg.experiment == "B");
    CHECK_THROWS_AS(cfg.merge(json{{"bogus", 1}}), cli::ConfigError);
    CHECK_THROWS_AS(cfg.merge(json{{"n", "many"}}), cli::ConfigError);
    cli::RunConfig bad;
    bad.experiment = "Z";
    CHECK_THROWS_AS(bad.validate(), cli::ConfigError);
    CHECK(cfg.to_json()["n"] == 20);
}

TEST_CASE("simulate then estimate through the command layer") {
    const std::string path = "cli_test_panel.csv";
    cli::RunConfig cfg;
    cfg.n = 3;
    cfg.seed = 7;
    cfg.out = path;
    cli::run_command("simulate", cfg);
    const std::string first = slurp(path);
    cli::run_command("simulate", cfg);
    CHECK(first == slurp(path));
    int lines = 0;
    for (char c : first) lines += c == '\n';
    CHECK(lines == 4);
    CHECK(first.rfind("unit,y0,x1,y1,x2,y2\n", 0) == 0);

    cfg.n = 20000;
    cfg.experiment = "B";
    cli::run_command("simulate", cfg);
    cli::RunConfig est;
    est.input = path;
    est.experiment = "B";
    est.moment = "eff-se";
    const cli::CommandResult r = cli::run_command("estimate", est);
    CHECK(r.report["warnings"].size() == 1);
    CHECK(r.report["config"]["moment"] == "eff-se");
    est.moment = "simple";
    const cli::CommandResult s = cli::run_command("estimate", est);
    CHECK(s.report["warnings"].empty());
    CHECK(s.report["converged"] == true);
    CHECK(s.exit_code == 0);
    std::remove(path.c_str());
}

TEST_CASE("simulate requires an output path") {
    cli::RunConfig cfg;
    cfg.n = 3;
    CHECK_THROWS_AS(cli::run_command("simulate", cfg), cli::ConfigError);
    CHECK_THROWS_AS(cli::run_command("frobnicate", cfg), cli::ConfigError);
}
