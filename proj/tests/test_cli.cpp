#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <fstream>
#include <sstream>

#include "kinkflow/config.hpp"
#include "kinkflow/kink.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string output;   // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    std::string log = (fs::temp_directory_path() / "kinkflow_cli_out.txt").string();
    std::string cmd = std::string(KINKFLOW_CLI_PATH) + " " + args + " > " + log +
                      " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

fs::path make_workdir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("kinkflow_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_small_config(const fs::path& path, double c0, double eps) {
    std::ofstream out(path);
    out << "[grid]\nd = 2\nn_transverse = 8\nn_z = 256\nL_z = 20\n"
        << "[run]\nt_end = 2\ndt = 0.01\nrecord_stride = 16\n"
        << "[init]\nc0 = " << c0 << "\neps = " << eps << "\nshape = mixed\n";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parser") {
    using namespace kinkflow;
    std::istringstream text(
        "# comment\n[grid]\nd = 2\nn_z = 256\nL_z = 25  # inline\n"
        "n_transverse = 8\n[init]\nc0 = 0.5\n");
    ConfigMap map = parse_config_text(text);
    REQUIRE(map.at("grid.d") == "2");
    REQUIRE(map.at("grid.L_z") == "25");
    REQUIRE(map.at("init.c0") == "0.5");

    RunConfig cfg = make_run_config(map);
    REQUIRE(cfg.grid.n_z == 256);
    REQUIRE(cfg.init.c0 == 0.5);

    apply_override(map, "init.eps=0.05");
    REQUIRE(make_run_config(map).init.eps == 0.05);

    map["grid.bogus"] = "1";
    REQUIRE_THROWS_AS(make_run_config(map), ConfigError);

    std::istringstream bad("key_without_value\n");
    REQUIRE_THROWS_AS(parse_config_text(bad), ConfigError);
}

TEST_CASE("missing config file names the path") {
    CmdResult r = run_cli("run --config /nonexistent/nope.cfg");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.output.find("/nonexistent/nope.cfg") != std::string::npos);
}

TEST_CASE("trivial run produces near-zero diagnostics") {
    fs::path dir = make_workdir("trivial");
    write_small_config(dir / "run.cfg", 0.0, 0.0);
    CmdResult r = run_cli("run --config " + (dir / "run.cfg").string() + " --out " +
                          dir.string());
    REQUIRE(r.exit_code == 0);

    std::ifstream csv(dir / "diagnostics.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    REQUIRE(header ==
            "t,energy_gap,dissipation,hminus1_sq,shift,f_l2,f_grad_l2,f_sup,"
            "gn_ratio,mass,alg_ratio_c,alg_ratio_E");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');   // t
        for (int col = 1; col < 12 && std::getline(ls, cell, ','); ++col)
            REQUIRE(std::abs(std::stod(cell)) < 1e-7);
    }
    REQUIRE(rows >= 2);

    // manifest carries the canonical config and a hash
    std::string manifest = slurp(dir / "run-manifest.json");
    REQUIRE(manifest.find("config_hash") != std::string::npos);
    REQUIRE(manifest.find("grid.n_z") != std::string::npos);
}

TEST_CASE("identical seed gives bit-identical CSV") {
    fs::path d1 = make_workdir("det1"), d2 = make_workdir("det2");
    write_small_config(d1 / "run.cfg", 0.1, 0.02);
    std::string base = "run --config " + (d1 / "run.cfg").string() +
                       " --set init.shape=random --seed 42 --out ";
    REQUIRE(run_cli(base + d1.string()).exit_code == 0);
    REQUIRE(run_cli(base + d2.string()).exit_code == 0);
    REQUIRE(slurp(d1 / "diagnostics.csv") == slurp(d2 / "diagnostics.csv"));
    REQUIRE(!slurp(d1 / "diagnostics.csv").empty());
}

TEST_CASE("analyze on synthetic power laws") {
    fs::path dir = make_workdir("analyze");
    {
        std::ofstream csv(dir / "diagnostics.csv");
        csv << "t,energy_gap,dissipation,hminus1_sq,shift,f_l2,f_grad_l2,f_sup,"
               "gn_ratio,mass,alg_ratio_c,alg_ratio_E\n";
        int n = 80;
        for (int i = 0; i < n; ++i) {
            double t = std::pow(10.0, 3.0 * i / (n - 1));   // 1 .. 1000
            double e = 1.0 / t;
            double diss = 2.0 / (t * t);
            double shift = 0.5 * std::pow(t, -0.25);
            double fc = 0.1 * std::pow(t, -0.5);
            csv << t << ',' << e << ',' << diss << ",0.5," << shift << ','
                << fc * 0.7 << ',' << fc * 0.714142842854285 << ',' << fc << ','
                << "0.5,0,0.5,0.5\n";
        }
    }
    CmdResult r = run_cli("analyze " + (dir / "diagnostics.csv").string() +
                          " --window 10:1000 --out " + dir.string());
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    std::string rates = slurp(dir / "rates.json");
    REQUIRE(rates.find("energy_gap") != std::string::npos);
    REQUIRE(fs::exists(dir / "plotdata" / "energy_gap.dat"));

    // window narrower than one decade is rejected
    CmdResult nw = run_cli("analyze " + (dir / "diagnostics.csv").string() +
                           " --window 10:50 --out " + dir.string());
    REQUIRE(nw.exit_code == 1);

    // malformed CSV
    std::ofstream bad(dir / "bad.csv");
    bad << "nope\n";
    bad.close();
    REQUIRE(run_cli("analyze " + (dir / "bad.csv").string() + " --out " +
                    dir.string())
                .exit_code == 1);
}

TEST_CASE("odecheck single point and rejection") {
    fs::path dir = make_workdir("ode");
    CmdResult r = run_cli("odecheck --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "ode-report.json"));
    std::string rep = slurp(dir / "ode-report.json");
    REQUIRE(rep.find("\"pass\": true") != std::string::npos);

    REQUIRE(run_cli("odecheck --c-star 0.5 --out " + dir.string()).exit_code == 1);
}

TEST_CASE("kernel subcommand") {
    fs::path dir = make_workdir("kernel");
    CmdResult r = run_cli("kernel --t 0.5 1.0 --j 0 --out " + dir.string());
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    std::ifstream csv(dir / "kernel-scaling.csv");
    std::string header, line;
    REQUIRE(std::getline(csv, header));
    REQUIRE(header == "t,j,l1norm,scaled");
    REQUIRE(std::getline(csv, line));
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');   // t
    std::getline(ls, cell, ',');   // j
    std::getline(ls, cell, ',');   // l1norm
    REQUIRE(std::stod(cell) >= 1.0);

    REQUIRE(run_cli("kernel --t -1 --out " + dir.string()).exit_code == 1);
    REQUIRE(run_cli("kernel --t --out " + dir.string()).exit_code == 1);
}
