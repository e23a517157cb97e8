// kinkflow command line front end: run / analyze / odecheck / kernel.
// Exit codes: 0 pass, 1 usage or I/O error, 2 solver abort, 3 assertion fail.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinkflow/calibration.hpp"
#include "kinkflow/checkpoint.hpp"
#include "kinkflow/config.hpp"
#include "kinkflow/duhamel.hpp"
#include "kinkflow/evolution.hpp"
#include "kinkflow/rates.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// FNV-1a 64-bit content hash of the canonical config text
std::string content_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string canonical_config_text(const kinkflow::ConfigMap& map) {
    std::ostringstream os;
    for (const auto& [k, v] : map) os << k << "=" << v << "\n";
    return os.str();
}

void write_csv_row(std::ostream& os, const kinkflow::Diagnostics& r) {
    os << fmt17(r.t) << ',' << fmt17(r.energy_gap) << ',' << fmt17(r.dissipation)
       << ',' << fmt17(r.hminus1_sq) << ',' << fmt17(r.shift) << ','
       << fmt17(r.f_l2) << ',' << fmt17(r.f_grad_l2) << ',' << fmt17(r.f_sup)
       << ',' << fmt17(r.gn_ratio) << ',' << fmt17(r.mass) << ','
       << fmt17(r.alg_ratio_c) << ',' << fmt17(r.alg_ratio_E) << '\n';
}

const char* csv_header =
    "t,energy_gap,dissipation,hminus1_sq,shift,f_l2,f_grad_l2,f_sup,gn_ratio,"
    "mass,alg_ratio_c,alg_ratio_E";

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed) {
    kinkflow::ConfigMap map = kinkflow::load_config(config_path);
    for (const auto& kv : overrides) kinkflow::apply_override(map, kv);
    if (seed) map["init.seed"] = std::to_string(*seed);
    kinkflow::RunConfig cfg = kinkflow::make_run_config(map);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "diagnostics.csv");
    if (!csv) throw kinkflow::ConfigError("cannot write to output directory " + out_dir);
    csv << csv_header << '\n';

    kinkflow::ConfigMap canon = kinkflow::config_map_of(cfg);
    std::string canon_text = canonical_config_text(canon);
    json manifest;
    manifest["config"] = canon;
    manifest["config_hash"] = content_hash(canon_text);
    manifest["csv"] = "diagnostics.csv";
    {
        std::ofstream mf(fs::path(out_dir) / "run-manifest.json");
        mf << manifest.dump(2) << '\n';
    }

    kinkflow::Stepper stepper(cfg);
    int ckpt_count = 0;
    auto on_record = [&](const kinkflow::Trajectory& traj,
                         const kinkflow::EvolutionState& state) {
        write_csv_row(csv, traj.records.back());
        csv.flush();
        if (cfg.checkpoint_stride > 0 &&
            int(traj.records.size()) % cfg.checkpoint_stride == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint-%06d.kflw", ckpt_count++);
            kinkflow::save_checkpoint((fs::path(out_dir) / name).string(),
                                      kinkflow::inverse_transform(state.f), state.t);
        }
    };
    try {
        stepper.run(on_record);
    } catch (const kinkflow::AbortError& e) {
        std::cerr << "run aborted: " << e.what() << " at t = "
                  << stepper.state().t << "\n";
        return 2;
    }
    if (cfg.checkpoint_stride > 0)
        kinkflow::save_checkpoint((fs::path(out_dir) / "checkpoint-final.kflw").string(),
                                  kinkflow::inverse_transform(stepper.state().f),
                                  stepper.state().t);
    return 0;
}

std::vector<kinkflow::Diagnostics> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line != csv_header)
        throw std::runtime_error("CSV header mismatch in " + path);
    std::vector<kinkflow::Diagnostics> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) {
            std::size_t pos;
            vals.push_back(std::stod(cell, &pos));
            if (pos != cell.size())
                throw std::runtime_error("malformed CSV at line " + std::to_string(lineno));
        }
        if (vals.size() != 12)
            throw std::runtime_error("malformed CSV at line " + std::to_string(lineno));
        kinkflow::Diagnostics r;
        r.t = vals[0]; r.energy_gap = vals[1]; r.dissipation = vals[2];
        r.hminus1_sq = vals[3]; r.shift = vals[4]; r.f_l2 = vals[5];
        r.f_grad_l2 = vals[6]; r.f_sup = vals[7]; r.gn_ratio = vals[8];
        r.mass = vals[9]; r.alg_ratio_c = vals[10]; r.alg_ratio_E = vals[11];
        rows.push_back(r);
    }
    return rows;
}

// || v_c - v_0 ||_{L2(R)}^2 and || v_cz - v_0z ||_{L2(R)}^2 by fine quadrature
void kink_difference_norms(double c, double& l2_sq, double& grad_sq) {
    const double Z = 60.0 + std::abs(c), h = 1e-3 * (2.0 * Z);
    kinkflow::KinkProfile vc{c}, v0{0.0};
    l2_sq = grad_sq = 0.0;
    int n = int(2.0 * Z / h);
    for (int i = 0; i <= n; ++i) {
        double z = -Z + 2.0 * Z * i / n;
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        double dv = vc.value(z) - v0.value(z);
        double dg = vc.dz(z) - v0.dz(z);
        l2_sq += w * dv * dv;
        grad_sq += w * dg * dg;
    }
    l2_sq *= 2.0 * Z / n;
    grad_sq *= 2.0 * Z / n;
}

struct SlopeTarget {
    double center, tol;
};

int cmd_analyze(const std::string& csv_path, const std::string& out_dir,
                double w_lo, double w_hi) {
    if (!(w_lo > 0.0) || !(w_hi > w_lo))
        throw std::runtime_error("bad fit window");
    if (w_hi < 10.0 * w_lo)
        throw std::runtime_error("fit window must span at least one decade");
    std::vector<kinkflow::Diagnostics> rows = read_csv(csv_path);
    if (rows.empty()) throw std::runtime_error("empty CSV");

    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& r : rows) {
        auto push = [&](const std::string& k, double y) {
            series[k].first.push_back(r.t);
            series[k].second.push_back(y);
        };
        push("energy_gap", r.energy_gap);
        push("dissipation", r.dissipation);
        if (r.shift * r.shift >= 1e-14) push("shift_sq", r.shift * r.shift);
        push("fc_h1", std::sqrt(r.f_l2 * r.f_l2 + r.f_grad_l2 * r.f_grad_l2));
        double dl2, dg2;
        kink_difference_norms(r.shift, dl2, dg2);
        push("f0_h1", std::sqrt(r.f_l2 * r.f_l2 + r.f_grad_l2 * r.f_grad_l2 +
                                dl2 + dg2));
    }

    std::map<std::string, SlopeTarget> targets = {
        {"energy_gap", {-1.0, 0.2}},  {"shift_sq", {-0.5, 0.15}},
        {"dissipation", {-2.0, 0.3}}, {"fc_h1", {-0.5, 0.10}},
        {"f0_h1", {-0.25, 0.10}},
    };

    fs::create_directories(fs::path(out_dir) / "plotdata");
    json report;
    report["window"] = {w_lo, w_hi};
    double E0 = rows.front().energy_gap, H0 = rows.front().hminus1_sq;
    report["G0"] = H0 + E0 + std::pow(E0, 7.0);
    bool all_pass = true;
    for (const auto& [name, ty] : series) {
        kinkflow::PowerLawFit fit =
            kinkflow::fit_power_law(ty.first, ty.second, w_lo, w_hi);
        json jf;
        jf["slope"] = fit.slope;
        jf["prefactor"] = fit.prefactor;
        jf["residual"] = fit.residual;
        jf["n_points"] = fit.n_points;
        auto it = targets.find(name);
        if (it != targets.end()) {
            jf["target_slope"] = it->second.center;
            jf["tolerance"] = it->second.tol;
            bool ok = std::abs(fit.slope - it->second.center) <= it->second.tol;
            jf["pass"] = ok;
            all_pass = all_pass && ok;
        }
        report["fits"][name] = jf;

        std::ofstream dat(fs::path(out_dir) / "plotdata" / (name + ".dat"));
        for (std::size_t i = 0; i < ty.first.size(); ++i)
            if (ty.first[i] > 0.0 && ty.second[i] > 0.0)
                dat << fmt17(std::log10(ty.first[i])) << ' '
                    << fmt17(std::log10(ty.second[i])) << '\n';
    }

    kinkflow::Trajectory traj;
    traj.records = rows;
    for (const auto& [name, mon] : kinkflow::monitor_inequalities(traj)) {
        report["inequalities"][name] = {{"max_ratio", mon.max_ratio},
                                        {"n_used", mon.n_used},
                                        {"n_skipped", mon.n_skipped}};
    }
    {
        std::ofstream rf(fs::path(out_dir) / "rates.json");
        rf << report.dump(2) << '\n';
    }
    return all_pass ? 0 : 3;
}

int cmd_odecheck(const std::string& out_dir, double E0, double H0, double c_star,
                 int d_prime, const std::string& variant, double t_end, bool sweep) {
    json report;
    bool all_pass = true;
    auto run_one = [&](kinkflow::OdeParams p, json& slot) {
        auto states = kinkflow::ode_integrate(p);
        auto rep = kinkflow::check_ode_bounds(states, p);
        slot["E0"] = p.E0;
        slot["H0"] = p.H0;
        slot["c_star"] = p.c_star;
        slot["d_prime"] = p.d_prime;
        slot["variant"] = (p.variant == kinkflow::OdeVariant::max_H) ? "max-H" : "max-D";
        slot["ratios"] = {{"E_decrease", rep.ratio_E_decrease},
                          {"E_decay", rep.ratio_E_decay},
                          {"c_static", rep.ratio_c_static},
                          {"c_decay", rep.ratio_c_decay},
                          {"H", rep.ratio_H},
                          {"D", rep.ratio_D}};
        double worst = kinkflow::max_bound_ratio(rep);
        slot["max_ratio"] = worst;
        bool ok = worst <= kinkflow::calibration::ode_ratio_max;
        slot["pass"] = ok;
        all_pass = all_pass && ok;
    };
    if (sweep) {
        const double vals[3] = {0.1, 1.0, 10.0};
        report["points"] = json::array();
        for (double e : vals)
            for (double h : vals)
                for (double cs : vals) {
                    for (auto variant_v :
                         {kinkflow::OdeVariant::max_H, kinkflow::OdeVariant::max_D}) {
                        kinkflow::OdeParams p;
                        p.E0 = e;
                        p.H0 = h;
                        p.c_star = std::max(cs, 1.0);
                        p.d_prime = d_prime;
                        p.variant = variant_v;
                        p.t_end = t_end;
                        json slot;
                        run_one(p, slot);
                        report["points"].push_back(slot);
                    }
                }
    } else {
        kinkflow::OdeParams p;
        p.E0 = E0;
        p.H0 = H0;
        p.c_star = c_star;
        p.d_prime = d_prime;
        p.variant = (variant == "max-D") ? kinkflow::OdeVariant::max_D
                                         : kinkflow::OdeVariant::max_H;
        p.t_end = t_end;
        p.validate();  // c_star < 1 and friends rejected before any output
        json slot;
        run_one(p, slot);
        report["points"] = json::array({slot});
    }
    report["threshold"] = kinkflow::calibration::ode_ratio_max;
    report["pass"] = all_pass;
    fs::create_directories(out_dir);
    std::ofstream rf(fs::path(out_dir) / "ode-report.json");
    rf << report.dump(2) << '\n';
    return all_pass ? 0 : 3;
}

int cmd_kernel(const std::string& out_dir, std::vector<double> t_list,
               std::vector<int> j_list, int d) {
    if (t_list.empty()) throw std::runtime_error("empty t list");
    if (j_list.empty()) throw std::runtime_error("empty j list");
    for (double t : t_list)
        if (!(t > 0.0)) throw std::runtime_error("kernel times must be positive");
    for (int j : j_list)
        if (j < 0 || j > 3) throw std::runtime_error("derivative order must be in 0..3");

    kinkflow::KernelSpec spec;
    spec.d = d;
    spec.t_min = *std::min_element(t_list.begin(), t_list.end());

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "kernel-scaling.csv");
    csv << "t,j,l1norm,scaled\n";
    bool all_pass = true;
    for (int j : j_list) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double t : t_list) {
            double l1 = kinkflow::kernel_l1_norm(spec, t, j);
            double scaled = std::pow(t, j / 4.0) * l1;
            lo = std::min(lo, scaled);
            hi = std::max(hi, scaled);
            csv << fmt17(t) << ',' << j << ',' << fmt17(l1) << ','
                << fmt17(scaled) << '\n';
        }
        if (hi / lo > kinkflow::calibration::kernel_flatness_max) all_pass = false;
    }
    return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cahn-Hilliard kink relaxation laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", csv_path, window = "10:500";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "integrate a configured trajectory");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--set", overrides, "override section.key=value");
    std::uint64_t seed_val = 0;
    auto* seed_opt = run->add_option("--seed", seed_val, "override init.seed");

    auto* analyze = app.add_subcommand("analyze", "fit rates from diagnostics.csv");
    analyze->add_option("csv", csv_path, "diagnostics CSV path")->required();
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--window", window, "fit window t1:t2");

    double E0 = 1.0, H0 = 1.0, c_star = 1.0, ode_t_end = 1e4;
    int d_prime = 3;
    std::string variant = "max-H";
    bool sweep = false;
    auto* ode = app.add_subcommand("odecheck", "verify the decay ODE bounds");
    ode->add_option("--out", out_dir, "output directory");
    ode->add_option("--E0", E0);
    ode->add_option("--H0", H0);
    ode->add_option("--c-star", c_star);
    ode->add_option("--d-prime", d_prime);
    ode->add_option("--variant", variant)->check(CLI::IsMember({"max-H", "max-D"}));
    ode->add_option("--t-end", ode_t_end);
    ode->add_flag("--sweep", sweep, "27-point grid, both variants");

    std::vector<double> t_list = {0.1, 0.316, 1.0, 3.16, 10.0};
    std::vector<int> j_list = {0, 1, 2, 3};
    int kernel_d = 2;
    auto* kern = app.add_subcommand("kernel", "kernel L1 scaling study");
    kern->add_option("--out", out_dir, "output directory");
    kern->add_option("--t", t_list, "evaluation times");
    kern->add_option("--j", j_list, "derivative orders");
    kern->add_option("--d", kernel_d, "dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        if (*run) {
            if (seed_opt->count()) seed = seed_val;
            return cmd_run(config_path, out_dir, overrides, seed);
        }
        if (*analyze) {
            std::size_t colon = window.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("window must be t1:t2");
            double w_lo = std::stod(window.substr(0, colon));
            double w_hi = std::stod(window.substr(colon + 1));
            return cmd_analyze(csv_path, out_dir, w_lo, w_hi);
        }
        if (*ode)
            return cmd_odecheck(out_dir, E0, H0, c_star, d_prime, variant,
                                ode_t_end, sweep);
        if (*kern) return cmd_kernel(out_dir, t_list, j_list, kernel_d);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
