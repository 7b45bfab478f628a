// polyext: command-line front end for the polymer toolkit.
//
// Exit codes: 0 success, 1 validation error, 2 budget error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyext/config.hpp"
#include "polyext/errors.hpp"
#include "polyext/experiments.hpp"
#include "polyext/io.hpp"
#include "polyext/multiscale.hpp"
#include "polyext/polymer.hpp"
#include "polyext/theory.hpp"
#include "polyext/walk.hpp"

namespace {

using polyext::config::ExperimentConfig;
namespace experiments = polyext::experiments;

// Flags shared by every experiment subcommand. Values are kept as text and applied
// through the config schema, after the config file, so overrides win.
struct CommonFlags {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;

    void attach(CLI::App* app, const std::vector<std::pair<std::string, std::string>>& flags) {
        app->add_option("--config", config_path, "flat key = value config file");
        for (const auto& [flag, key] : flags) {
            std::string k = key;
            app->add_option_function<std::string>(
                flag, [this, k](const std::string& v) { values[k] = v; }, "overrides config key '" + key + "'");
        }
        app->add_option("--set", sets, "override any config key: --set key=value (repeatable)");
    }

    ExperimentConfig resolve(const std::string& experiment) const {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : polyext::config::load_config(config_path);
        for (const auto& s : sets) {
            std::size_t eq = s.find('=');
            if (eq == std::string::npos) throw polyext::ValidationError("--set expects key=value, got '" + s + "'");
            polyext::config::set_value(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [k, v] : values) polyext::config::set_value(cfg, k, v);
        cfg.experiment = experiment;
        cfg.validate();
        return cfg;
    }
};

const std::vector<std::pair<std::string, std::string>> kCommon = {
    {"--seed", "seed"},           {"--replicas", "replicas"}, {"--n", "n"},
    {"--ns", "ns"},               {"--beta-hat", "beta_hat"}, {"--m-scales", "m_scales"},
    {"--out", "out"},             {"--threads", "threads"},   {"--wall-mode", "wall_mode"},
    {"--window-c", "window_c"},
};

std::vector<std::pair<std::string, std::string>> with(std::vector<std::pair<std::string, std::string>> extra) {
    auto all = kCommon;
    all.insert(all.end(), extra.begin(), extra.end());
    return all;
}

void report(const experiments::RunRecord& rec) {
    const std::string prefix = rec.config.out.empty() ? "polyext-" + rec.experiment : rec.config.out;
    experiments::write_outputs(rec, prefix);
    std::cout << "experiment = " << rec.experiment << "\n";
    for (const auto& [k, v] : rec.aggregates) std::cout << k << " = " << polyext::io::fmt(v) << "\n";
    std::cout << "wall_clock_seconds = " << polyext::io::fmt(rec.wall_clock_seconds) << "\n";
    std::cout << "wrote " << prefix << ".csv and " << prefix << ".manifest.json\n";
}

std::vector<double> parse_reals(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0') throw polyext::ValidationError("expected a comma-separated list of reals, got '" + s + "'");
        out.push_back(v);
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Directed polymer partition functions, multiscale diagnostics and Monte Carlo experiments"};
    app.require_subcommand(1);

    // constants
    auto* c_constants = app.add_subcommand("constants", "limit constants for a given beta_hat");
    double k_beta = 0.5;
    std::optional<std::int64_t> k_n;
    bool k_json = false;
    c_constants->add_option("--beta-hat", k_beta, "disorder strength in (0, 1)");
    c_constants->add_option("--n", k_n, "also report R_N and beta_N");
    c_constants->add_flag("--json", k_json, "print a JSON report");

    // rn
    auto* c_rn = app.add_subcommand("rn", "replica overlap R_N");
    std::int64_t rn_n = 1;
    std::optional<double> rn_beta;
    c_rn->add_option("--n", rn_n, "N >= 1")->required();
    c_rn->add_option("--beta-hat", rn_beta, "also report beta_N");

    // simulate
    auto* c_sim = app.add_subcommand("simulate", "log Z_N at one start for one disorder sample");
    CommonFlags f_sim;
    f_sim.attach(c_sim, kCommon);
    std::int64_t sim_x = 0, sim_y = 0;
    std::string sim_dump;
    c_sim->add_option("--x", sim_x, "start x");
    c_sim->add_option("--y", sim_y, "start y");
    c_sim->add_option("--dump", sim_dump, "write the log-weight field over the extremes box to this file");

    CommonFlags f_ext, f_gauss, f_mom, f_tail, f_brw, f_ew, f_dom;
    auto* c_ext = app.add_subcommand("extremes", "max_x log Z_N(x) / sqrt(log N) over the box of side sqrt(N)");
    f_ext.attach(c_ext, kCommon);
    auto* c_gauss = app.add_subcommand("gaussian", "distribution of log Z_N(0) against the limiting normal law");
    f_gauss.attach(c_gauss, kCommon);
    auto* c_mom = app.add_subcommand("moments", "replica moment battery, exact second moments, point-to-point moments");
    f_mom.attach(c_mom, with({{"--p", "moment_p"}}));
    std::string mom_kind = "battery";
    c_mom->add_option("--kind", mom_kind, "battery | second | ptop")->check(CLI::IsMember({"battery", "second", "ptop"}));
    auto* c_tail = app.add_subcommand("lower-tail", "empirical lower tail of Z_N(0)");
    f_tail.attach(c_tail, with({{"--tail-points", "tail_points"}}));
    auto* c_brw = app.add_subcommand("brw", "branching random walk with a depth-dependent variance profile");
    f_brw.attach(c_brw, with({{"--depth", "depth"},
                              {"--branching", "branching"},
                              {"--profile", "profile"},
                              {"--profile-beta-hat", "profile_beta_hat"}}));
    auto* c_ew = app.add_subcommand("ew-cov", "variance of psi-smoothed phi_N against the Edwards-Wilkinson prediction");
    f_ew.attach(c_ew, with({{"--psi-scale", "psi_scale"}, {"--psi-amplitude", "psi_amplitude"}, {"--ew-h", "ew_h"}}));
    auto* c_dom = app.add_subcommand("domination", "multiscale diagnostics: endpoint domination event or truncation gaps");
    f_dom.attach(c_dom, with({{"--l", "domination_l"}, {"--hat-delta", "hat_delta"}, {"--levels", "levels"}}));
    std::string dom_kind = "event";
    c_dom->add_option("--kind", dom_kind, "event | truncation")->check(CLI::IsMember({"event", "truncation"}));

    // variational
    auto* c_var = app.add_subcommand("variational", "minimize sum g/f over the constrained set and compare with the bound");
    std::int64_t v_m = 3, v_t = 1;
    double v_a = 0.0, v_step = 0.05;
    std::string v_f, v_method = "all";
    c_var->add_option("--m-scales", v_m, "M");
    c_var->add_option("--t", v_t, "t in [1, M]");
    c_var->add_option("--a", v_a, "a >= 0");
    c_var->add_option("--f", v_f, "comma-separated nondecreasing f(1..M); default all ones");
    c_var->add_option("--grid-step", v_step, "grid step (also the strict-constraint margin)");
    c_var->add_option("--method", v_method, "grid | descent | brute | all")
        ->check(CLI::IsMember({"grid", "descent", "brute", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*c_constants) {
        namespace th = polyext::theory;
        nlohmann::ordered_json j;
        j["beta_hat"] = k_beta;
        j["lambda_sq"] = th::lambda_sq(k_beta);
        j["sigma_star"] = th::sigma_star(k_beta);
        j["sigma_star_closed_form"] = th::sigma_star_closed_form(k_beta);
        th::NaiveBound nb = th::naive_bound(k_beta);
        j["naive_literal"] = nb.literal;
        j["naive_normalized"] = nb.normalized;
        j["sigma_at_1"] = th::sigma_profile(1.0, k_beta);
        j["barrier_M0"] = polyext::multiscale::barrier_M0(k_beta);
        j["limit_second_moment"] = 1.0 / (1.0 - k_beta * k_beta);
        if (k_n) {
            j["N"] = *k_n;
            j["R_N"] = polyext::walk::overlap_R(*k_n);
            j["beta_N"] = polyext::walk::beta_N(k_beta, *k_n);
        }
        if (k_json) {
            std::cout << j.dump(2) << "\n";
        } else {
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.value().is_number_float()) std::cout << it.key() << " = " << polyext::io::fmt(it.value().get<double>()) << "\n";
                else std::cout << it.key() << " = " << it.value().dump() << "\n";
            }
        }
        return 0;
    }
    if (*c_rn) {
        std::cout << "R_" << rn_n << " = " << polyext::io::fmt(polyext::walk::overlap_R(rn_n)) << "\n";
        if (rn_beta) std::cout << "beta_N = " << polyext::io::fmt(polyext::walk::beta_N(*rn_beta, rn_n)) << "\n";
        return 0;
    }
    if (*c_sim) {
        ExperimentConfig cfg = f_sim.resolve("simulate");
        polyext::polymer::DenormalGuard guard;
        polyext::env::DisorderView env(cfg.seed);
        auto m = polyext::polymer::Model::subcritical(cfg.beta_hat, cfg.n);
        auto opt = cfg.sweep_options();
        polyext::Point x{sim_x, sim_y};
        auto sched = polyext::multiscale::schedule(cfg.n, cfg.m_scales);
        std::vector<double> prof = polyext::multiscale::log_W_profile(env, m, x, sched, opt);
        double lz = 0.0;
        for (double v : prof) lz += v;
        std::cout << "N = " << cfg.n << "\nbeta_N = " << polyext::io::fmt(m.beta) << "\nlog_Z = " << polyext::io::fmt(lz) << "\n";
        for (std::size_t k = 0; k < prof.size(); ++k)
            std::cout << "log_W_" << k + 1 << " = " << polyext::io::fmt(prof[k]) << "\n";
        if (!sim_dump.empty()) {
            std::int64_t r = std::int64_t(std::floor(std::sqrt(double(cfg.n))));
            auto f = polyext::polymer::backward_sweep(env, m, 1, cfg.n, polyext::Box::centered(x, r), opt);
            polyext::io::atomic_write(sim_dump, polyext::io::encode_log_field(f, cfg.n));
            std::cout << "wrote " << sim_dump << "\n";
        }
        return 0;
    }
    if (*c_ext) report(experiments::run_extremes(f_ext.resolve("extremes")));
    if (*c_gauss) report(experiments::run_gaussian_limit(f_gauss.resolve("gaussian-limit")));
    if (*c_mom) {
        if (mom_kind == "battery") report(experiments::run_moment_identity(f_mom.resolve("moment-identity")));
        else if (mom_kind == "second") report(experiments::run_second_moment(f_mom.resolve("second-moment")));
        else report(experiments::run_ptop(f_mom.resolve("ptop")));
    }
    if (*c_tail) report(experiments::run_lower_tail(f_tail.resolve("lower-tail")));
    if (*c_brw) report(experiments::run_brw(f_brw.resolve("brw")));
    if (*c_ew) report(experiments::run_ew_cov(f_ew.resolve("ew-cov")));
    if (*c_dom) {
        if (dom_kind == "event") report(experiments::run_domination(f_dom.resolve("domination")));
        else report(experiments::run_truncation(f_dom.resolve("truncation")));
    }
    if (*c_var) {
        namespace th = polyext::theory;
        th::VariationalInstance inst;
        inst.M = v_m;
        inst.t = v_t;
        inst.a = v_a;
        inst.f = v_f.empty() ? std::vector<double>(std::size_t(std::max<std::int64_t>(v_m, 0)), 1.0) : parse_reals(v_f);
        inst.validate();
        std::cout << "bound = " << polyext::io::fmt(th::variational_bound(inst)) << "\n";
        auto show = [](const char* name, const th::VariationalResult& r) {
            std::cout << name << ".value = " << polyext::io::fmt(r.value) << "\n" << name << ".g =";
            for (double g : r.g) std::cout << " " << polyext::io::fmt(g);
            std::cout << "\n";
        };
        if (v_method == "grid" || v_method == "all") show("grid", th::variational_search_grid(inst, v_step));
        if (v_method == "descent" || v_method == "all") show("descent", th::variational_search_descent(inst, v_step));
        if (v_method == "brute" || (v_method == "all" && inst.M - inst.t + 1 <= 4))
            show("brute", th::variational_search_brute(inst, v_step));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const polyext::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 2;
    } catch (const polyext::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
