#include "polyext/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include "json.hpp"

#include "polyext/env.hpp"
#include "polyext/errors.hpp"
#include "polyext/io.hpp"
#include "polyext/multiscale.hpp"
#include "polyext/parallel.hpp"
#include "polyext/polymer.hpp"
#include "polyext/stats.hpp"
#include "polyext/theory.hpp"
#include "polyext/walk.hpp"

#ifndef POLYEXT_VERSION
#define POLYEXT_VERSION "unknown"
#endif

namespace polyext::experiments {
namespace {

using config::ExperimentConfig;
using Clock = std::chrono::steady_clock;

std::string tag(const std::string& name, std::int64_t N) { return name + "@" + std::to_string(N); }

RunRecord start_record(const std::string& experiment, const ExperimentConfig& cfg) {
    cfg.validate();
    RunRecord rec;
    rec.experiment = experiment;
    rec.config = cfg;
    rec.config.experiment = experiment;
    return rec;
}

void add_summary(RunRecord& rec, const std::string& name, std::int64_t N, const std::vector<double>& v) {
    stats::Summary s = stats::summarize(v);
    rec.add(tag(name + ".mean", N), s.mean);
    rec.add(tag(name + ".sd", N), s.sd);
    rec.add(tag(name + ".stderr", N), s.stderr_mean);
    rec.add(tag(name + ".q05", N), stats::quantile(v, 0.05));
    rec.add(tag(name + ".q50", N), stats::quantile(v, 0.5));
    rec.add(tag(name + ".q95", N), stats::quantile(v, 0.95));
    rec.add(tag(name + ".min", N), s.min);
    rec.add(tag(name + ".max", N), s.max);
}

int threads_of(const ExperimentConfig& cfg) { return parallel::thread_count(cfg.threads); }

std::uint64_t seed_of(const ExperimentConfig& cfg, std::int64_t r) {
    return parallel::replica_seed(cfg.seed, std::uint64_t(r));
}

// log Z_N(0) per replica from forward passes.
std::vector<double> log_Z_origin(const ExperimentConfig& cfg, std::int64_t N) {
    polymer::Model m = polymer::Model::subcritical(cfg.beta_hat, N);
    polymer::SweepOptions opt = cfg.sweep_options();
    return parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
        polymer::DenormalGuard guard;
        env::DisorderView env(seed_of(cfg, r));
        return polymer::forward_log_Z(env, m, {0, 0}, {N}, opt)[0];
    });
}

Box extremes_box(std::int64_t N) {
    std::int64_t r = std::int64_t(std::floor(std::sqrt(double(N))));
    while ((r + 1) * (r + 1) <= N) ++r;
    while (r * r > N) --r;
    return Box::centered({0, 0}, r);
}

}  // namespace

const char* code_version() { return POLYEXT_VERSION; }

std::vector<double> RunRecord::column(const std::string& name, std::int64_t N) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValidationError("record has no column '" + name + "'");
    std::size_t j = std::size_t(it - columns.begin());
    std::vector<double> out;
    for (const Row& r : rows)
        if (r.N == N) out.push_back(r.values[j]);
    return out;
}

double RunRecord::aggregate(const std::string& name) const {
    for (const auto& [k, v] : aggregates)
        if (k == name) return v;
    throw ValidationError("record has no aggregate '" + name + "'");
}

std::string to_csv(const RunRecord& rec) {
    std::string s = "experiment,N,beta_hat,M,seed,replica_id";
    for (const auto& c : rec.text_columns) s += "," + c;
    for (const auto& c : rec.columns) s += "," + c;
    s += "\n";
    const std::string prefix = rec.experiment + ",";
    const std::string mid = "," + io::fmt(rec.config.beta_hat) + "," + std::to_string(rec.config.m_scales) + "," +
                            std::to_string(rec.config.seed) + ",";
    for (const auto& row : rec.rows) {
        s += prefix + std::to_string(row.N) + mid + std::to_string(row.replica_id);
        for (const auto& t : row.text) s += "," + t;
        for (double v : row.values) s += "," + io::fmt(v);
        s += "\n";
    }
    return s;
}

std::string to_manifest(const RunRecord& rec, const std::string& csv_name) {
    nlohmann::ordered_json j;
    j["format"] = "polyext-manifest";
    j["format_version"] = kManifestFormatVersion;
    j["csv_format_version"] = kCsvFormatVersion;
    j["experiment"] = rec.experiment;
    j["code_version"] = code_version();
    j["csv"] = csv_name;
    j["rows"] = rec.rows.size();
    j["wall_clock_seconds"] = rec.wall_clock_seconds;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config::to_pairs(rec.config)) c[k] = v;
    j["config"] = c;
    nlohmann::ordered_json a = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rec.aggregates) {
        if (std::isfinite(v)) a[k] = v;
        else a[k] = io::fmt(v);
    }
    j["aggregates"] = a;
    return j.dump(2) + "\n";
}

void write_outputs(const RunRecord& rec, const std::string& prefix) {
    std::filesystem::path p(prefix);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string csv = prefix + ".csv";
    io::atomic_write(csv, to_csv(rec));
    io::atomic_write(prefix + ".manifest.json", to_manifest(rec, std::filesystem::path(csv).filename().string()));
}

double toward_target_p(const std::vector<double>& a, const std::vector<double>& b, double target) {
    stats::PairedT t = stats::paired_t(b, a);
    double mean_a = stats::summarize(a).mean;
    return mean_a > target ? t.p_less : t.p_greater;
}

RunRecord run_extremes(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("extremes", cfg);
    rec.columns = {"m_N", "log_Z_max", "argmax_x", "argmax_y", "log_Z_0", "profile_sum"};
    for (std::int64_t k = 1; k <= cfg.m_scales; ++k) rec.columns.push_back("log_W_" + std::to_string(k));
    const polymer::SweepOptions opt = cfg.sweep_options();
    std::vector<std::int64_t> Ns = cfg.sizes();
    for (std::int64_t N : Ns) {
        polymer::Model m = polymer::Model::subcritical(cfg.beta_hat, N);
        multiscale::MultiscaleSchedule sched = multiscale::schedule(N, cfg.m_scales);
        const Box xs = extremes_box(N);
        const double sl = std::sqrt(std::log(double(N)));
        auto rows = parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
            polymer::DenormalGuard guard;
            env::DisorderView env(seed_of(cfg, r));
            polymer::LogWeightField f = polymer::backward_sweep(env, m, 1, N, xs, opt);
            Point best = xs.at(0);
            double top = -std::numeric_limits<double>::infinity();
            for (std::int64_t i = 0; i < xs.area(); ++i) {
                Point x = xs.at(i);
                double v = f.log_value(x);
                if (v > top) {
                    top = v;
                    best = x;
                }
            }
            std::vector<double> prof = multiscale::log_W_profile(env, m, best, sched, opt);
            double psum = 0.0;
            for (double v : prof) psum += v;
            RunRecord::Row row;
            row.N = N;
            row.replica_id = r;
            row.values = {top / sl, top, double(best.x), double(best.y), f.log_value({0, 0}), psum};
            row.values.insert(row.values.end(), prof.begin(), prof.end());
            return row;
        });
        rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
        add_summary(rec, "m_N", N, rec.column("m_N", N));
        add_summary(rec, "log_Z_0", N, rec.column("log_Z_0", N));
    }
    const double naive = theory::naive_bound(cfg.beta_hat).normalized;
    rec.add("sigma_star", theory::sigma_star(cfg.beta_hat));
    rec.add("naive_normalized", naive);
    rec.add("envelope", 1.1 * naive);
    if (cfg.replicas >= 2)
        for (std::size_t i = 1; i < Ns.size(); ++i) {
            stats::PairedT t = stats::paired_t(rec.column("m_N", Ns[i]), rec.column("m_N", Ns[i - 1]));
            rec.add("m_N.increase_p@" + std::to_string(Ns[i - 1]) + "-" + std::to_string(Ns[i]), t.p_greater);
        }
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_gaussian_limit(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("gaussian-limit", cfg);
    rec.columns = {"log_Z_0"};
    const double l2 = theory::lambda_sq(cfg.beta_hat);
    const double target = -l2 / 2.0;
    rec.add("target_mean", target);
    rec.add("target_variance", l2);
    std::vector<std::int64_t> Ns = cfg.sizes();
    for (std::int64_t N : Ns) {
        std::vector<double> v = log_Z_origin(cfg, N);
        for (std::int64_t r = 0; r < cfg.replicas; ++r) rec.rows.push_back({N, r, {}, {v[std::size_t(r)]}});
        stats::Summary s = stats::summarize(v);
        rec.add(tag("mean", N), s.mean);
        rec.add(tag("stderr", N), s.stderr_mean);
        rec.add(tag("variance", N), s.variance);
        rec.add(tag("variance_over_lambda2", N), s.variance / l2);
        rec.add(tag("mean_gap", N), std::fabs(s.mean - target));
        stats::KsResult ks = stats::ks_normal(v, target, std::sqrt(l2));
        rec.add(tag("ks_D", N), ks.D);
        rec.add(tag("ks_p", N), ks.p_value);
    }
    if (cfg.replicas >= 2)
        for (std::size_t i = 1; i < Ns.size(); ++i)
            rec.add("toward_target_p@" + std::to_string(Ns[i - 1]) + "-" + std::to_string(Ns[i]),
                    toward_target_p(rec.column("log_Z_0", Ns[i - 1]), rec.column("log_Z_0", Ns[i]), target));
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_lower_tail(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("lower-tail", cfg);
    rec.columns = {"log_Z_0"};
    for (std::int64_t N : cfg.sizes()) {
        std::vector<double> v = log_Z_origin(cfg, N);
        for (std::int64_t r = 0; r < cfg.replicas; ++r) rec.rows.push_back({N, r, {}, {v[std::size_t(r)]}});
        // Thresholds log t_j = j * u_max / points on the observed deficit range.
        double u_max = -*std::min_element(v.begin(), v.end());
        const double R = double(v.size());
        std::vector<double> x2, lp;
        bool monotone = true;
        double prev = 1.0;
        if (u_max > 0.0) {
            for (std::int64_t j = 1; j <= cfg.tail_points; ++j) {
                double u = u_max * double(j) / double(cfg.tail_points);
                std::int64_t c = std::count_if(v.begin(), v.end(), [&](double z) { return z <= -u; });
                double P = double(c) / R;
                if (P > prev) monotone = false;
                prev = P;
                rec.add(tag("tail_P_" + std::to_string(j), N), P);
                rec.add(tag("tail_log_t_" + std::to_string(j), N), u);
                if (c >= 5) {
                    x2.push_back(u * u);
                    lp.push_back(std::log(P));
                }
            }
        }
        rec.add(tag("degenerate", N), u_max > 0.0 ? 0.0 : 1.0);
        rec.add(tag("monotone", N), monotone ? 1.0 : 0.0);
        rec.add(tag("points_used", N), double(x2.size()));
        if (x2.size() >= 3) {
            stats::Regression reg = stats::linear_regression(x2, lp);
            rec.add(tag("slope", N), reg.slope);
            rec.add(tag("r2", N), reg.r2);
        } else {
            // Too few tail events for a fit; more replicas are needed.
            rec.add(tag("slope", N), std::numeric_limits<double>::quiet_NaN());
            rec.add(tag("r2", N), std::numeric_limits<double>::quiet_NaN());
        }
    }
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

std::vector<oracles::ReplicaConfig> moment_battery() {
    using oracles::ReplicaConfig;
    return {
        {{{0, 0}, {0, 0}}, 1, 1, 1.0, "q2-t1-same-b1"},
        {{{0, 0}, {0, 0}}, 1, 1, 0.5, "q2-t1-same-b0.5"},
        {{{0, 0}, {0, 0}}, 1, 1, 0.0, "q2-t1-beta0"},
        {{{0, 0}, {5, 0}}, 1, 1, 1.0, "q2-t1-distant"},
        {{{0, 0}, {1, 0}}, 1, 3, 1.0, "q2-t3-opposite-parity"},
        {{{0, 0}, {0, 0}}, 1, 2, 0.8, "q2-t2-same"},
        {{{0, 0}, {1, 1}}, 1, 2, 1.0, "q2-t2-diagonal"},
        {{{0, 0}, {2, 0}}, 1, 3, 0.9, "q2-t3-apart"},
        {{{0, 0}, {0, 0}}, 2, 4, 0.9, "q2-s2-t4-same"},
        {{{0, 0}, {0, 0}}, 1, 10, 0.5, "q2-t10-same-dp"},
        {{{0, 0}, {0, 0}, {0, 0}}, 1, 1, 0.7, "q3-t1-same"},
        {{{0, 0}, {0, 0}, {1, 1}}, 1, 2, 0.8, "q3-t2-mixed"},
        {{{0, 0}, {0, 0}, {0, 0}}, 1, 3, 0.6, "q3-t3-same"},
        {{{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 1, 2, 0.5, "q4-t2-same"},
        {{{0, 0}, {1, 1}, {2, 0}, {0, 2}}, 1, 3, 0.6, "q4-t3-spread"},
        {{{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 1, 1, 0.0, "q4-t1-beta0"},
    };
}

ExactMoment exact_moment(const oracles::ReplicaConfig& c) {
    if (c.q() * c.horizon() <= 12) return {oracles::exact_joint_moment(c), "enumeration"};
    if (c.q() == 2) return {oracles::difference_walk_moment(c).value, "dp"};
    throw BudgetError("configuration '" + c.label + "' is too large for exact evaluation");
}

RunRecord run_moment_identity(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("moment-identity", cfg);
    rec.text_columns = {"label", "method"};
    rec.columns = {"q", "s", "t", "beta", "exact", "mc", "mc_stderr", "z"};
    auto battery = moment_battery();
    double max_z = 0.0;
    const int threads = threads_of(cfg);
    for (std::size_t i = 0; i < battery.size(); ++i) {
        const auto& c = battery[i];
        ExactMoment ex = exact_moment(c);
        oracles::McEstimate mc = oracles::mc_joint_moment(c, cfg.replicas, seed_of(cfg, std::int64_t(i)), threads);
        double z = 0.0;
        if (mc.stderr_mean > 0.0) z = (mc.estimate - ex.value) / mc.stderr_mean;
        else if (std::fabs(mc.estimate - ex.value) > 1e-12 * std::max(1.0, ex.value))
            z = std::numeric_limits<double>::infinity();
        max_z = std::max(max_z, std::fabs(z));
        rec.rows.push_back({c.horizon(), std::int64_t(i), {c.label, ex.method},
                            {double(c.q()), double(c.s), double(c.t), c.beta, ex.value, mc.estimate, mc.stderr_mean, z}});
    }
    rec.add("configurations", double(battery.size()));
    rec.add("max_abs_z", max_z);
    rec.add("pass", max_z <= 4.0 ? 1.0 : 0.0);
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

double brw_profile(const std::string& profile, double u, double profile_beta_hat) {
    if (profile == "zero") return 0.0;
    if (profile == "constant") return 1.0;
    if (profile == "sigma")
        // Rescaled so that int_0^1 sigma^2 = 1, the same total variance as the constant profile.
        return theory::sigma_profile(u, profile_beta_hat) / std::sqrt(theory::lambda_sq(profile_beta_hat));
    throw ValidationError("unknown BRW profile '" + profile + "'");
}

RunRecord run_brw(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("brw", cfg);
    rec.columns = {"M_n", "M_n_over_n", "dist_inc", "dist_hom"};
    const std::int64_t n = cfg.depth, b = cfg.branching;
    if (double(n) * std::log2(double(b)) > 62.0) throw BudgetError("BRW tree too deep for 62-bit node labels");
    constexpr std::int64_t kCap = std::int64_t(1) << 22;
    std::vector<double> sig((std::size_t)(n));
    for (std::int64_t j = 1; j <= n; ++j)
        sig[std::size_t(j - 1)] = brw_profile(cfg.profile, (double(j) - 0.5) / double(n), cfg.profile_beta_hat);
    auto prof = [&](double u) { return brw_profile(cfg.profile, u, cfg.profile_beta_hat); };
    const double c = std::sqrt(2.0 * std::log(double(b)));
    const double int_sigma = theory::adaptive_simpson(prof, 0.0, 1.0, 1e-12);
    const double int_sigma2 = theory::adaptive_simpson([&](double u) { return prof(u) * prof(u); }, 0.0, 1.0, 1e-12);
    const double v_inc = c * int_sigma, v_hom = std::sqrt(2.0 * std::log(double(b)) * int_sigma2);
    bool capped = false;
    {
        double leaves = std::pow(double(b), double(n));
        capped = leaves > double(kCap);
    }
    auto rows = parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
        env::DisorderView env(seed_of(cfg, r));
        // Particles (value, label); labels map to sites (label mod 2^31, label >> 31).
        std::vector<double> val{0.0}, nval, om;
        std::vector<std::int64_t> lab{0}, nlab;
        for (std::int64_t j = 1; j <= n; ++j) {
            nval.resize(val.size() * std::size_t(b));
            nlab.resize(val.size() * std::size_t(b));
            const double s = sig[std::size_t(j - 1)];
            if (!capped) {
                // Labels are contiguous: children of p are p*b .. p*b+b-1.
                std::int64_t count = std::int64_t(nval.size());
                om.resize(nval.size());
                env.omega_row(j, 0, 0, count - 1, om.data());
                for (std::int64_t i = 0; i < count; ++i) {
                    nval[std::size_t(i)] = val[std::size_t(i / b)] + s * om[std::size_t(i)];
                    nlab[std::size_t(i)] = i;
                }
            } else {
                for (std::size_t p = 0; p < val.size(); ++p)
                    for (std::int64_t k = 0; k < b; ++k) {
                        std::int64_t l = lab[p] * b + k;
                        Point site{l & ((std::int64_t(1) << 31) - 1), l >> 31};
                        nval[p * std::size_t(b) + std::size_t(k)] = val[p] + s * env.omega(j, site);
                        nlab[p * std::size_t(b) + std::size_t(k)] = l;
                    }
                if (std::int64_t(nval.size()) > kCap) {
                    // Keep the kCap largest particles (biases the maximum downward slightly).
                    std::vector<std::size_t> idx(nval.size());
                    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                    std::nth_element(idx.begin(), idx.begin() + kCap, idx.end(), [&](std::size_t a, std::size_t c2) {
                        return nval[a] > nval[c2] || (nval[a] == nval[c2] && nlab[a] < nlab[c2]);
                    });
                    idx.resize(std::size_t(kCap));
                    std::sort(idx.begin(), idx.end());
                    std::vector<double> kv;
                    std::vector<std::int64_t> kl;
                    for (std::size_t i : idx) {
                        kv.push_back(nval[i]);
                        kl.push_back(nlab[i]);
                    }
                    nval.swap(kv);
                    nlab.swap(kl);
                }
            }
            val.swap(nval);
            lab.swap(nlab);
        }
        double mx = *std::max_element(val.begin(), val.end());
        double ratio = mx / double(n);
        RunRecord::Row row;
        row.N = n;
        row.replica_id = r;
        row.values = {mx, ratio, std::fabs(ratio - v_inc), std::fabs(ratio - v_hom)};
        return row;
    });
    rec.rows = rows;
    std::vector<double> ratio = rec.column("M_n_over_n", n);
    add_summary(rec, "M_n_over_n", n, ratio);
    rec.add("rate_constant", c);
    rec.add("v_inc", v_inc);
    rec.add("v_hom", v_hom);
    rec.add("capped", capped ? 1.0 : 0.0);
    rec.add("mean_ratio_to_rate", stats::summarize(ratio).mean / c);
    if (cfg.replicas >= 2) {
        stats::PairedT t = stats::paired_t(rec.column("dist_hom", n), rec.column("dist_inc", n));
        rec.add("closer_to_inc_p", t.p_greater);
    }
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_ew_cov(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("ew-cov", cfg);
    rec.columns = {"psi_integral", "phi_0"};
    const double scale = cfg.psi_scale, amp = cfg.psi_amplitude;
    const double half = 3.0 / std::sqrt(scale);
    auto psi = [&](double x, double y) { return amp * std::exp(-scale * (x * x + y * y)); };
    const double h = cfg.ew_h;
    const std::int64_t cells = std::max<std::int64_t>(1, std::llround(2.0 * half / h));
    const double hh = 2.0 * half / double(cells);
    for (std::int64_t N : cfg.sizes()) {
        std::vector<Point> sites;
        std::vector<double> weights;
        Box hull;
        for (std::int64_t j = 0; j < cells; ++j)
            for (std::int64_t i = 0; i < cells; ++i) {
                double x = -half + (double(i) + 0.5) * hh, y = -half + (double(j) + 0.5) * hh;
                Point s = polymer::macroscopic_site(x, y, N);
                sites.push_back(s);
                weights.push_back(hh * hh * psi(x, y));
                hull = hull.hull(s);
            }
        hull = hull.hull(Point{0, 0});
        polymer::Model m = polymer::Model::subcritical(cfg.beta_hat, N);
        const polymer::SweepOptions opt = cfg.sweep_options();
        const double sl = std::sqrt(std::log(double(N)));
        auto rows = parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
            polymer::DenormalGuard guard;
            env::DisorderView env(seed_of(cfg, r));
            polymer::LogWeightField f = polymer::backward_sweep(env, m, 1, N, hull, opt);
            double s = 0.0;
            for (std::size_t k = 0; k < sites.size(); ++k) s += weights[k] * sl * f.log_value(sites[k]);
            return RunRecord::Row{N, r, {}, {s, sl * f.log_value({0, 0})}};
        });
        rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
        std::vector<double> S = rec.column("psi_integral", N);
        stats::Summary st = stats::summarize(S);
        rec.add(tag("mc_variance", N), st.variance);
        // Recentering by the empirical mean of phi_N(0) shifts every replica equally.
        rec.add(tag("phi_0.mean", N), stats::summarize(rec.column("phi_0", N)).mean);
    }
    const double h_theory = std::min(0.05, h) / std::sqrt(scale);
    theory::GriddedFunction g = theory::sample_on_grid(psi, half, h_theory);
    double sigma2 = 0.0;
    bool nonzero = false;
    for (double v : g.values) nonzero = nonzero || v != 0.0;
    if (nonzero) sigma2 = theory::ew_covariance(g);
    const double pred = cfg.beta_hat * cfg.beta_hat / (1.0 - cfg.beta_hat * cfg.beta_hat) * sigma2;
    rec.add("sigma2_psi", sigma2);
    rec.add("predicted_variance", pred);
    for (std::int64_t N : cfg.sizes()) rec.add(tag("ratio", N), pred > 0 ? rec.aggregate(tag("mc_variance", N)) / pred : 0.0);
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_domination(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("domination", cfg);
    const std::int64_t levels = cfg.levels == 0 ? cfg.m_scales : cfg.levels;
    rec.columns = {"event", "worst_ratio", "threshold"};
    for (std::int64_t i = 1; i <= levels; ++i) rec.columns.push_back("worst_ratio_" + std::to_string(i));
    for (std::int64_t N : cfg.sizes()) {
        polymer::Model m = polymer::Model::subcritical(cfg.beta_hat, N);
        multiscale::MultiscaleSchedule sched = multiscale::schedule(N, cfg.m_scales);
        // Sampled starts: corners and centre of [0, r_{levels-1})^2.
        std::int64_t side = sched.r_at(levels - 1);
        std::vector<Point> starts{{0, 0}, {side - 1, 0}, {0, side - 1}, {side - 1, side - 1}, {side / 2, side / 2}};
        std::sort(starts.begin(), starts.end(), [](Point a, Point b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        const polymer::SweepOptions opt = cfg.sweep_options();
        auto rows = parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
            polymer::DenormalGuard guard;
            env::DisorderView env(seed_of(cfg, r));
            multiscale::DominationReport rep =
                multiscale::domination_check(env, m, sched, cfg.domination_l, levels, starts, cfg.hat_delta, opt);
            RunRecord::Row row{N, r, {}, {rep.event ? 1.0 : 0.0, rep.worst_ratio, rep.threshold}};
            for (const auto& l : rep.levels) row.values.push_back(l.worst_ratio);
            return row;
        });
        rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
        rec.add(tag("event_frequency", N), stats::summarize(rec.column("event", N)).mean);
        add_summary(rec, "worst_ratio", N, rec.column("worst_ratio", N));
    }
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_truncation(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("truncation", cfg);
    const std::int64_t M = cfg.m_scales;
    rec.columns = {"max_gap", "max_log_ratio", "starts_gap_exceeded", "starts_ratio_exceeded"};
    for (std::int64_t k = 1; k <= M; ++k) rec.columns.push_back("max_log_ratio_" + std::to_string(k));
    const double log2M = double(M) * std::log(2.0);
    for (std::int64_t N : cfg.sizes()) {
        polymer::Model m = polymer::Model::subcritical(cfg.beta_hat, N);
        multiscale::MultiscaleSchedule sched = multiscale::schedule(N, M);
        const Box xs = extremes_box(N);
        const polymer::SweepOptions opt = cfg.sweep_options();
        auto rows = parallel::map_indexed(cfg.replicas, threads_of(cfg), [&](std::int64_t r) {
            polymer::DenormalGuard guard;
            env::DisorderView env(seed_of(cfg, r));
            multiscale::ScaleTable tab = multiscale::scale_table(env, m, sched, xs, cfg.wall_mode, opt);
            // log W - log W~_lo >= log W - log W~ >= 0, so these are upper bounds on the true gaps.
            double max_gap = 0.0, max_ratio = 0.0, gap_hits = 0.0, ratio_hits = 0.0;
            std::vector<double> per_k(std::size_t(M), 0.0);
            for (std::int64_t i = 0; i < xs.area(); ++i) {
                double gap = 0.0;
                bool ratio_hit = false;
                for (std::int64_t k = 0; k < M; ++k) {
                    double lr = tab.log_W[std::size_t(k)][std::size_t(i)] - tab.log_W_tilde_lo[std::size_t(k)][std::size_t(i)];
                    gap += lr;
                    per_k[std::size_t(k)] = std::max(per_k[std::size_t(k)], lr);
                    max_ratio = std::max(max_ratio, lr);
                    if (!(lr < std::log(2.0))) ratio_hit = true;
                }
                max_gap = std::max(max_gap, std::fabs(gap));
                if (!(std::fabs(gap) < log2M)) gap_hits += 1.0;
                if (ratio_hit) ratio_hits += 1.0;
            }
            RunRecord::Row row{N, r, {}, {max_gap, max_ratio, gap_hits, ratio_hits}};
            row.values.insert(row.values.end(), per_k.begin(), per_k.end());
            return row;
        });
        rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
        std::vector<double> g = rec.column("starts_gap_exceeded", N), q = rec.column("starts_ratio_exceeded", N);
        rec.add(tag("replicas_gap_exceeded", N), double(std::count_if(g.begin(), g.end(), [](double v) { return v > 0; })));
        rec.add(tag("replicas_ratio_exceeded", N), double(std::count_if(q.begin(), q.end(), [](double v) { return v > 0; })));
        add_summary(rec, "max_gap", N, rec.column("max_gap", N));
        add_summary(rec, "max_log_ratio", N, rec.column("max_log_ratio", N));
    }
    rec.add("gap_threshold", log2M);
    rec.add("ratio_threshold", std::log(2.0));
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_ptop(const ExperimentConfig& cfg) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("ptop", cfg);
    rec.columns = {"p", "y_x", "y_y", "scaled_moment", "stderr", "exact_p1"};
    oracles::PtopTable tab = oracles::ptop_moment_trend(cfg.beta_hat, cfg.moment_p, cfg.sizes(), cfg.replicas,
                                                        cfg.seed, threads_of(cfg));
    for (const auto& row : tab.rows)
        rec.rows.push_back({row.N, 0, {}, {double(tab.p), double(row.y.x), double(row.y.y), row.scaled_moment,
                                           row.stderr_scaled, row.exact_p1}});
    rec.add("mk_p_increasing", tab.mk_p_increasing);
    rec.add("bounded", tab.bounded ? 1.0 : 0.0);
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

RunRecord run_second_moment(const ExperimentConfig& cfg, double window_constant) {
    auto t0 = Clock::now();
    RunRecord rec = start_record("second-moment", cfg);
    rec.text_columns = {"method"};
    rec.columns = {"beta", "value", "doubled", "certified_error", "radius", "limit", "gap"};
    auto curve = oracles::second_moment_curve(cfg.beta_hat, cfg.sizes(), window_constant);
    for (const auto& p : curve) {
        double gap = std::fabs(p.value - p.limit);
        rec.rows.push_back({p.N, 0, {"dp"}, {p.beta, p.value, p.doubled, p.certified_error, double(p.radius), p.limit, gap}});
        rec.add(tag("value", p.N), p.value);
        rec.add(tag("gap", p.N), gap);
        rec.add(tag("certified_error", p.N), p.certified_error);
    }
    rec.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rec;
}

}  // namespace polyext::experiments
