#include "polyext/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "polyext/errors.hpp"

namespace polyext::config {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ValidationError(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ValidationError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    // strtod accepts the same forms %.17g writes.
    char* end = nullptr;
    double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out))
        throw ValidationError(key + ": expected a real number, got '" + v + "'");
    return out;
}

std::string fmt_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::int64_t> parse_list(const std::string& key, const std::string& v) {
    std::vector<std::int64_t> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
    return out;
}

std::string fmt_list(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define POLYEXT_INT(name)                                                                              \
    Field{#name, [](ExperimentConfig& c, const std::string& v) { c.name = parse_int(#name, v); },      \
          [](const ExperimentConfig& c) { return std::to_string(c.name); }}
#define POLYEXT_REAL(name)                                                                             \
    Field{#name, [](ExperimentConfig& c, const std::string& v) { c.name = parse_real(#name, v); },     \
          [](const ExperimentConfig& c) { return fmt_real(c.name); }}
#define POLYEXT_STR(name)                                                                              \
    Field{#name, [](ExperimentConfig& c, const std::string& v) { c.name = v; },                        \
          [](const ExperimentConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        POLYEXT_STR(experiment),
        POLYEXT_INT(n),
        Field{"ns", [](ExperimentConfig& c, const std::string& v) { c.ns = parse_list("ns", v); },
              [](const ExperimentConfig& c) { return fmt_list(c.ns); }},
        POLYEXT_REAL(beta_hat),
        POLYEXT_INT(m_scales),
        POLYEXT_INT(replicas),
        Field{"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
              [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        Field{"threads", [](ExperimentConfig& c, const std::string& v) { c.threads = int(parse_int("threads", v)); },
              [](const ExperimentConfig& c) { return std::to_string(c.threads); }},
        POLYEXT_REAL(window_c),
        Field{"wall_mode", [](ExperimentConfig& c, const std::string& v) { c.wall_mode = polymer::wall_mode_from_string(v); },
              [](const ExperimentConfig& c) { return std::string(polymer::to_string(c.wall_mode)); }},
        POLYEXT_STR(out),
        POLYEXT_INT(tail_points),
        POLYEXT_INT(depth),
        POLYEXT_INT(branching),
        POLYEXT_STR(profile),
        POLYEXT_REAL(profile_beta_hat),
        POLYEXT_REAL(psi_scale),
        POLYEXT_REAL(psi_amplitude),
        POLYEXT_REAL(ew_h),
        POLYEXT_REAL(domination_l),
        POLYEXT_REAL(hat_delta),
        POLYEXT_INT(levels),
        POLYEXT_INT(moment_p),
    };
    return f;
}

#undef POLYEXT_INT
#undef POLYEXT_REAL
#undef POLYEXT_STR

}  // namespace

std::vector<std::int64_t> ExperimentConfig::sizes() const { return ns.empty() ? std::vector<std::int64_t>{n} : ns; }

polymer::SweepOptions ExperimentConfig::sweep_options() const {
    polymer::SweepOptions opt;
    opt.policy.c = window_c;
    return opt;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errs;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    need(n >= 4, "n: must be >= 4");
    for (std::int64_t v : ns) need(v >= 4, "ns: every entry must be >= 4, got " + std::to_string(v));
    need(beta_hat > 0.0 && beta_hat < 1.0, "beta_hat: must lie in (0, 1) (subcritical regime), got " + fmt_real(beta_hat));
    need(m_scales >= 1, "m_scales: must be >= 1");
    need(replicas >= 1, "replicas: must be >= 1");
    need(threads >= 0, "threads: must be >= 0");
    need(window_c >= 0.0, "window_c: must be >= 0 (0 means the exact light cone)");
    need(tail_points >= 3, "tail_points: must be >= 3");
    need(depth >= 1 && depth <= 40, "depth: must lie in [1, 40]");
    need(branching >= 2 && branching <= 16, "branching: must lie in [2, 16]");
    need(profile == "constant" || profile == "sigma" || profile == "zero",
         "profile: must be one of constant, sigma, zero");
    need(profile_beta_hat > 0.0 && profile_beta_hat < 1.0, "profile_beta_hat: must lie in (0, 1)");
    need(psi_scale > 0.0, "psi_scale: must be > 0");
    need(ew_h > 0.0 && ew_h <= 1.0, "ew_h: must lie in (0, 1]");
    need(domination_l >= 1.0, "domination_l: must be >= 1");
    need(hat_delta > 0.0, "hat_delta: must be > 0");
    need(levels >= 0 && levels <= m_scales, "levels: must lie in [0, m_scales]");
    need(moment_p >= 1 && moment_p <= 3, "moment_p: must lie in [1, 3]");
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ValidationError(msg);
    }
}

void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields())
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    throw ValidationError("unknown configuration key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> to_pairs(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
    return out;
}

std::string to_text(const ExperimentConfig& cfg) {
    std::string s;
    for (const auto& [k, v] : to_pairs(cfg)) s += k + " = " + v + "\n";
    return s;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::vector<std::string> errs;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            errs.push_back(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
        try {
            set_value(cfg, key, value);
        } catch (const ValidationError& e) {
            errs.push_back(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    // Range checks on the merged values, reported together with any syntax errors.
    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        std::istringstream lines(e.what());
        std::string l;
        std::getline(lines, l);
        while (std::getline(lines, l)) errs.push_back(origin + ": " + trim(l));
    }
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ValidationError(msg);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace polyext::config
