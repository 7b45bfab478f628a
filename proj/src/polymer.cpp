#include "polyext/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "polyext/errors.hpp"
#include "polyext/walk.hpp"

#if defined(POLYEXT_HAVE_LIBMVEC)
// glibc's libmvec provides vector variants of exp; declaring them lets the weight loops vectorize.
extern "C" double exp(double) noexcept __attribute__((simd("notinbranch")));
#endif

namespace polyext::polymer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string box_str(const Box& b) {
    return "[" + std::to_string(b.x0) + "," + std::to_string(b.x1) + "]x[" + std::to_string(b.y0) + "," +
           std::to_string(b.y1) + "]";
}

// ex[j] = exp(beta * om[j] + c)
void tilt(const double* om, double* ex, std::int64_t n, double beta, double c) {
#pragma omp simd
    for (std::int64_t j = 0; j < n; ++j) ex[j] = std::exp(beta * om[j] + c);
}

// Restricts `region` by the wall and an explicit window, when present.
Box clip(Box region, const std::optional<Box>& wall, const std::optional<Box>& window) {
    if (wall) region = region.intersect(*wall);
    if (window) region = region.intersect(*window);
    return region;
}

void check_sites(const Box& b, std::int64_t max_sites) {
    if (b.area() > max_sites)
        throw WindowError("sweep window " + box_str(b) + " needs " + std::to_string(b.area()) +
                          " sites, budget is " + std::to_string(max_sites));
}

}  // namespace

Model Model::subcritical(double beta_hat, std::int64_t N) { return {walk::beta_N(beta_hat, N), N}; }

Box WallSpec::box() const {
    if (!(radius > 0.0)) throw ValidationError("wall radius must be positive");
    return Box::centered(center, std::int64_t(std::floor(radius)));
}

const char* to_string(WallMode m) { return m == WallMode::origin ? "origin" : "start"; }

WallMode wall_mode_from_string(const std::string& s) {
    if (s == "origin") return WallMode::origin;
    if (s == "start") return WallMode::start;
    throw ValidationError("wall mode must be 'origin' or 'start', got '" + s + "'");
}

std::int64_t WindowPolicy::margin(std::int64_t steps, std::int64_t N) const {
    if (steps <= 0) return 0;
    if (c <= 0.0) return steps;
    double logN = N > 1 ? std::log(double(N)) : 0.0;
    double m = std::ceil(c * std::sqrt(double(steps)) * (1.0 + logN));
    return std::min<std::int64_t>(std::int64_t(m), steps);
}

double ScaledField::value(Point p) const {
    if (!box.contains(p)) return 0.0;
    return values[std::size_t(box.index(p))] * std::exp(log_offset);
}

double ScaledField::log_value(Point p) const {
    if (!box.contains(p)) return kNegInf;
    double v = values[std::size_t(box.index(p))];
    return v > 0.0 ? std::log(v) + log_offset : kNegInf;
}

bool LogWeightField::present(Point p) const { return window.contains(p) && std::isfinite(stored(p)); }

double LogWeightField::stored(Point p) const {
    if (!window.contains(p)) throw ValidationError("site outside LogWeightField window");
    return values[std::size_t(window.index(p))];
}

double LogWeightField::log_value(Point p) const {
    double v = stored(p);
    return std::isfinite(v) ? v + log_offset : kNegInf;
}

double LogWeightField::max_stored() const {
    double m = kNegInf;
    for (double v : values) m = std::max(m, v);
    return m;
}

LogWeightField to_log_field(const ScaledField& f, std::int64_t time_lo, std::int64_t time_hi) {
    LogWeightField out;
    out.window = f.box;
    out.time_lo = time_lo;
    out.time_hi = time_hi;
    double mx = 0.0;
    for (double v : f.values) mx = std::max(mx, v);
    // Keep the stored maximum at 0.
    double shift = mx > 0.0 ? std::log(mx) : 0.0;
    out.log_offset = f.log_offset + shift;
    out.values.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        out.values[i] = f.values[i] > 0.0 ? std::log(f.values[i]) - shift : kNegInf;
    return out;
}

double EndpointMeasure::prob(Point y) const {
    if (!window.contains(y)) return 0.0;
    return probs[std::size_t(window.index(y))];
}

DenormalGuard::DenormalGuard() {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
}

DenormalGuard::~DenormalGuard() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
}

ScaledField backward_sweep_scaled(const env::DisorderView& env, const Model& m, std::int64_t s, std::int64_t t,
                                  const Box& targets, const SweepOptions& opt, const ScaledField* terminal) {
    if (s < 1 || t < s) throw ValidationError("backward sweep needs 1 <= s <= t");
    if (targets.empty()) throw ValidationError("backward sweep needs a nonempty target box");
    DenormalGuard guard;
    const std::int64_t steps = t - s + 1;
    const std::int64_t margin = opt.policy.margin(steps, m.N);
    std::optional<Box> wall;
    if (opt.wall) wall = opt.wall->box();
    const Box policy_box = targets.expanded(margin);
    if (opt.window && !opt.window->contains(policy_box))
        throw WindowError("window " + box_str(*opt.window) + " is too small: the truncation policy needs " +
                          box_str(policy_box));
    auto region_at = [&](std::int64_t n) {
        return clip(targets.expanded(std::min(margin, n - s + 1)), wall, opt.window);
    };
    const Box full = policy_box;
    check_sites(full, opt.max_sites);

    const std::int64_t W = full.width() + 2;
    const std::int64_t H = full.height() + 2;
    auto idx = [&](std::int64_t x, std::int64_t y) { return (y - full.y0 + 1) * W + (x - full.x0 + 1); };
    std::vector<double> u((std::size_t)(W * H), 0.0);
    std::vector<double> ring((std::size_t)(3 * W), 0.0);
    std::vector<double> om((std::size_t)(W)), ex((std::size_t)(W));

    double log_offset = 0.0;
    double mx = 0.0;
    {
        Box r = region_at(t);
        if (terminal) {
            r = r.intersect(terminal->box);
            log_offset = terminal->log_offset;
        }
        for (std::int64_t y = r.y0; y <= r.y1; ++y)
            for (std::int64_t x = r.x0; x <= r.x1; ++x) {
                double v = terminal ? terminal->values[std::size_t(terminal->box.index({x, y}))] : 1.0;
                u[std::size_t(idx(x, y))] = v;
                mx = std::max(mx, v);
            }
    }
    const double half_b2 = 0.5 * m.beta * m.beta;

    for (std::int64_t n = t; n >= s; --n) {
        double c = -half_b2;
        if (mx > 0.0) {
            c -= std::log(mx);
            log_offset += std::log(mx);
        }
        const Box rn = region_at(n);
        const Box out = n - 1 >= s ? region_at(n - 1) : targets;
        auto w_row = [&](std::int64_t r) { return ring.data() + ((r % 3 + 3) % 3) * W; };
        auto fill_w = [&](std::int64_t r) {
            double* w = w_row(r);
            std::fill(w, w + W, 0.0);
            if (rn.empty() || r < rn.y0 || r > rn.y1) return;
            std::int64_t len = rn.x1 - rn.x0 + 1;
            env.omega_row(n, r, rn.x0, rn.x1, om.data());
            tilt(om.data(), ex.data(), len, m.beta, c);
            const double* ur = u.data() + idx(rn.x0, r);
            double* wr = w + (rn.x0 - full.x0 + 1);
            for (std::int64_t j = 0; j < len; ++j) wr[j] = ur[j] * ex[j];
        };
        mx = 0.0;
        if (out.empty()) break;
        fill_w(out.y0 - 1);
        fill_w(out.y0);
        for (std::int64_t y = out.y0; y <= out.y1; ++y) {
            fill_w(y + 1);
            const double* up = w_row(y - 1);
            const double* mid = w_row(y);
            const double* dn = w_row(y + 1);
            double* ur = u.data() + idx(out.x0, y);
            std::int64_t off = out.x0 - full.x0 + 1;
            std::int64_t len = out.x1 - out.x0 + 1;
            double row_max = 0.0;
            for (std::int64_t j = 0; j < len; ++j) {
                std::int64_t k = off + j;
                double v = 0.25 * ((mid[k - 1] + mid[k + 1]) + (up[k] + dn[k]));
                ur[j] = v;
                row_max = std::max(row_max, v);
            }
            mx = std::max(mx, row_max);
        }
    }

    ScaledField f;
    f.box = targets;
    f.values.resize(std::size_t(targets.area()));
    double scale = mx > 0.0 ? 1.0 / mx : 1.0;
    for (std::int64_t y = targets.y0; y <= targets.y1; ++y)
        for (std::int64_t x = targets.x0; x <= targets.x1; ++x)
            f.values[std::size_t(targets.index({x, y}))] = u[std::size_t(idx(x, y))] * scale;
    f.log_offset = log_offset + (mx > 0.0 ? std::log(mx) : 0.0);
    return f;
}

LogWeightField backward_sweep(const env::DisorderView& env, const Model& m, std::int64_t s, std::int64_t t,
                              const Box& targets, const SweepOptions& opt) {
    return to_log_field(backward_sweep_scaled(env, m, s, t, targets, opt), s, t);
}

ForwardSweep::ForwardSweep(const env::DisorderView& env, const Model& m, Point x, std::int64_t t_max,
                           const SweepOptions& opt)
    : env_(env), model_(m), x_(x), t_max_(t_max) {
    if (t_max < 0) throw ValidationError("forward sweep horizon must be >= 0");
    margin_ = opt.policy.margin(t_max, m.N);
    if (opt.wall) wall_ = opt.wall->box();
    Box policy_box = Box::centered(x, margin_);
    if (opt.window) {
        if (!opt.window->contains(policy_box))
            throw WindowError("window " + box_str(*opt.window) + " is too small: the truncation policy needs " +
                              box_str(policy_box));
        policy_box = policy_box.intersect(*opt.window);
    }
    full_ = policy_box;
    check_sites(full_, opt.max_sites);
    stride_ = full_.width() + 2;
    std::size_t cells = std::size_t(stride_ * (full_.height() + 2));
    cur_.assign(cells, 0.0);
    prev_.assign(cells, 0.0);
    cur_[std::size_t((x.y - full_.y0 + 1) * stride_ + (x.x - full_.x0 + 1))] = 1.0;
    om_.resize(std::size_t(stride_));
    ex_.resize(std::size_t(stride_));
}

ForwardSweep::~ForwardSweep() = default;

void ForwardSweep::advance_to(std::int64_t n) {
    if (n < n_ || n > t_max_) throw ValidationError("forward sweep cannot move to time " + std::to_string(n));
    DenormalGuard guard;
    while (n_ < n) step();
}

void ForwardSweep::step() {
    const std::int64_t n = n_ + 1;
    cur_.swap(prev_);
    Box r = Box::centered(x_, std::min(margin_, n)).intersect(full_);
    if (wall_) r = r.intersect(*wall_);
    double c = -0.5 * model_.beta * model_.beta + std::log(pending_scale_);
    double mx = 0.0;
    for (std::int64_t y = r.y0; y <= r.y1; ++y) {
        // Sites with parity(y - x) == n mod 2.
        std::int64_t start = r.x0 + (((r.x0 - x_.x) + (y - x_.y) - n) & 1);
        if (start > r.x1) continue;
        std::int64_t count = (r.x1 - start) / 2 + 1;
        env_.omega_row_stride2(n, y, start, count, om_.data());
        tilt(om_.data(), ex_.data(), count, model_.beta, c);
        const double* pu = prev_.data() + (y - full_.y0) * stride_;
        const double* pm = pu + stride_;
        const double* pd = pm + stride_;
        double* out = cur_.data() + (y - full_.y0 + 1) * stride_;
        std::int64_t k0 = start - full_.x0 + 1;
        double row_max = 0.0;
        for (std::int64_t j = 0; j < count; ++j) {
            std::int64_t k = k0 + 2 * j;
            double v = ex_[std::size_t(j)] * (0.25 * ((pm[k - 1] + pm[k + 1]) + (pu[k] + pd[k])));
            out[k] = v;
            row_max = std::max(row_max, v);
        }
        mx = std::max(mx, row_max);
    }
    log_offset_ -= std::log(pending_scale_);
    pending_scale_ = mx > 0.0 ? 1.0 / mx : 1.0;
    n_ = n;
}

bool ForwardSweep::in_window(Point y) const {
    Box r = Box::centered(x_, std::min(margin_, n_)).intersect(full_);
    if (wall_ && n_ > 0) r = r.intersect(*wall_);
    return r.contains(y);
}

double ForwardSweep::log_weight(Point y) const {
    if (!in_window(y)) return kNegInf;
    double v = cur_[std::size_t((y.y - full_.y0 + 1) * stride_ + (y.x - full_.x0 + 1))];
    return v > 0.0 ? std::log(v) + log_offset_ : kNegInf;
}

ScaledField ForwardSweep::weights() const {
    Box r = Box::centered(x_, std::min(margin_, n_)).intersect(full_);
    if (wall_ && n_ > 0) r = r.intersect(*wall_);
    ScaledField f;
    f.box = r;
    f.log_offset = log_offset_;
    f.values.resize(std::size_t(r.area()));
    for (std::int64_t y = r.y0; y <= r.y1; ++y) {
        const double* src = cur_.data() + (y - full_.y0 + 1) * stride_ + (r.x0 - full_.x0 + 1);
        std::copy(src, src + r.width(), f.values.begin() + (y - r.y0) * r.width());
    }
    return f;
}

double ForwardSweep::log_Z() const {
    double sum = 0.0;
    for (double v : cur_) sum += v;
    return sum > 0.0 ? std::log(sum) + log_offset_ : kNegInf;
}

EndpointMeasure ForwardSweep::measure() const {
    ScaledField w = weights();
    double sum = 0.0;
    for (double v : w.values) sum += v;
    EndpointMeasure mu;
    mu.origin = x_;
    mu.time = n_;
    mu.window = w.box;
    mu.probs = std::move(w.values);
    if (sum > 0.0)
        for (double& p : mu.probs) p /= sum;
    mu.log_Z = sum > 0.0 ? std::log(sum) + log_offset_ : kNegInf;
    return mu;
}

EndpointMeasure forward_endpoint(const env::DisorderView& env, const Model& m, Point x, std::int64_t t,
                                 const SweepOptions& opt) {
    if (t < 1) throw ValidationError("forward_endpoint needs t >= 1");
    ForwardSweep fw(env, m, x, t, opt);
    fw.advance_to(t);
    return fw.measure();
}

std::vector<double> forward_log_Z(const env::DisorderView& env, const Model& m, Point x,
                                  const std::vector<std::int64_t>& times, const SweepOptions& opt) {
    if (times.empty()) return {};
    if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0)
        throw ValidationError("forward_log_Z needs nondecreasing nonnegative times");
    ForwardSweep fw(env, m, x, times.back(), opt);
    std::vector<double> out;
    out.reserve(times.size());
    for (std::int64_t t : times) {
        fw.advance_to(t);
        out.push_back(fw.log_Z());
    }
    return out;
}

PointToPoint point_to_point(const env::DisorderView& env, const Model& m, Point x, Point y, std::int64_t n,
                            const SweepOptions& opt) {
    if (n < 1) throw ValidationError("point_to_point needs n >= 1");
    Point d = y - x;
    if (((d.x + d.y - n) & 1) != 0) return {0.0, false};
    if (l1(d) > n) throw ValidationError("point_to_point needs |y - x|_1 <= n");
    ForwardSweep fw(env, m, x, n, opt);
    fw.advance_to(n);
    if (!fw.in_window(y)) {
        if (opt.wall && !opt.wall->box().contains(y)) return {0.0, true};
        throw WindowError("endpoint lies outside the truncated forward window; use a larger policy constant");
    }
    double lw = fw.log_weight(y);
    return {std::isfinite(lw) ? std::exp(lw) : 0.0, true};
}

Point macroscopic_site(double x1, double x2, std::int64_t N) {
    double r = std::sqrt(double(N));
    return {std::int64_t(std::trunc(x1 * r)), std::int64_t(std::trunc(x2 * r))};
}

std::vector<double> phi_field(const env::DisorderView& env, std::int64_t N, double beta_hat,
                              const std::vector<std::pair<double, double>>& grid, const SweepOptions& opt) {
    if (N < 2) throw ValidationError("phi_field needs N >= 2");
    if (grid.empty()) return {};
    std::vector<Point> sites;
    Box b;
    for (auto [a, c] : grid) {
        sites.push_back(macroscopic_site(a, c, N));
        b = b.hull(sites.back());
    }
    Model m = Model::subcritical(beta_hat, N);
    LogWeightField f = backward_sweep(env, m, 1, N, b, opt);
    double scale = std::sqrt(std::log(double(N)));
    std::vector<double> out;
    out.reserve(sites.size());
    for (Point p : sites) out.push_back(scale * f.log_value(p));
    return out;
}

}  // namespace polyext::polymer
