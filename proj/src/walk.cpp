#include "polyext/walk.hpp"

#include <cmath>
#include <string>

#include "polyext/errors.hpp"
#include "polyext/numerics.hpp"

namespace polyext::walk {
namespace {

// log(C(2k, k) / 4^k) = sum_{j=1}^k log(1 - 1/(2j)).
double log_central_binomial_ratio(std::int64_t k) {
    CompensatedSum s;
    for (std::int64_t j = 1; j <= k; ++j) s.add(std::log1p(-0.5 / double(j)));
    return s.value();
}

double log_binomial(std::int64_t n, std::int64_t k) {
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1);
}

}  // namespace

double KernelTable::line_prob(std::int64_t u) const {
    if (u < -n_ || u > n_ || ((u + n_) & 1)) return 0.0;
    return line_[std::size_t((u + n_) / 2)];
}

double KernelTable::prob(Point d) const { return line_prob(d.x + d.y) * line_prob(d.x - d.y); }

std::vector<double> KernelTable::dense() const {
    Box b = Box::centered({0, 0}, n_);
    std::vector<double> out((std::size_t)(b.area()));
    for (std::int64_t y = b.y0; y <= b.y1; ++y)
        for (std::int64_t x = b.x0; x <= b.x1; ++x) out[std::size_t(b.index({x, y}))] = prob({x, y});
    return out;
}

double KernelTable::total() const {
    CompensatedSum s;
    for (double p : line_) s.add(p);
    return s.value() * s.value();
}

KernelTable kernel(std::int64_t n, std::int64_t n_max) {
    if (n < 1 || n > n_max)
        throw ValidationError("kernel step count " + std::to_string(n) + " outside [1, " + std::to_string(n_max) +
                              "]");
    // One planar step moves each rotated coordinate by +-1 independently.
    std::vector<double> line{1.0};
    for (std::int64_t step = 1; step <= n; ++step) {
        std::vector<double> next(line.size() + 1, 0.0);
        for (std::size_t j = 0; j < line.size(); ++j) {
            next[j] += 0.5 * line[j];
            next[j + 1] += 0.5 * line[j];
        }
        line.swap(next);
    }
    KernelTable t;
    t.n_ = n;
    t.line_ = std::move(line);
    return t;
}

double transition_prob(Point d, std::int64_t n) {
    if (n < 0) throw ValidationError("negative step count");
    std::int64_t u = d.x + d.y, v = d.x - d.y;
    if (std::llabs(u) > n || std::llabs(v) > n || ((u + n) & 1)) return 0.0;
    double lu = log_binomial(n, (n + u) / 2), lv = log_binomial(n, (n + v) / 2);
    return std::exp(lu + lv - 2.0 * double(n) * std::log(2.0));
}

double return_prob(std::int64_t k) {
    if (k < 1) throw ValidationError("return_prob needs k >= 1");
    return std::exp(2.0 * log_central_binomial_ratio(k));
}

double overlap_R(std::int64_t N) {
    if (N < 1) throw ValidationError("overlap_R needs N >= 1");
    CompensatedSum log_c, r;
    for (std::int64_t k = 1; k <= N; ++k) {
        log_c.add(std::log1p(-0.5 / double(k)));
        r.add(std::exp(2.0 * log_c.value()));
    }
    return r.value();
}

double beta_N(double beta_hat, std::int64_t N) {
    if (!(beta_hat > 0.0 && beta_hat < 1.0))
        throw ValidationError("beta_hat must lie in (0, 1), got " + std::to_string(beta_hat));
    return beta_hat / std::sqrt(overlap_R(N));
}

}  // namespace polyext::walk
