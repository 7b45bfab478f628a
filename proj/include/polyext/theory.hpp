#pragma once

// Closed-form limit constants and the deterministic side of the model.

#include <cstdint>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace polyext::theory {

// lambda^2 = -log(1 - beta_hat^2). Requires 0 < beta_hat < 1.
double lambda_sq(double beta_hat);
// lambda^2_{u,v} = log((1 - beta_hat^2 u) / (1 - beta_hat^2 v)), 0 <= u <= v <= 1.
double lambda_sq_interval(double u, double v, double beta_hat);
// sigma(u) = sqrt(beta_hat^2 / (1 - beta_hat^2 u)).
double sigma_profile(double u, double beta_hat);
// sqrt(2) * int_0^1 sigma(u) du by adaptive Simpson.
double sigma_star(double beta_hat);
// 2 sqrt(2) (1 - sqrt(1 - beta_hat^2)) / beta_hat.
double sigma_star_closed_form(double beta_hat);

struct NaiveBound {
    double literal = 0.0;     // (int sigma^2)^{1/2} = sqrt(lambda^2)
    double normalized = 0.0;  // sqrt(2 int sigma^2) = sqrt(2 lambda^2)
};
NaiveBound naive_bound(double beta_hat);

// Adaptive Simpson on [a, b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 50);

// E_1(z) = int_z^inf e^{-w}/w dw, z > 0.
double exponential_integral_e1(double z);

// psi sampled at cell centers of a square grid with spacing h:
// values[j * nx + i] = psi(x0 + i h, y0 + j h). psi is taken to vanish off the grid.
struct GriddedFunction {
    double h = 0.0;
    double x0 = 0.0, y0 = 0.0;
    std::int64_t nx = 0, ny = 0;
    std::vector<double> values;
};

GriddedFunction sample_on_grid(const std::function<double(double, double)>& psi, double half_width, double h);

// sigma^2_psi = (1/pi) int int psi(x) psi(y) E_1(|x - y|^2 / 2) dx dy by the tensor midpoint rule;
// the diagonal cells use the cell-averaged kernel. Throws unless psi vanishes on the grid border.
double ew_covariance(const GriddedFunction& psi);
// Bilinear form with two functions on the same grid.
double ew_covariance(const GriddedFunction& psi, const GriddedFunction& chi);

struct VariationalInstance {
    std::int64_t M = 0, t = 0;
    double a = 0.0;
    std::vector<double> f;  // f[s-1] = f(s), s = 1..M, positive and nondecreasing

    void validate() const;
};

// M - t + 1 + a / f(M).
double variational_bound(const VariationalInstance& inst);
// sum_{s=t}^M g(s) / f(s) with g[s-t] = g(s).
double variational_objective(const VariationalInstance& inst, const std::vector<double>& g);
// Membership in A_{a,M}(t); the strict inequality is taken with margin `strict`.
bool variational_feasible(const VariationalInstance& inst, const std::vector<double>& g, double strict = 0.0);

struct VariationalResult {
    std::vector<double> g;
    double value = 0.0;
};

// Exact minimum over g with values in grid_step * N, subject to sum_{u>=t} g >= a + F(t) + grid_step and
// the tail constraints; ties broken toward the lexicographically smallest g. Requires M <= 8.
VariationalResult variational_search_grid(const VariationalInstance& inst, double grid_step);
// Projected coordinate descent on the suffix sums G(u) = sum_{s>=u} g(s). Any M.
VariationalResult variational_search_descent(const VariationalInstance& inst, double grid_step);
// Plain enumeration of every grid point, for cross-checking the grid search on tiny instances.
VariationalResult variational_search_brute(const VariationalInstance& inst, double grid_step);

// q(N) as floor(c sqrt(log N)), a constant, or an explicit table.
struct QSpec {
    enum class Kind { constant, sqrt_log, table } kind = Kind::constant;
    double c = 2.0;
    std::map<std::int64_t, std::int64_t> table;

    std::int64_t at(std::int64_t N) const;
};

struct MomentCondition {
    bool holds = false;
    double lhs = 0.0;  // C(q, 2) / log N
    double rhs = 0.0;  // (1 - beta_hat^2 k / M) / beta_hat^2
    double margin = 0.0;
    std::int64_t q = 0;
};

MomentCondition moment_condition(const QSpec& q, std::int64_t k, std::int64_t M, double beta_hat,
                                 std::int64_t N_probe);

// ---- implementation of the template ----

namespace detail {
template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
    double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace polyext::theory
