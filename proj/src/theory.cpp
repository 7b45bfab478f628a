#include "polyext/theory.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "polyext/errors.hpp"

namespace polyext::theory {
namespace {

void check_beta_hat(double beta_hat) {
    if (!(beta_hat > 0.0 && beta_hat < 1.0))
        throw ValidationError("beta_hat must lie in (0, 1), got " + std::to_string(beta_hat));
}

// The FFTW planner is not thread safe.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::int64_t fft_size(std::int64_t n) {
    // Smallest 2^a 3^b 5^c >= n.
    for (std::int64_t m = n;; ++m) {
        std::int64_t r = m;
        for (std::int64_t p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

// Average of E_1(h^2 |u - v|^2 / 2) over u, v uniform in one cell of side h.
double diagonal_cell_kernel(double h) {
    constexpr int kSub = 64;
    double sum = 0.0;
    for (int i = 0; i < kSub; ++i) {
        double e1 = -1.0 + (i + 0.5) * 2.0 / kSub;
        double w1 = 1.0 - std::fabs(e1);
        for (int j = 0; j < kSub; ++j) {
            double e2 = -1.0 + (j + 0.5) * 2.0 / kSub;
            double w2 = 1.0 - std::fabs(e2);
            sum += w1 * w2 * exponential_integral_e1(0.5 * h * h * (e1 * e1 + e2 * e2));
        }
    }
    return sum * (2.0 / kSub) * (2.0 / kSub);
}

void check_compact(const GriddedFunction& g) {
    if (g.nx < 1 || g.ny < 1 || std::int64_t(g.values.size()) != g.nx * g.ny || !(g.h > 0.0))
        throw ValidationError("malformed gridded function");
    double mx = 0.0, border = 0.0;
    for (std::int64_t j = 0; j < g.ny; ++j)
        for (std::int64_t i = 0; i < g.nx; ++i) {
            double v = std::fabs(g.values[std::size_t(j * g.nx + i)]);
            mx = std::max(mx, v);
            if (i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1) border = std::max(border, v);
        }
    if (border > 1e-3 * mx)
        throw ValidationError("test function does not vanish on the grid border (not compactly supported)");
}

}  // namespace

double lambda_sq(double beta_hat) {
    check_beta_hat(beta_hat);
    return -std::log1p(-beta_hat * beta_hat);
}

double lambda_sq_interval(double u, double v, double beta_hat) {
    check_beta_hat(beta_hat);
    if (!(u >= 0.0 && u <= v && v <= 1.0)) throw ValidationError("lambda_sq_interval needs 0 <= u <= v <= 1");
    double b2 = beta_hat * beta_hat;
    return std::log1p(-b2 * u) - std::log1p(-b2 * v);
}

double sigma_profile(double u, double beta_hat) {
    check_beta_hat(beta_hat);
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("sigma_profile needs u in [0, 1]");
    return std::sqrt(beta_hat * beta_hat / (1.0 - beta_hat * beta_hat * u));
}

double sigma_star(double beta_hat) {
    check_beta_hat(beta_hat);
    double integral = adaptive_simpson([&](double u) { return sigma_profile(u, beta_hat); }, 0.0, 1.0, 1e-14);
    return std::numbers::sqrt2 * integral;
}

double sigma_star_closed_form(double beta_hat) {
    check_beta_hat(beta_hat);
    return 2.0 * std::numbers::sqrt2 * (1.0 - std::sqrt(1.0 - beta_hat * beta_hat)) / beta_hat;
}

NaiveBound naive_bound(double beta_hat) {
    double l2 = lambda_sq(beta_hat);
    return {std::sqrt(l2), std::sqrt(2.0 * l2)};
}

double exponential_integral_e1(double z) {
    if (!(z > 0.0)) throw ValidationError("E_1 needs z > 0");
    if (z > 700.0) return 0.0;
    return boost::math::expint(1, z);
}

GriddedFunction sample_on_grid(const std::function<double(double, double)>& psi, double half_width, double h) {
    if (!(half_width > 0.0 && h > 0.0)) throw ValidationError("grid needs positive half width and spacing");
    GriddedFunction g;
    g.h = h;
    g.nx = g.ny = std::int64_t(std::llround(2.0 * half_width / h));
    g.x0 = g.y0 = -half_width + 0.5 * h;
    g.values.resize(std::size_t(g.nx * g.ny));
    for (std::int64_t j = 0; j < g.ny; ++j)
        for (std::int64_t i = 0; i < g.nx; ++i)
            g.values[std::size_t(j * g.nx + i)] = psi(g.x0 + double(i) * h, g.y0 + double(j) * h);
    return g;
}

double ew_covariance(const GriddedFunction& psi) { return ew_covariance(psi, psi); }

double ew_covariance(const GriddedFunction& psi, const GriddedFunction& chi) {
    check_compact(psi);
    check_compact(chi);
    if (psi.nx != chi.nx || psi.ny != chi.ny || psi.h != chi.h || psi.x0 != chi.x0 || psi.y0 != chi.y0)
        throw ValidationError("ew_covariance needs both functions on the same grid");
    const std::int64_t nx = psi.nx, ny = psi.ny;
    const double h = psi.h;
    const std::int64_t px = fft_size(2 * nx - 1), py = fft_size(2 * ny - 1);
    const std::int64_t pxc = px / 2 + 1;

    std::vector<double> kernel((std::size_t)(px * py), 0.0), field(std::size_t(px * py), 0.0);
    const double k0 = diagonal_cell_kernel(h);
    for (std::int64_t dy = -(ny - 1); dy <= ny - 1; ++dy)
        for (std::int64_t dx = -(nx - 1); dx <= nx - 1; ++dx) {
            double r2 = h * h * double(dx * dx + dy * dy);
            double v = (dx == 0 && dy == 0) ? k0 : exponential_integral_e1(0.5 * r2);
            kernel[std::size_t(((dy + py) % py) * px + (dx + px) % px)] = v;
        }
    for (std::int64_t j = 0; j < ny; ++j)
        for (std::int64_t i = 0; i < nx; ++i) field[std::size_t(j * px + i)] = chi.values[std::size_t(j * nx + i)];

    std::vector<std::complex<double>> kf(std::size_t(py * pxc)), ff(std::size_t(py * pxc));
    fftw_plan pk, pf, back;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        pk = fftw_plan_dft_r2c_2d(int(py), int(px), kernel.data(), reinterpret_cast<fftw_complex*>(kf.data()),
                                  FFTW_ESTIMATE);
        pf = fftw_plan_dft_r2c_2d(int(py), int(px), field.data(), reinterpret_cast<fftw_complex*>(ff.data()),
                                  FFTW_ESTIMATE);
        back = fftw_plan_dft_c2r_2d(int(py), int(px), reinterpret_cast<fftw_complex*>(ff.data()), field.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(pk);
    fftw_execute(pf);
    for (std::size_t i = 0; i < ff.size(); ++i) ff[i] *= kf[i];
    fftw_execute(back);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(pk);
        fftw_destroy_plan(pf);
        fftw_destroy_plan(back);
    }
    const double norm = 1.0 / double(px * py);
    double sum = 0.0;
    for (std::int64_t j = 0; j < ny; ++j)
        for (std::int64_t i = 0; i < nx; ++i)
            sum += psi.values[std::size_t(j * nx + i)] * field[std::size_t(j * px + i)] * norm;
    return sum * h * h * h * h / std::numbers::pi;
}

void VariationalInstance::validate() const {
    if (M < 1 || t < 1 || t > M) throw ValidationError("variational instance needs 1 <= t <= M");
    if (!(a >= 0.0)) throw ValidationError("variational instance needs a >= 0");
    if (std::int64_t(f.size()) != M) throw ValidationError("variational instance needs f on [1, M]");
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] > 0.0)) throw ValidationError("f must be positive");
        if (i > 0 && f[i] < f[i - 1]) throw ValidationError("f must be nondecreasing");
    }
}

double variational_bound(const VariationalInstance& inst) {
    inst.validate();
    return double(inst.M - inst.t + 1) + inst.a / inst.f.back();
}

double variational_objective(const VariationalInstance& inst, const std::vector<double>& g) {
    if (std::int64_t(g.size()) != inst.M - inst.t + 1) throw ValidationError("g must be defined on [t, M]");
    double s = 0.0;
    for (std::int64_t u = inst.t; u <= inst.M; ++u) s += g[std::size_t(u - inst.t)] / inst.f[std::size_t(u - 1)];
    return s;
}

bool variational_feasible(const VariationalInstance& inst, const std::vector<double>& g, double strict) {
    if (std::int64_t(g.size()) != inst.M - inst.t + 1) return false;
    double G = 0.0, F = 0.0;
    for (std::int64_t u = inst.M; u >= inst.t; --u) {
        double gu = g[std::size_t(u - inst.t)];
        if (gu < 0.0) return false;
        G += gu;
        F += inst.f[std::size_t(u - 1)];
        if (u > inst.t && G > inst.a + F) return false;
        if (u == inst.t && !(G > inst.a + F + strict) && !(strict > 0.0 && G >= inst.a + F + strict)) return false;
    }
    return true;
}

namespace {

struct GridSetup {
    std::int64_t n = 0;                 // number of levels t..M
    std::int64_t kmin = 0, kmax = 0;    // range of G(t) / step
    std::vector<std::int64_t> ub;       // ub[j] = floor(A(t+j) / step) for j >= 1
};

GridSetup grid_setup(const VariationalInstance& inst, double step) {
    inst.validate();
    if (!(step > 0.0)) throw ValidationError("grid step must be positive");
    GridSetup gs;
    gs.n = inst.M - inst.t + 1;
    std::vector<double> A((std::size_t)(gs.n));
    double F = 0.0;
    for (std::int64_t u = inst.M; u >= inst.t; --u) {
        F += inst.f[std::size_t(u - 1)];
        A[std::size_t(u - inst.t)] = inst.a + F;
    }
    gs.kmin = std::int64_t(std::ceil((A[0] + step) / step - 1e-9));
    gs.kmax = gs.kmin + 2;
    if (gs.kmax > 20000000) throw ValidationError("grid step too small for exhaustive search");
    gs.ub.assign(std::size_t(gs.n), 0);
    for (std::int64_t j = 1; j < gs.n; ++j) gs.ub[std::size_t(j)] = std::int64_t(std::floor(A[std::size_t(j)] / step + 1e-9));
    return gs;
}

VariationalResult finish_result(const VariationalInstance& inst, std::vector<double> g) {
    VariationalResult r;
    r.value = variational_objective(inst, g);
    r.g = std::move(g);
    return r;
}

}  // namespace

VariationalResult variational_search_grid(const VariationalInstance& inst, double grid_step) {
    if (inst.M > 8) throw ValidationError("exhaustive grid search is limited to M <= 8");
    GridSetup gs = grid_setup(inst, grid_step);
    const std::int64_t n = gs.n, K = gs.kmax;
    const double inf = std::numeric_limits<double>::infinity();
    // V[j][G] = min cost of levels t+j..M given G(t+j) = G (in grid units).
    std::vector<std::vector<double>> V(std::size_t(n + 1), std::vector<double>(std::size_t(K + 1), inf));
    V[std::size_t(n)][0] = 0.0;
    auto valid = [&](std::int64_t j, std::int64_t G) {
        if (j == n) return G == 0;
        if (j == 0) return G >= gs.kmin && G <= K;
        return G <= gs.ub[std::size_t(j)];
    };
    for (std::int64_t j = n - 1; j >= 0; --j) {
        const double inv_f = grid_step / inst.f[std::size_t(inst.t + j - 1)];
        // cost(G) = min_{G' <= G} V[j+1][G'] + (G - G') inv_f: running prefix minimum of V - G' inv_f.
        double run = inf;
        for (std::int64_t G = 0; G <= K; ++G) {
            if (valid(j + 1, G) && V[std::size_t(j + 1)][std::size_t(G)] < inf)
                run = std::min(run, V[std::size_t(j + 1)][std::size_t(G)] - double(G) * inv_f);
            if (valid(j, G) && run < inf) V[std::size_t(j)][std::size_t(G)] = run + double(G) * inv_f;
        }
    }
    double best = inf;
    for (std::int64_t G = 0; G <= K; ++G) best = std::min(best, V[0][std::size_t(G)]);
    if (!(best < inf)) throw ValidationError("discretized feasible set is empty");
    const double tol = 1e-12 * std::max(1.0, std::fabs(best));

    // Lexicographic reconstruction over the set of optimal states.
    std::vector<std::int64_t> states;
    for (std::int64_t G = 0; G <= K; ++G)
        if (V[0][std::size_t(G)] <= best + tol) states.push_back(G);
    std::vector<double> g;
    for (std::int64_t j = 0; j < n; ++j) {
        const double inv_f = grid_step / inst.f[std::size_t(inst.t + j - 1)];
        std::int64_t best_g = std::numeric_limits<std::int64_t>::max();
        std::vector<std::int64_t> next;
        for (std::int64_t G : states)
            for (std::int64_t G2 = G; G2 >= 0; --G2) {
                if (!valid(j + 1, G2) || !(V[std::size_t(j + 1)][std::size_t(G2)] < inf)) continue;
                double c = V[std::size_t(j + 1)][std::size_t(G2)] + double(G - G2) * inv_f;
                if (c > V[std::size_t(j)][std::size_t(G)] + tol) continue;
                std::int64_t gg = G - G2;
                if (gg < best_g) {
                    best_g = gg;
                    next.clear();
                }
                if (gg == best_g && std::find(next.begin(), next.end(), G2) == next.end()) next.push_back(G2);
            }
        g.push_back(double(best_g) * grid_step);
        states = next;
    }
    return finish_result(inst, std::move(g));
}

VariationalResult variational_search_brute(const VariationalInstance& inst, double grid_step) {
    GridSetup gs = grid_setup(inst, grid_step);
    const std::int64_t n = gs.n, K = gs.kmax;
    double combos = std::pow(double(K + 1), double(n));
    if (combos > 5e7) throw ValidationError("instance too large for brute-force enumeration");
    std::vector<std::int64_t> k((std::size_t)(n), 0);
    std::vector<double> best_g;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        // Check feasibility in grid units.
        std::int64_t G = 0;
        bool ok = true;
        for (std::int64_t j = n - 1; j >= 0 && ok; --j) {
            G += k[std::size_t(j)];
            if (j > 0 && G > gs.ub[std::size_t(j)]) ok = false;
            if (j == 0 && G < gs.kmin) ok = false;
        }
        if (ok) {
            std::vector<double> g((std::size_t)(n));
            for (std::int64_t j = 0; j < n; ++j) g[std::size_t(j)] = double(k[std::size_t(j)]) * grid_step;
            double v = variational_objective(inst, g);
            // Enumeration runs in lexicographic order, so only strict improvements replace the incumbent.
            if (best_g.empty() || v < best - 1e-12 * std::max(1.0, std::fabs(best))) {
                best = v;
                best_g = g;
            }
        }
        std::int64_t j = n - 1;
        while (j >= 0 && k[std::size_t(j)] == K) k[std::size_t(j--)] = 0;
        if (j < 0) break;
        ++k[std::size_t(j)];
    }
    if (best_g.empty()) throw ValidationError("discretized feasible set is empty");
    return finish_result(inst, std::move(best_g));
}

VariationalResult variational_search_descent(const VariationalInstance& inst, double grid_step) {
    inst.validate();
    if (!(grid_step > 0.0)) throw ValidationError("grid step must be positive");
    const std::int64_t n = inst.M - inst.t + 1;
    std::vector<double> A((std::size_t)(n));
    double F = 0.0;
    for (std::int64_t u = inst.M; u >= inst.t; --u) {
        F += inst.f[std::size_t(u - 1)];
        A[std::size_t(u - inst.t)] = inst.a + F;
    }
    // Linear objective in G: coefficient 1/f(t) on G(t), 1/f(u) - 1/f(u-1) <= 0 on G(u), u > t.
    std::vector<double> coef((std::size_t)(n));
    for (std::int64_t j = 0; j < n; ++j) {
        double fu = inst.f[std::size_t(inst.t + j - 1)];
        coef[std::size_t(j)] = j == 0 ? 1.0 / fu : 1.0 / fu - 1.0 / inst.f[std::size_t(inst.t + j - 2)];
    }
    std::vector<double> G((std::size_t)(n + 1), 0.0);
    G[0] = A[0] + grid_step;
    for (int sweep = 0; sweep < 10 * int(n) + 10; ++sweep) {
        bool changed = false;
        for (std::int64_t j = 0; j < n; ++j) {
            double lo = G[std::size_t(j + 1)];
            double hi = std::numeric_limits<double>::infinity();
            if (j == 0) {
                lo = std::max(lo, A[0] + grid_step);
            } else {
                hi = std::min(G[std::size_t(j - 1)], A[std::size_t(j)]);
            }
            double target;
            if (coef[std::size_t(j)] > 0.0) target = lo;
            else if (j > 0) target = hi;  // ties go to larger tails, i.e. lexicographically smaller g
            else target = lo;
            target = std::max(target, lo);
            if (target != G[std::size_t(j)]) {
                G[std::size_t(j)] = target;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<double> g((std::size_t)(n));
    for (std::int64_t j = 0; j < n; ++j) g[std::size_t(j)] = G[std::size_t(j)] - G[std::size_t(j + 1)];
    return finish_result(inst, std::move(g));
}

std::int64_t QSpec::at(std::int64_t N) const {
    switch (kind) {
        case Kind::constant: return std::int64_t(c);
        case Kind::sqrt_log: return std::int64_t(std::floor(c * std::sqrt(std::log(double(N)))));
        case Kind::table: {
            auto it = table.find(N);
            if (it == table.end()) throw ValidationError("q table has no entry for N = " + std::to_string(N));
            return it->second;
        }
    }
    return 0;
}

MomentCondition moment_condition(const QSpec& q, std::int64_t k, std::int64_t M, double beta_hat,
                                 std::int64_t N_probe) {
    check_beta_hat(beta_hat);
    if (M < 1 || k < 1 || k > M) throw ValidationError("moment condition needs 1 <= k <= M");
    if (N_probe < 2) throw ValidationError("moment condition needs N >= 2");
    MomentCondition mc;
    mc.q = q.at(N_probe);
    double pairs = double(mc.q) * double(mc.q - 1) / 2.0;
    mc.lhs = pairs / std::log(double(N_probe));
    mc.rhs = (1.0 - beta_hat * beta_hat * double(k) / double(M)) / (beta_hat * beta_hat);
    mc.margin = mc.rhs - mc.lhs;
    mc.holds = mc.lhs < mc.rhs;
    return mc;
}

}  // namespace polyext::theory
