#include "polyext/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "polyext/env.hpp"
#include "polyext/errors.hpp"
#include "polyext/numerics.hpp"
#include "polyext/parallel.hpp"
#include "polyext/polymer.hpp"
#include "polyext/stats.hpp"
#include "polyext/walk.hpp"

namespace polyext::oracles {
namespace {

constexpr std::array<Point, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

struct Enumerator {
    std::int64_t q, T;
    std::vector<Point> pos;
    std::vector<std::uint64_t> hist;  // hist[c] = number of step sequences with c collisions

    void run(std::int64_t step, std::int64_t collisions) {
        if (step == T) {
            ++hist[std::size_t(collisions)];
            return;
        }
        std::vector<Point> saved = pos;
        std::int64_t combos = std::int64_t(1) << (2 * q);
        for (std::int64_t c = 0; c < combos; ++c) {
            for (std::int64_t i = 0; i < q; ++i) pos[std::size_t(i)] = saved[std::size_t(i)] + kSteps[(c >> (2 * i)) & 3];
            std::int64_t pairs = 0;
            for (std::int64_t i = 0; i < q; ++i)
                for (std::int64_t j = i + 1; j < q; ++j) pairs += pos[std::size_t(i)] == pos[std::size_t(j)];
            run(step + 1, collisions + pairs);
        }
        pos = saved;
    }
};

// One step of the 1-D kernel (1/4, 1/2, 1/4) along a strided line of length n. Mass pushed past
// either end is returned.
double smooth_line(const double* in, double* out, std::int64_t n, std::int64_t stride) {
    double lost = 0.25 * (in[0] + in[(n - 1) * stride]);
    for (std::int64_t j = 0; j < n; ++j) {
        double left = j > 0 ? in[(j - 1) * stride] : 0.0;
        double right = j + 1 < n ? in[(j + 1) * stride] : 0.0;
        out[j * stride] = 0.25 * left + 0.5 * in[j * stride] + 0.25 * right;
    }
    return lost;
}

}  // namespace

void ReplicaConfig::validate() const {
    if (q() < 2) throw ValidationError("replica configuration needs q >= 2 walks");
    if (s < 1 || t < s) throw ValidationError("replica configuration needs 1 <= s <= t");
    if (!std::isfinite(beta) || beta < 0.0) throw ValidationError("replica configuration needs beta >= 0");
}

double exact_joint_moment(const ReplicaConfig& cfg) {
    cfg.validate();
    const std::int64_t q = cfg.q(), T = cfg.horizon();
    if (q * T > 12)
        throw BudgetError("enumeration needs q * (t - s + 1) <= 12, got " + std::to_string(q * T));
    Enumerator e{q, T, cfg.starts, std::vector<std::uint64_t>(std::size_t(q * (q - 1) / 2 * T + 1), 0)};
    e.run(0, 0);
    const double b2 = cfg.beta * cfg.beta;
    CompensatedSum s;
    for (std::size_t c = 0; c < e.hist.size(); ++c)
        if (e.hist[c]) s.add(double(e.hist[c]) * std::exp(b2 * double(c)));
    return std::ldexp(s.value(), -int(2 * q * T));
}

std::int64_t difference_walk_radius(std::int64_t horizon, double c) {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (c <= 0.0) return 0;
    double T = double(horizon);
    return std::max<std::int64_t>(1, std::int64_t(std::ceil(c * std::sqrt(2.0 * T) * (1.0 + std::log(T)) / 4.0)));
}

DifferenceWalkResult difference_walk_moment(const ReplicaConfig& cfg, std::int64_t radius) {
    cfg.validate();
    if (cfg.q() != 2) throw ValidationError("difference-walk DP needs q = 2");
    const std::int64_t T = cfg.horizon();
    Point d = cfg.starts[0] - cfg.starts[1];
    std::int64_t a = d.x + d.y, b = d.x - d.y;
    DifferenceWalkResult r;
    if (a & 1) {
        // Opposite parities never meet.
        r.value = 1.0;
        return r;
    }
    const std::int64_t A = a / 2, B = b / 2;
    const std::int64_t reach = std::max(std::llabs(A), std::llabs(B));
    const std::int64_t H = radius <= 0 ? reach + T : std::max(radius, reach);
    r.radius = H;
    const std::int64_t W = 2 * H + 1;
    if (W > 40000 || W * W > (std::int64_t(1) << 28))
        throw BudgetError("difference-walk window of half-width " + std::to_string(H) + " exceeds the memory budget");
    std::vector<double> f((std::size_t)(W * W), 0.0), g((std::size_t)(W * W), 0.0);
    auto at = [&](std::int64_t u, std::int64_t v) { return std::size_t((v + H) * W + (u + H)); };
    f[at(A, B)] = 1.0;
    const double tilt = std::exp(cfg.beta * cfg.beta);
    // Active rectangle grows by one per step.
    std::int64_t u0 = A, u1 = A, v0 = B, v1 = B;
    CompensatedSum escaped;
    for (std::int64_t n = 1; n <= T; ++n) {
        u0 = std::max(-H, u0 - 1);
        u1 = std::min(H, u1 + 1);
        v0 = std::max(-H, v0 - 1);
        v1 = std::min(H, v1 + 1);
        const std::int64_t nu = u1 - u0 + 1, nv = v1 - v0 + 1;
        double lost = 0.0;
        // Edge cells are zero unless the range is clipped by the box, so the lost mass is the escape.
        for (std::int64_t v = v0; v <= v1; ++v) lost += smooth_line(&f[at(u0, v)], &g[at(u0, v)], nu, 1);
        for (std::int64_t u = u0; u <= u1; ++u) lost += smooth_line(&g[at(u, v0)], &f[at(u, v0)], nv, W);
        escaped.add(lost);
        f[at(0, 0)] *= tilt;
    }
    CompensatedSum total;
    for (std::int64_t v = v0; v <= v1; ++v)
        for (std::int64_t u = u0; u <= u1; ++u) total.add(f[at(u, v)]);
    r.escaped = escaped.value();
    total.add(r.escaped);
    r.value = total.value();
    return r;
}

McEstimate mc_joint_moment(const ReplicaConfig& cfg, std::int64_t replicas, std::uint64_t seed, int threads) {
    cfg.validate();
    if (replicas < 1) throw ValidationError("replicas must be >= 1");
    polymer::Model m{cfg.beta, std::max<std::int64_t>(2, cfg.t)};
    polymer::SweepOptions opt;
    opt.policy = polymer::WindowPolicy::exact();
    auto values = parallel::map_indexed(replicas, threads, [&](std::int64_t r) {
        env::DisorderView env(parallel::replica_seed(seed, std::uint64_t(r)));
        double log_prod = 0.0;
        for (const Point& x : cfg.starts) {
            polymer::ScaledField z = polymer::backward_sweep_scaled(env, m, cfg.s, cfg.t, Box::around(x), opt);
            log_prod += std::log(z.values[0]) + z.log_offset;
        }
        return std::exp(log_prod);
    });
    stats::Summary s = stats::summarize(values);
    return {s.mean, s.stderr_mean, replicas};
}

std::vector<SecondMomentPoint> second_moment_curve(double beta_hat, const std::vector<std::int64_t>& Ns, double c) {
    std::vector<SecondMomentPoint> out;
    for (std::int64_t N : Ns) {
        SecondMomentPoint p;
        p.N = N;
        p.beta = walk::beta_N(beta_hat, N);
        p.limit = 1.0 / (1.0 - beta_hat * beta_hat);
        ReplicaConfig cfg{{{0, 0}, {0, 0}}, 1, N, p.beta, "second-moment"};
        std::int64_t R = difference_walk_radius(N, c);
        DifferenceWalkResult a = difference_walk_moment(cfg, R);
        p.radius = a.radius;
        p.value = a.value;
        if (c > 0.0) {
            p.doubled = difference_walk_moment(cfg, 2 * R).value;
            p.certified_error = std::fabs(p.doubled - p.value);
        } else {
            p.doubled = p.value;
        }
        out.push_back(p);
    }
    return out;
}

std::int64_t TorusOperator::states() const {
    std::int64_t s = 1;
    for (std::int64_t i = 0; i < p; ++i) s *= side * side;
    return s;
}

void TorusOperator::validate() const {
    if (side < 4 || side % 2) throw ValidationError("torus side must be even and >= 4");
    if (p < 1 || p > 4) throw ValidationError("torus operator supports 1 <= p <= 4 walks");
    if (!std::isfinite(beta) || beta < 0.0) throw ValidationError("torus operator needs beta >= 0");
    double st = 1.0;
    for (std::int64_t i = 0; i < p; ++i) st *= double(side * side);
    if (st > 2.0e7) throw BudgetError("torus state space of " + std::to_string(st) + " tuples exceeds the budget");
}

std::int64_t torus_side(std::int64_t N, double K) {
    if (N < 1 || !(K > 0.0)) throw ValidationError("torus side needs N >= 1 and K > 0");
    return std::max<std::int64_t>(4, 2 * std::int64_t(std::ceil(0.5 * K * std::sqrt(double(N)))));
}

namespace {

// Generic power iteration for Q = P E with P symmetric. apply_P(in, out) must preserve the class.
template <class ApplyP>
PerronResult power_iterate(std::vector<double> phi, const std::vector<double>& E, const std::vector<char>& cls,
                           ApplyP apply_P, double tol, std::int64_t max_iter) {
    const std::size_t n = phi.size();
    std::vector<double> g(n), h(n);
    PerronResult r;
    double rho_prev = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) g[i] = E[i] * phi[i];
        apply_P(g, h);
        CompensatedSum num, den;
        for (std::size_t i = 0; i < n; ++i)
            if (cls[i]) {
                num.add(g[i] * h[i]);
                den.add(phi[i] * g[i]);
            }
        double rho = num.value() / den.value();
        double res = 0.0, pmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (cls[i]) {
                res = std::max(res, std::fabs(h[i] - rho * phi[i]));
                pmax = std::max(pmax, phi[i]);
            }
        res /= pmax;
        bool done = std::fabs(rho - rho_prev) < tol * rho && res < tol;
        if (done) {
            r.lambda = rho;
            r.iterations = it;
            r.residual = res;
            break;
        }
        rho_prev = rho;
        double hmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) hmax = std::max(hmax, h[i]);
        for (std::size_t i = 0; i < n; ++i) phi[i] = h[i] / hmax;
        if (it == max_iter)
            throw ValidationError("power iteration did not converge in " + std::to_string(max_iter) +
                                  " iterations (residual " + std::to_string(res) + ")");
    }
    double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (cls[i]) {
            pmax = std::max(pmax, phi[i]);
            pmin = std::min(pmin, phi[i]);
        }
    for (double& v : phi) v /= pmax;
    r.phi_ratio = pmax / pmin;
    // Stochasticity of q(x, y) = Q(x, y) phi(y) / (lambda phi(x)): row sums are (Q phi)(x) / (lambda phi(x)).
    for (std::size_t i = 0; i < n; ++i) g[i] = E[i] * phi[i];
    apply_P(g, h);
    for (std::size_t i = 0; i < n; ++i)
        if (cls[i]) r.stochastic_residual = std::max(r.stochastic_residual, std::fabs(h[i] / (r.lambda * phi[i]) - 1.0));
    r.phi = std::move(phi);
    return r;
}

// m(x) q(x, y) versus m(y) q(y, x) with m = phi^2 E, for a pair with P(x, y) = P(y, x) = pxy.
double reversibility_gap(const PerronResult& r, const std::vector<double>& E, std::size_t x, std::size_t y,
                         double pxy) {
    const std::vector<double>& phi = r.phi;
    double qxy = pxy * E[y] * phi[y] / (r.lambda * phi[x]);
    double qyx = pxy * E[x] * phi[x] / (r.lambda * phi[y]);
    double lhs = phi[x] * phi[x] * E[x] * qxy;
    double rhs = phi[y] * phi[y] * E[y] * qyx;
    return std::fabs(lhs - rhs) / std::max(lhs, rhs);
}

}  // namespace

PerronResult perron(const TorusOperator& op, double tol, std::int64_t max_iter) {
    op.validate();
    const std::int64_t L = op.side, L2 = L * L, S = op.states(), p = op.p;
    const double b2 = op.beta * op.beta;
    std::vector<double> E((std::size_t)(S)), phi((std::size_t)(S), 0.0);
    std::vector<char> cls((std::size_t)(S), 0);
    std::vector<std::int64_t> site((std::size_t)(p));
    for (std::int64_t st = 0; st < S; ++st) {
        std::int64_t rem = st;
        for (std::int64_t i = 0; i < p; ++i) {
            site[std::size_t(i)] = rem % L2;
            rem /= L2;
        }
        std::int64_t V = 0;
        bool same_parity = true;
        auto parity = [&](std::int64_t c) { return ((c % L) + (c / L)) & 1; };
        for (std::int64_t i = 0; i < p; ++i) {
            if (parity(site[std::size_t(i)]) != parity(site[0])) same_parity = false;
            for (std::int64_t j = i + 1; j < p; ++j) V += site[std::size_t(i)] == site[std::size_t(j)];
        }
        E[std::size_t(st)] = std::exp(b2 * double(V));
        cls[std::size_t(st)] = same_parity;
        phi[std::size_t(st)] = same_parity ? 1.0 : 0.0;
    }
    // Neighbour table on the single-walk torus.
    std::vector<std::array<std::int64_t, 4>> nb((std::size_t)(L2));
    for (std::int64_t c = 0; c < L2; ++c) {
        std::int64_t x = c % L, y = c / L;
        nb[std::size_t(c)] = {((x + 1) % L) + y * L, ((x + L - 1) % L) + y * L, x + ((y + 1) % L) * L,
                              x + ((y + L - 1) % L) * L};
    }
    std::vector<double> tmp((std::size_t)(S));
    auto apply_P = [&](const std::vector<double>& in, std::vector<double>& out) {
        const std::vector<double>* src = &in;
        std::int64_t stride = 1;
        for (std::int64_t i = 0; i < p; ++i) {
            std::vector<double>& dst = (i % 2 == p % 2) ? tmp : out;
            // Alternate buffers so the final pass lands in out.
            for (std::int64_t st = 0; st < S; ++st) {
                std::int64_t c = (st / stride) % L2;
                std::int64_t base = st - c * stride;
                const auto& nbc = nb[std::size_t(c)];
                dst[std::size_t(st)] = 0.25 * ((*src)[std::size_t(base + nbc[0] * stride)] +
                                               (*src)[std::size_t(base + nbc[1] * stride)] +
                                               (*src)[std::size_t(base + nbc[2] * stride)] +
                                               (*src)[std::size_t(base + nbc[3] * stride)]);
            }
            src = &dst;
            stride *= L2;
        }
    };
    PerronResult r = power_iterate(std::move(phi), E, cls, apply_P, tol, max_iter);
    // Reversibility on sampled pairs: every walk moves by a direction chosen from the state index.
    const std::int64_t samples = std::min<std::int64_t>(S, 20000);
    const double pxy = std::pow(0.25, double(p));
    for (std::int64_t k = 0; k < samples; ++k) {
        std::int64_t st = (k * 7919) % S;
        if (!cls[std::size_t(st)]) continue;
        std::int64_t rem = st, y = 0, stride = 1;
        for (std::int64_t i = 0; i < p; ++i) {
            std::int64_t c = rem % L2;
            rem /= L2;
            y += nb[std::size_t(c)][std::size_t((k + i) & 3)] * stride;
            stride *= L2;
        }
        r.reversibility_residual =
            std::max(r.reversibility_residual, reversibility_gap(r, E, std::size_t(st), std::size_t(y), pxy));
    }
    return r;
}

PerronResult perron_difference(std::int64_t side, double beta, double tol, std::int64_t max_iter) {
    if (side < 4 || side % 2) throw ValidationError("torus side must be even and >= 4");
    if (side > 4096) throw BudgetError("torus side too large");
    if (!std::isfinite(beta) || beta < 0.0) throw ValidationError("torus operator needs beta >= 0");
    const std::int64_t L = side, S = L * L;
    std::vector<double> E((std::size_t)(S), 1.0), phi((std::size_t)(S), 0.0);
    std::vector<char> cls((std::size_t)(S), 0);
    E[0] = std::exp(beta * beta);
    for (std::int64_t c = 0; c < S; ++c) {
        bool even = (((c % L) + (c / L)) & 1) == 0;
        cls[std::size_t(c)] = even;
        phi[std::size_t(c)] = even ? 1.0 : 0.0;
    }
    auto idx = [L](std::int64_t x, std::int64_t y) { return ((y % L + L) % L) * L + ((x % L + L) % L); };
    std::vector<double> tmp((std::size_t)(S));
    auto step = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::int64_t y = 0; y < L; ++y)
            for (std::int64_t x = 0; x < L; ++x)
                out[std::size_t(y * L + x)] = 0.25 * (in[std::size_t(idx(x + 1, y))] + in[std::size_t(idx(x - 1, y))] +
                                                      in[std::size_t(idx(x, y + 1))] + in[std::size_t(idx(x, y - 1))]);
    };
    auto apply_P2 = [&](const std::vector<double>& in, std::vector<double>& out) {
        step(in, tmp);
        step(tmp, out);
    };
    PerronResult r = power_iterate(std::move(phi), E, cls, apply_P2, tol, max_iter);
    // Two-step kernel: 0 w.p. 1/4, (+-2, 0), (0, +-2) w.p. 1/16, (+-1, +-1) w.p. 1/8.
    struct Move { std::int64_t dx, dy; double prob; };
    const Move moves[] = {{2, 0, 1.0 / 16}, {-2, 0, 1.0 / 16}, {0, 2, 1.0 / 16}, {0, -2, 1.0 / 16},
                          {1, 1, 1.0 / 8},  {1, -1, 1.0 / 8},  {-1, 1, 1.0 / 8}, {-1, -1, 1.0 / 8}};
    for (std::int64_t y = 0; y < L; ++y)
        for (std::int64_t x = 0; x < L; ++x) {
            if (!cls[std::size_t(y * L + x)]) continue;
            for (const Move& mv : moves)
                r.reversibility_residual =
                    std::max(r.reversibility_residual, reversibility_gap(r, E, std::size_t(y * L + x),
                                                                         std::size_t(idx(x + mv.dx, y + mv.dy)), mv.prob));
        }
    return r;
}

PtopTable ptop_moment_trend(double beta_hat, std::int64_t p, const std::vector<std::int64_t>& Ns,
                            std::int64_t replicas, std::uint64_t seed, int threads) {
    if (p < 1 || p > 3) throw ValidationError("point-to-point moments need p in {1, 2, 3}");
    if (replicas < 1) throw ValidationError("replicas must be >= 1");
    PtopTable table;
    table.p = p;
    std::vector<double> series;
    for (std::int64_t N : Ns) {
        if (N < 2) throw ValidationError("point-to-point moments need N >= 2");
        polymer::Model m = polymer::Model::subcritical(beta_hat, N);
        // Endpoints of parity N along the x axis: the mode, ~0.5 and ~1 walk standard deviation.
        std::vector<Point> ys;
        double sd = std::sqrt(double(N) / 2.0);
        for (double k : {0.0, 0.5, 1.0}) {
            std::int64_t e = std::int64_t(std::llround(k * sd));
            if ((e + N) & 1) ++e;
            Point y{e, 0};
            if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
        }
        polymer::SweepOptions opt;
        opt.policy = polymer::WindowPolicy::exact();
        auto per_replica = parallel::map_indexed(replicas, threads, [&](std::int64_t r) {
            env::DisorderView env(parallel::replica_seed(seed, std::uint64_t(r)));
            polymer::ForwardSweep fw(env, m, {0, 0}, N, opt);
            fw.advance_to(N);
            std::vector<double> v;
            for (const Point& y : ys) v.push_back(std::exp(double(p) * (fw.log_weight(y) + std::log(double(N)))));
            return v;
        });
        PtopRow best;
        for (std::size_t j = 0; j < ys.size(); ++j) {
            std::vector<double> col;
            for (const auto& v : per_replica) col.push_back(v[j]);
            stats::Summary s = stats::summarize(col);
            if (j == 0 || s.mean > best.scaled_moment) {
                best.N = N;
                best.y = ys[j];
                best.scaled_moment = s.mean;
                best.stderr_scaled = s.stderr_mean;
            }
        }
        if (p == 1) best.exact_p1 = double(N) * walk::transition_prob(best.y, N);
        table.rows.push_back(best);
        series.push_back(best.scaled_moment);
    }
    stats::MannKendall mk = stats::mann_kendall(series);
    table.mk_p_increasing = mk.p_increasing;
    table.bounded = mk.p_increasing >= 0.05;
    return table;
}

}  // namespace polyext::oracles
