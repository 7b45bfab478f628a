#include "polyext/multiscale.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "polyext/errors.hpp"
#include "polyext/theory.hpp"

namespace polyext::multiscale {
namespace {

using boost::multiprecision::cpp_int;
using polymer::ScaledField;
using polymer::SweepOptions;
using polymer::WallMode;
using polymer::WallSpec;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Smallest integer v >= 1 with v^q >= N^p.
std::int64_t ceil_root_power(std::int64_t N, std::int64_t p, std::int64_t q) {
    cpp_int target = boost::multiprecision::pow(cpp_int(N), unsigned(p));
    auto ge = [&](std::int64_t v) { return boost::multiprecision::pow(cpp_int(v), unsigned(q)) >= target; };
    std::int64_t v = std::max<std::int64_t>(1, std::int64_t(std::ceil(std::pow(double(N), double(p) / double(q)))));
    while (v > 1 && ge(v - 1)) --v;
    while (!ge(v)) ++v;
    return v;
}

double log_sum_exp(const std::vector<double>& xs) {
    double mx = kNegInf;
    for (double v : xs) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return kNegInf;
    double s = 0.0;
    for (double v : xs) s += std::exp(v - mx);
    return mx + std::log(s);
}

// Splits [lo, hi] into `parts` contiguous pieces of near-equal length.
std::vector<std::pair<std::int64_t, std::int64_t>> split(std::int64_t lo, std::int64_t hi, std::int64_t parts) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    std::int64_t len = hi - lo + 1;
    for (std::int64_t j = 0; j < parts; ++j) {
        std::int64_t a = lo + j * len / parts, b = lo + (j + 1) * len / parts - 1;
        if (a <= b) out.emplace_back(a, b);
    }
    return out;
}

// Tiles of half-width at most h covering box b.
std::vector<Box> tiles(const Box& b, std::int64_t h) {
    std::int64_t side = 2 * std::max<std::int64_t>(h, 0) + 1;
    std::int64_t nx = (b.width() + side - 1) / side, ny = (b.height() + side - 1) / side;
    std::vector<Box> out;
    for (auto [y0, y1] : split(b.y0, b.y1, ny))
        for (auto [x0, x1] : split(b.x0, b.x1, nx)) out.push_back({x0, x1, y0, y1});
    return out;
}

Point tile_center(const Box& t) { return {t.x0 + (t.x1 - t.x0) / 2, t.y0 + (t.y1 - t.y0) / 2}; }

std::int64_t tile_half_width(const Box& t) {
    Point c = tile_center(t);
    return std::max({c.x - t.x0, t.x1 - c.x, c.y - t.y0, t.y1 - c.y});
}

WallSpec make_wall(Point center, double radius) { return {center, std::max(0.5, radius)}; }

// Largest integer a with sqrt(2) a <= rho.
std::int64_t sup_radius_inside(double rho) {
    std::int64_t a = std::int64_t(std::floor(rho / std::sqrt(2.0)));
    while (a > 0 && std::sqrt(2.0) * double(a) > rho) --a;
    return std::max<std::int64_t>(a, 0);
}

}  // namespace

std::int64_t MultiscaleSchedule::r_at(std::int64_t k) const {
    if (k < -1 || k > M) throw ValidationError("scale index out of range");
    return k <= 0 ? 1 : r[std::size_t(k)];
}

std::int64_t MultiscaleSchedule::start_time(std::int64_t k) const {
    if (k < 1 || k > M) throw ValidationError("scale index must lie in [1, M]");
    return k == 1 ? 0 : t[std::size_t(k - 1)];
}

MultiscaleSchedule schedule(std::int64_t N, std::int64_t M) {
    if (M < 1) throw ValidationError("schedule needs M >= 1");
    if (N < 2) throw ValidationError("schedule needs N >= 2");
    MultiscaleSchedule s;
    s.N = N;
    s.M = M;
    s.t.assign(std::size_t(M + 1), 1);
    s.r.assign(std::size_t(M + 1), 1);
    for (std::int64_t k = 1; k <= M; ++k) {
        s.t[std::size_t(k)] = ceil_root_power(N, k, M);
        s.r[std::size_t(k)] = ceil_root_power(N, k, 2 * M);
    }
    return s;
}

std::vector<double> log_W_profile(const env::DisorderView& env, const polymer::Model& m, Point x,
                                  const MultiscaleSchedule& sched, const SweepOptions& opt) {
    std::vector<std::int64_t> times(sched.t.begin() + 1, sched.t.end());
    std::vector<double> lz = polymer::forward_log_Z(env, m, x, times, opt);
    std::vector<double> out(lz.size());
    for (std::size_t k = 0; k < lz.size(); ++k) out[k] = k == 0 ? lz[0] : lz[k] - lz[k - 1];
    return out;
}

double ratio_W(const env::DisorderView& env, const polymer::Model& m, Point x, std::int64_t k,
               const MultiscaleSchedule& sched, const SweepOptions& opt) {
    if (k < 1 || k > sched.M) throw ValidationError("scale index must lie in [1, M]");
    std::vector<std::int64_t> times;
    if (k > 1) times.push_back(sched.t[std::size_t(k - 1)]);
    times.push_back(sched.t[std::size_t(k)]);
    std::vector<double> lz = polymer::forward_log_Z(env, m, x, times, opt);
    return k == 1 ? lz[0] : lz[1] - lz[0];
}

double wall_radius(const MultiscaleSchedule& sched, std::int64_t k) {
    std::int64_t T = sched.t[std::size_t(k)] - sched.start_time(k);
    return std::sqrt(double(T)) * std::log(double(sched.N));
}

double endpoint_radius(const MultiscaleSchedule& sched, std::int64_t k) {
    return double(sched.r_at(k - 1)) * std::log(double(sched.N));
}

double ratio_W_tilde(const env::DisorderView& env, const polymer::Model& m, Point x, std::int64_t k,
                     const MultiscaleSchedule& sched, WallMode mode, const SweepOptions& opt) {
    if (k < 1 || k > sched.M) throw ValidationError("scale index must lie in [1, M]");
    const std::int64_t prev = sched.start_time(k);
    const std::int64_t T = sched.t[std::size_t(k)] - prev;
    const double w = wall_radius(sched, k), rho = endpoint_radius(sched, k);
    const env::DisorderView shifted = env.shifted(std::uint64_t(prev));

    std::vector<Point> ys;
    std::vector<double> log_mu;
    if (prev == 0) {
        ys.push_back(x);
        log_mu.push_back(0.0);
    } else {
        polymer::EndpointMeasure mu = polymer::forward_endpoint(env, m, x, prev, opt);
        for (std::int64_t i = 0; i < mu.window.area(); ++i) {
            Point y = mu.window.at(i);
            double p = mu.probs[std::size_t(i)];
            if (p > 0.0 && l2(y - x) <= rho) {
                ys.push_back(y);
                log_mu.push_back(std::log(p));
            }
        }
    }
    if (ys.empty()) throw ValidationError("empty endpoint range in ratio_W_tilde");

    std::vector<double> terms(ys.size());
    if (mode == WallMode::origin) {
        Box b;
        for (Point y : ys) b = b.hull(y);
        SweepOptions o = opt;
        o.wall = make_wall({0, 0}, w);
        ScaledField z = polymer::backward_sweep_scaled(shifted, m, 1, T, b, o);
        for (std::size_t j = 0; j < ys.size(); ++j) terms[j] = log_mu[j] + z.log_value(ys[j]);
    } else {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            SweepOptions o = opt;
            o.wall = make_wall(ys[j], w);
            ScaledField z = polymer::backward_sweep_scaled(shifted, m, 1, T, Box::around(ys[j]), o);
            terms[j] = log_mu[j] + z.log_value(ys[j]);
        }
    }
    return log_sum_exp(terms);
}

ScaleTable scale_table(const env::DisorderView& env, const polymer::Model& m, const MultiscaleSchedule& sched,
                       const Box& xs, WallMode mode, const SweepOptions& opt) {
    if (xs.empty()) throw ValidationError("scale_table needs a nonempty start box");
    const std::int64_t M = sched.M, nx = xs.area();
    ScaleTable tab;
    tab.xs = xs;
    tab.log_W.assign(std::size_t(M), std::vector<double>(std::size_t(nx)));
    tab.log_W_tilde_lo.assign(std::size_t(M), std::vector<double>(std::size_t(nx)));

    std::vector<std::vector<double>> log_Z(std::size_t(M + 1), std::vector<double>(std::size_t(nx), 0.0));
    for (std::int64_t k = 1; k <= M; ++k) {
        ScaledField f = polymer::backward_sweep_scaled(env, m, 1, sched.t[std::size_t(k)], xs, opt);
        for (std::int64_t i = 0; i < nx; ++i) {
            log_Z[std::size_t(k)][std::size_t(i)] = f.log_value(xs.at(i));
            tab.log_W[std::size_t(k - 1)][std::size_t(i)] =
                log_Z[std::size_t(k)][std::size_t(i)] - log_Z[std::size_t(k - 1)][std::size_t(i)];
        }
    }
    tab.log_Z = log_Z[std::size_t(M)];

    for (std::int64_t k = 1; k <= M; ++k) {
        const std::int64_t prev = sched.start_time(k);
        const std::int64_t T = sched.t[std::size_t(k)] - prev;
        const double w = wall_radius(sched, k), rho = endpoint_radius(sched, k);
        const std::int64_t wall_int = std::int64_t(std::floor(w));
        const std::int64_t mT = opt.policy.margin(T, m.N);
        const env::DisorderView shifted = env.shifted(std::uint64_t(prev));

        Box Y = xs;
        std::int64_t ms = 0;
        if (prev > 0) {
            ms = opt.policy.margin(prev, m.N);
            Y = xs.expanded(std::min<std::int64_t>(std::int64_t(std::ceil(rho)), ms));
        }

        // Lower bound on log Z~ over Y.
        std::vector<double> lzt((std::size_t)(Y.area()), kNegInf);
        auto store = [&](const ScaledField& f, const Box& part) {
            for (std::int64_t y = part.y0; y <= part.y1; ++y)
                for (std::int64_t x = part.x0; x <= part.x1; ++x) lzt[std::size_t(Y.index({x, y}))] = f.log_value({x, y});
        };
        bool vacuous;
        if (mode == WallMode::start) {
            vacuous = wall_int >= T;
        } else {
            vacuous = std::max({std::llabs(Y.x0), std::llabs(Y.x1), std::llabs(Y.y0), std::llabs(Y.y1)}) + T <=
                      wall_int;
        }
        if (vacuous) {
            store(polymer::backward_sweep_scaled(shifted, m, 1, T, Y, opt), Y);
        } else if (mode == WallMode::origin) {
            SweepOptions o = opt;
            o.wall = make_wall({0, 0}, w);
            store(polymer::backward_sweep_scaled(shifted, m, 1, T, Y, o), Y);
        } else {
            // Every y in a tile of half-width h around c sees a wall B(y, w) containing B(c, w - h).
            std::int64_t hmax = std::max<std::int64_t>(0, (wall_int - mT) / 2);
            for (const Box& tile : tiles(Y, hmax)) {
                SweepOptions o = opt;
                o.wall = make_wall(tile_center(tile), double(wall_int - tile_half_width(tile)));
                store(polymer::backward_sweep_scaled(shifted, m, 1, T, tile, o), tile);
            }
        }

        auto& out = tab.log_W_tilde_lo[std::size_t(k - 1)];
        if (prev == 0) {
            for (std::int64_t i = 0; i < nx; ++i) out[std::size_t(i)] = lzt[std::size_t(Y.index(xs.at(i)))];
            continue;
        }

        // Terminal field on Y with a common offset.
        double top = kNegInf;
        for (double v : lzt) top = std::max(top, v);
        auto terminal_on = [&](const Box& D) {
            ScaledField F;
            F.box = Y;
            F.log_offset = std::isfinite(top) ? top : 0.0;
            F.values.assign(std::size_t(Y.area()), 0.0);
            for (std::int64_t y = D.y0; y <= D.y1; ++y)
                for (std::int64_t x = D.x0; x <= D.x1; ++x) {
                    double v = lzt[std::size_t(Y.index({x, y}))];
                    if (std::isfinite(v)) F.values[std::size_t(Y.index({x, y}))] = std::exp(v - F.log_offset);
                }
            return F;
        };
        auto finish = [&](const ScaledField& num, const Box& part) {
            for (std::int64_t y = part.y0; y <= part.y1; ++y)
                for (std::int64_t x = part.x0; x <= part.x1; ++x) {
                    std::size_t i = std::size_t(xs.index({x, y}));
                    out[i] = num.log_value({x, y}) - log_Z[std::size_t(k - 1)][i];
                }
        };
        const std::int64_t rho_inf = sup_radius_inside(rho);
        if (rho_inf >= ms) {
            // The truncated sweep never reaches beyond B(x, ms), which lies inside every endpoint ball.
            ScaledField F = terminal_on(Y);
            finish(polymer::backward_sweep_scaled(env, m, 1, prev, xs, opt, &F), xs);
        } else {
            // Endpoints restricted to B(d, rho_inf - h), inside the ball of every start in the tile.
            std::int64_t h = rho_inf / 4;
            for (const Box& tile : tiles(xs, h)) {
                Box D = Box::centered(tile_center(tile), rho_inf - tile_half_width(tile)).intersect(Y);
                ScaledField F = terminal_on(D);
                finish(polymer::backward_sweep_scaled(env, m, 1, prev, tile, opt, &F), tile);
            }
        }
    }
    return tab;
}

double barrier_M0(double beta_hat) {
    double s = theory::sigma_profile(1.0, beta_hat);
    return std::pow(std::sqrt(2.0) * s + 1.0, 2);
}

bool barrier_member(const BarrierSpec& spec, const std::vector<double>& lambdas, std::int64_t N) {
    if (spec.M < 1 || spec.k < 1 || spec.k > spec.M) throw ValidationError("barrier needs 1 <= k <= M");
    if (std::int64_t(spec.alphas.size()) != spec.M - spec.k + 1)
        throw ValidationError("barrier needs alphas for levels k..M");
    if (std::int64_t(lambdas.size()) != spec.M) throw ValidationError("barrier needs M lambdas");
    for (std::int64_t a : spec.alphas)
        if (a < 0 || double(a) > spec.cap)
            throw ValidationError("barrier alpha " + std::to_string(a) + " outside [0, cap]");
    const double sl = std::sqrt(std::log(double(N)));
    const double coef = std::sqrt(2.0) * (1.0 + spec.epsilon) / std::sqrt(double(spec.M));
    // Tail sums from the deepest level up.
    double alpha_tail = 0.0, lambda_tail = 0.0;
    for (std::int64_t l = spec.M; l >= spec.k; --l) {
        alpha_tail += double(spec.alphas[std::size_t(l - spec.k)]);
        lambda_tail += lambdas[std::size_t(l - 1)];
        double bound = coef * lambda_tail * sl + spec.epsilon * sl;
        if (l > spec.k) {
            if (alpha_tail > bound) return false;
        } else {
            return alpha_tail > bound - spec.level_slack;
        }
    }
    return false;
}

double p_hat_normalizer(std::int64_t n, double delta) {
    if (n < 1 || !(delta > 0.0)) throw ValidationError("p_hat needs n >= 1 and delta > 0");
    double s = 1.0;
    for (std::int64_t k = 1;; ++k) {
        double term = std::exp(-delta * double(k) * double(k) / double(n));
        s += 2.0 * term;
        if (term < 1e-18 * s) break;
    }
    return s * s;
}

double p_hat(Point y, std::int64_t n, double delta) {
    double r2 = double(y.x) * double(y.x) + double(y.y) * double(y.y);
    return std::exp(-delta * r2 / double(n)) / p_hat_normalizer(n, delta);
}

DominationReport domination_check(const env::DisorderView& env, const polymer::Model& m,
                                  const MultiscaleSchedule& sched, double L, std::int64_t levels,
                                  const std::vector<Point>& starts, double hat_delta, const SweepOptions& opt) {
    if (!(L >= 1.0)) throw ValidationError("domination check needs L >= 1");
    if (!(hat_delta > 0.0)) throw ValidationError("domination check needs hat_delta > 0");
    if (levels < 1 || levels > sched.M) throw ValidationError("domination levels must lie in [1, M]");
    DominationReport rep;
    rep.threshold = std::exp(std::log(double(sched.N)) / (L * double(sched.M * sched.M)));
    for (std::int64_t i = 1; i <= levels; ++i) {
        const std::int64_t ti = sched.t[std::size_t(i)];
        const std::int64_t side = sched.r_at(i - 1);
        const double C = p_hat_normalizer(ti, hat_delta);
        DominationLevel lev;
        lev.i = i;
        for (Point x : starts) {
            if (x.x < 0 || x.y < 0 || x.x >= side || x.y >= side) continue;
            polymer::EndpointMeasure mu = polymer::forward_endpoint(env, m, x, ti, opt);
            for (std::int64_t j = 0; j < mu.window.area(); ++j) {
                double p = mu.probs[std::size_t(j)];
                if (p <= 0.0) continue;
                Point y = mu.window.at(j);
                double r2 = double(y.x) * double(y.x) + double(y.y) * double(y.y);
                double ratio = p * C * std::exp(hat_delta * r2 / double(ti));
                if (ratio > lev.worst_ratio) {
                    lev.worst_ratio = ratio;
                    lev.worst_x = x;
                    lev.worst_y = y;
                }
            }
        }
        rep.worst_ratio = std::max(rep.worst_ratio, lev.worst_ratio);
        rep.levels.push_back(lev);
    }
    rep.event = rep.worst_ratio <= rep.threshold;
    return rep;
}

}  // namespace polyext::multiscale
