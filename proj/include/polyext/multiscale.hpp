#pragma once

// Scale decomposition log Z_N(x) = sum_k log W_k(x) over the times t_k = ceil(N^{k/M}).

#include <cstdint>
#include <vector>

#include "polyext/env.hpp"
#include "polyext/lattice.hpp"
#include "polyext/polymer.hpp"

namespace polyext::multiscale {

struct MultiscaleSchedule {
    std::int64_t N = 0, M = 0;
    std::vector<std::int64_t> t;  // t[0] = 1, t[k] = ceil(N^{k/M}) for k = 1..M
    std::vector<std::int64_t> r;  // r[0] = 1, r[k] = ceil(N^{k/(2M)})

    // r_k for k >= -1 (r_{-1} = r_0 = 1).
    std::int64_t r_at(std::int64_t k) const;
    // Time at which scale k starts. Scale 1 starts at time 0: Z_{t_0} is the empty product 1.
    std::int64_t start_time(std::int64_t k) const;
};

// Exact integer ceilings. Requires M >= 1, N >= 2.
MultiscaleSchedule schedule(std::int64_t N, std::int64_t M);

// log W_k(x) for k = 1..M from one forward pass at x; entries sum to log Z_{t_M}(x).
std::vector<double> log_W_profile(const env::DisorderView& env, const polymer::Model& m, Point x,
                                  const MultiscaleSchedule& sched, const polymer::SweepOptions& opt = {});

double ratio_W(const env::DisorderView& env, const polymer::Model& m, Point x, std::int64_t k,
               const MultiscaleSchedule& sched, const polymer::SweepOptions& opt = {});

// Wall radius sqrt(t_k - t_{k-1}) log N for the truncated partition function of scale k.
double wall_radius(const MultiscaleSchedule& sched, std::int64_t k);
// Endpoint radius r_{k-1} log N (Euclidean) of scale k.
double endpoint_radius(const MultiscaleSchedule& sched, std::int64_t k);

// log W~_k(x) = log sum_{|y-x| <= r_{k-1} log N} mu_{t_{k-1}}(x,y) theta_{t_{k-1}} Z~_{t_k - t_{k-1}}(y).
// Exact: one walled sweep per endpoint in "start" mode. Meant for small N.
double ratio_W_tilde(const env::DisorderView& env, const polymer::Model& m, Point x, std::int64_t k,
                     const MultiscaleSchedule& sched, polymer::WallMode mode,
                     const polymer::SweepOptions& opt = {});

// Per-scale values for every start in a box; index [k-1][xs.index(x)].
struct ScaleTable {
    Box xs;
    std::vector<std::vector<double>> log_W;
    std::vector<std::vector<double>> log_W_tilde_lo;  // lower bounds on log W~_k
    std::vector<double> log_Z;                        // log Z_{t_M}(x)
};

// Lower bounds W~_lo <= W~ for all starts at once, by tiling endpoints and starts
// (shrunken walls around endpoint tiles, sup-balls inside every Euclidean endpoint ball).
ScaleTable scale_table(const env::DisorderView& env, const polymer::Model& m, const MultiscaleSchedule& sched,
                       const Box& xs, polymer::WallMode mode, const polymer::SweepOptions& opt = {});

struct BarrierSpec {
    double epsilon = 0.0;
    std::int64_t M = 0, k = 0;
    std::vector<std::int64_t> alphas;  // alpha_k .. alpha_M
    double cap = 0.0;                  // M0 sqrt(log N)
    double level_slack = 0.0;          // subtracted from the level-k bound only
};

// M0 = (sqrt(2) sup sigma + 1)^2 with sup sigma = sigma(1).
double barrier_M0(double beta_hat);

// lambdas[i-1] = lambda_{(i-1)/M, i/M} (not squared), i = 1..M.
bool barrier_member(const BarrierSpec& spec, const std::vector<double>& lambdas, std::int64_t N);

// p^_n(y) = exp(-delta |y|^2 / n) / C(n), normalized over Z^2.
double p_hat(Point y, std::int64_t n, double delta);
double p_hat_normalizer(std::int64_t n, double delta);

struct DominationLevel {
    std::int64_t i = 0;
    double worst_ratio = 0.0;
    Point worst_x, worst_y;
};

struct DominationReport {
    bool event = true;
    double threshold = 0.0;  // N^{1/(L M^2)}
    double worst_ratio = 0.0;
    std::vector<DominationLevel> levels;
};

// Checks mu_{t_i}(x,y) <= N^{1/(L M^2)} p^_{t_i}(y) for i in [1, levels] and the given starts
// (the event uses starts in [0, r_{i-1})^2; starts outside that square are skipped).
DominationReport domination_check(const env::DisorderView& env, const polymer::Model& m,
                                  const MultiscaleSchedule& sched, double L, std::int64_t levels,
                                  const std::vector<Point>& starts, double hat_delta,
                                  const polymer::SweepOptions& opt = {});

}  // namespace polyext::multiscale
