#pragma once

// Partition functions of the directed polymer by exact transfer-matrix sweeps.
//
// Z_{s,t}(x) = E_x[exp(sum_{i=s}^{t} beta*omega(i, S_i) - beta^2/2)], where the walk
// sits at x at time s-1. Sweeps keep the field in the linear domain and fold one
// global renormalization per time step into a log offset.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyext/env.hpp"
#include "polyext/lattice.hpp"

namespace polyext::polymer {

// Inverse temperature plus the N that sets the window policy's log N.
struct Model {
    double beta = 0.0;
    std::int64_t N = 1;

    // beta = beta_N(beta_hat, N).
    static Model subcritical(double beta_hat, std::int64_t N);
};

// Sites with linf(S - center) > radius are forbidden.
struct WallSpec {
    Point center;
    double radius = 0.0;

    Box box() const;
};

enum class WallMode { origin, start };

const char* to_string(WallMode m);
WallMode wall_mode_from_string(const std::string& s);

// Margin around the start set: min(ceil(c * sqrt(steps) * (1 + log N)), steps).
// c <= 0 means the full light cone (exact, no truncation).
struct WindowPolicy {
    double c = 1.0;

    std::int64_t margin(std::int64_t steps, std::int64_t N) const;
    static WindowPolicy exact() { return {0.0}; }
};

struct SweepOptions {
    WindowPolicy policy;
    std::optional<WallSpec> wall;
    // Optional fixed computational window; must contain the policy window.
    std::optional<Box> window;
    // Upper bound on sites held by one sweep buffer.
    std::int64_t max_sites = std::int64_t(1) << 27;
};

// True value at p is values[box.index(p)] * exp(log_offset); zero means absent.
struct ScaledField {
    Box box;
    std::vector<double> values;
    double log_offset = 0.0;

    double value(Point p) const;      // 0 outside box
    double log_value(Point p) const;  // -inf when absent
};

// Log-partition values over a window. stored + log_offset is the log of the true value;
// absent sites (unreachable or outside any admissible path) hold -inf.
struct LogWeightField {
    Box window;
    std::vector<double> values;
    double log_offset = 0.0;
    std::int64_t time_lo = 0, time_hi = 0;

    bool present(Point p) const;
    double stored(Point p) const;
    double log_value(Point p) const;
    double max_stored() const;
};

LogWeightField to_log_field(const ScaledField& f, std::int64_t time_lo, std::int64_t time_hi);

// mu_t(x, .) over window; probs sum to 1.
struct EndpointMeasure {
    Point origin;
    std::int64_t time = 0;
    Box window;
    std::vector<double> probs;
    double log_Z = 0.0;  // log Z_t(origin), the normalization

    double prob(Point y) const;
};

// Scaled field of Z_{s,t}(x) (or the walled version) for x in targets; box == targets.
// With a terminal field f the sweep computes E_x[exp(...) f(S_t)] instead.
ScaledField backward_sweep_scaled(const env::DisorderView& env, const Model& m, std::int64_t s, std::int64_t t,
                                  const Box& targets, const SweepOptions& opt = {},
                                  const ScaledField* terminal = nullptr);

LogWeightField backward_sweep(const env::DisorderView& env, const Model& m, std::int64_t s, std::int64_t t,
                              const Box& targets, const SweepOptions& opt = {});

// Forward sweep from x: v_0 = delta_x, v_n(y) = e^{beta*omega(n,y) - beta^2/2} (1/4) sum_{z~y} v_{n-1}(z),
// so v_n(y) = p_n(x,y) Z_n(x,y). Advances one step at a time.
class ForwardSweep {
public:
    ForwardSweep(const env::DisorderView& env, const Model& m, Point x, std::int64_t t_max,
                 const SweepOptions& opt = {});
    ~ForwardSweep();
    ForwardSweep(const ForwardSweep&) = delete;
    ForwardSweep& operator=(const ForwardSweep&) = delete;

    std::int64_t time() const { return n_; }
    void advance_to(std::int64_t n);

    double log_Z() const;                  // log sum_y v_n(y)
    double log_weight(Point y) const;      // log v_n(y); -inf if absent
    bool in_window(Point y) const;         // y lies in the current computational window
    EndpointMeasure measure() const;
    ScaledField weights() const;           // v_n over the current region

private:
    void step();

    env::DisorderView env_;
    Model model_;
    Point x_;
    std::int64_t t_max_, margin_, n_ = 0;
    std::optional<Box> wall_;
    Box full_;                    // buffer extent without halo
    std::int64_t stride_;
    std::vector<double> cur_, prev_;
    double log_offset_ = 0.0;
    double pending_scale_ = 1.0;
    std::vector<double> om_, ex_;
};

EndpointMeasure forward_endpoint(const env::DisorderView& env, const Model& m, Point x, std::int64_t t,
                                 const SweepOptions& opt = {});

// log Z_{t_j}(x) for each requested time (nondecreasing, >= 0) from one forward pass.
std::vector<double> forward_log_Z(const env::DisorderView& env, const Model& m, Point x,
                                  const std::vector<std::int64_t>& times, const SweepOptions& opt = {});

struct PointToPoint {
    double value = 0.0;  // p_n(x,y) Z_n(x,y)
    bool parity_ok = false;
};

PointToPoint point_to_point(const env::DisorderView& env, const Model& m, Point x, Point y, std::int64_t n,
                            const SweepOptions& opt = {});

// Lattice site [x sqrt(N)] for a macroscopic point, rounding each coordinate toward zero.
Point macroscopic_site(double x1, double x2, std::int64_t N);

// phi_N(x) = sqrt(log N) log Z_N([x sqrt(N)]) for each grid point, from one backward sweep.
std::vector<double> phi_field(const env::DisorderView& env, std::int64_t N, double beta_hat,
                              const std::vector<std::pair<double, double>>& grid, const SweepOptions& opt = {});

// Flush-to-zero / denormals-are-zero for the lifetime of the guard (x86 only, no-op elsewhere).
class DenormalGuard {
public:
    DenormalGuard();
    ~DenormalGuard();
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;

private:
    unsigned saved_ = 0;
};

}  // namespace polyext::polymer
