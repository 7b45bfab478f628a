#pragma once

// Exact small-scale ground truth: replica moments by path enumeration and by the
// difference-walk DP, the collision-tilted torus operator and its Perron eigenvalue,
// and point-to-point moment tables.

#include <cstdint>
#include <string>
#include <vector>

#include "polyext/lattice.hpp"

namespace polyext::oracles {

// q walks start at `starts` at time s-1 and collide at times s..t.
struct ReplicaConfig {
    std::vector<Point> starts;
    std::int64_t s = 1, t = 1;
    double beta = 0.0;
    std::string label;

    std::int64_t q() const { return std::int64_t(starts.size()); }
    std::int64_t horizon() const { return t - s + 1; }
    void validate() const;
};

// E^{(q)}[exp(beta^2 psi)] by enumerating all 4^{q T} step sequences. Requires q T <= 12.
double exact_joint_moment(const ReplicaConfig& cfg);

struct DifferenceWalkResult {
    double value = 0.0;
    double escaped = 0.0;      // mass that left the window (counted without further collisions)
    std::int64_t radius = 0;   // window half-width in halved rotated coordinates
};

// q = 2 only. The difference of two walks, in halved rotated coordinates, moves by
// independent {-1, 0, 1} steps with weights 1/4, 1/2, 1/4 per coordinate. radius <= 0 means exact.
DifferenceWalkResult difference_walk_moment(const ReplicaConfig& cfg, std::int64_t radius = 0);

// Window half-width ceil(c sqrt(2T)(1 + log T) / 4) used by the windowed DP.
std::int64_t difference_walk_radius(std::int64_t horizon, double c);

struct McEstimate {
    double estimate = 0.0;
    double stderr_mean = 0.0;
    std::int64_t replicas = 0;
};

// Disorder average of prod_i Z_{s,t}(x_i) over independent environments.
McEstimate mc_joint_moment(const ReplicaConfig& cfg, std::int64_t replicas, std::uint64_t seed, int threads = 1);

struct SecondMomentPoint {
    std::int64_t N = 0;
    double beta = 0.0;
    double value = 0.0;          // E[Z_N^2] at the working window
    double doubled = 0.0;        // same with the window doubled
    double certified_error = 0.0;
    std::int64_t radius = 0;
    double limit = 0.0;          // 1 / (1 - beta_hat^2)
};

// Exact E[Z_N^2] for each N, certified by doubling the window. c sets the window constant.
std::vector<SecondMomentPoint> second_moment_curve(double beta_hat, const std::vector<std::int64_t>& Ns,
                                                   double c = 2.0);

// Collision-tilted operator Q(x, y) = P^{(p)}(x, y) exp(beta^2 V(y)) on p walks on a torus.
struct TorusOperator {
    std::int64_t side = 0;
    std::int64_t p = 2;
    double beta = 0.0;

    std::int64_t states() const;
    void validate() const;
};

// Smallest even side >= K sqrt(N), at least 4. Even so that parity classes are preserved.
std::int64_t torus_side(std::int64_t N, double K = 4.0);

struct PerronResult {
    double lambda = 0.0;
    std::vector<double> phi;         // normalized to max 1 on the support class, 0 off it
    std::int64_t iterations = 0;
    double residual = 0.0;           // ||Q phi - lambda phi||_inf / ||phi||_inf on the class
    double stochastic_residual = 0.0;  // max_x |sum_y q(x, y) - 1|
    double reversibility_residual = 0.0;
    double phi_ratio = 0.0;          // max phi / min phi on the class
};

// Power iteration started from 1 on the class of tuples with equal parity. The top
// eigenvalue is estimated by the symmetrized Rayleigh quotient; it stops when the change is below tol.
PerronResult perron(const TorusOperator& op, double tol = 1e-13, std::int64_t max_iter = 2000000);

// p = 2 reduced to the difference walk: g -> P P (exp(beta^2 1{d = 0}) g) on the even sublattice.
PerronResult perron_difference(std::int64_t side, double beta, double tol = 1e-13,
                               std::int64_t max_iter = 2000000);

struct PtopRow {
    std::int64_t N = 0;
    Point y;                 // endpoint maximizing the moment among the sampled ones
    double scaled_moment = 0.0;   // N^p E[(Z_N(0,y) p_N(0,y))^p]
    double stderr_scaled = 0.0;
    double exact_p1 = 0.0;   // N p_N(0, y), only for p = 1
};

struct PtopTable {
    std::int64_t p = 1;
    std::vector<PtopRow> rows;
    double mk_p_increasing = 1.0;
    bool bounded = true;      // no increasing trend at 5%
};

// Sampled endpoints: the mode and displacements of about 0.5 and 1 standard deviation along each axis.
PtopTable ptop_moment_trend(double beta_hat, std::int64_t p, const std::vector<std::int64_t>& Ns,
                            std::int64_t replicas, std::uint64_t seed, int threads = 1);

}  // namespace polyext::oracles
