#pragma once

#include <cstdint>
#include <vector>

#include "polyext/lattice.hpp"

namespace polyext::walk {

inline constexpr std::int64_t kDefaultMaxSteps = 4096;

// Exact n-step distribution of the simple random walk on Z^2.
//
// Built by iterated nearest-neighbour averaging in the rotated coordinates
// u = d.x + d.y, v = d.x - d.y, where the planar walk factors into two independent
// +-1 walks. Only the two 1-D tables are stored; prob() multiplies them.
class KernelTable {
public:
    std::int64_t n() const { return n_; }
    double prob(Point d) const;
    // Probability that one rotated coordinate equals u (u = -n, -n+2, ..., n).
    double line_prob(std::int64_t u) const;
    // Dense (2n+1)^2 table, row-major over Box::centered({0,0}, n). For small n only.
    std::vector<double> dense() const;
    double total() const;

private:
    friend KernelTable kernel(std::int64_t, std::int64_t);
    std::int64_t n_ = 0;
    std::vector<double> line_;  // line_[j] = P(u = 2j - n)
};

// Throws ValidationError unless 1 <= n <= n_max.
KernelTable kernel(std::int64_t n, std::int64_t n_max = kDefaultMaxSteps);

// p_n(0, d) without building a table (log-binomials).
double transition_prob(Point d, std::int64_t n);

// P(S_{2k} = 0) = (C(2k, k) / 4^k)^2.
double return_prob(std::int64_t k);

// R_N = sum_{k=1}^N P(S_{2k} = 0), the expected overlap of two independent walks up to N.
double overlap_R(std::int64_t N);

// beta_N = beta_hat / sqrt(R_N). Requires 0 < beta_hat < 1.
double beta_N(double beta_hat, std::int64_t N);

}  // namespace polyext::walk
