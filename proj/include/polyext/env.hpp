#pragma once

// Disorder field omega(i, x): a pure function of (seed, time, site).
//
// Pipeline (documented bit by bit in docs/disorder_generator.md):
//   counter = {uint32(x.x), uint32(x.y), low32(i), high32(i)}, key = {low32(seed), high32(seed)}
//   out     = Philox4x32-10(counter, key)
//   bits    = out[0] << 32 | out[1]
//   u       = ((bits >> 12) + 0.5) * 2^-52          in [2^-53, 1 - 2^-53], symmetric about 1/2
//   omega   = Phi^{-1}(u) by Wichura's AS241 (PPND16), |error| < 1e-15

#include <array>
#include <cstdint>

#include "polyext/lattice.hpp"

namespace polyext::env {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter ctr, Key key) noexcept;
double bits_to_uniform(std::uint64_t bits) noexcept;
double inverse_normal_cdf(double p) noexcept;

// Sites must satisfy -2^31 <= coordinate < 2^31.
inline constexpr std::int64_t kCoordMin = -(std::int64_t(1) << 31);
inline constexpr std::int64_t kCoordMax = (std::int64_t(1) << 31) - 1;

// Throws ValidationError for i < 1 or out-of-range coordinates.
double omega(std::uint64_t seed, std::int64_t i, Point x);

// theta_t applied to the field: view.omega(i, x) == omega(seed, offset + i, x).
class DisorderView {
public:
    explicit DisorderView(std::uint64_t seed, std::uint64_t offset = 0) : seed_(seed), offset_(offset) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t offset() const { return offset_; }

    double omega(std::int64_t i, Point x) const;

    // Fills out[0 .. x1-x0] with omega(i, (x0 + j, y)). Range checks happen once per row.
    void omega_row(std::int64_t i, std::int64_t y, std::int64_t x0, std::int64_t x1, double* out) const;
    // Same, but only every second site starting at x0: out[j] = omega(i, (x0 + 2j, y)).
    void omega_row_stride2(std::int64_t i, std::int64_t y, std::int64_t x0, std::int64_t count,
                           double* out) const;

    DisorderView shifted(std::uint64_t t) const;

private:
    std::uint64_t absolute_time(std::int64_t i) const;

    std::uint64_t seed_;
    std::uint64_t offset_;
};

DisorderView shifted(std::uint64_t seed, std::uint64_t t);

}  // namespace polyext::env
