#include "polyext/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polyext/errors.hpp"

namespace polyext::env {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

// AS241 PPND16 coefficients, highest degree last.
constexpr double kA[8] = {3.387132872796366608,   133.14166789178437745, 1971.5909503065514427,
                          13731.693765509461125,  45921.953931549871457, 67265.770927008700853,
                          33430.575583588128105,  2509.0809287301226727};
constexpr double kB[8] = {1.0,                    42.313330701600911252, 687.1870074920579083,
                          5394.1960214247511077,  21213.794301586595867, 39307.89580009271061,
                          28729.085735721942674,  5226.495278852545925};
constexpr double kC[8] = {1.42343711074968357734,  4.6303378461565452959,   5.7694972214606914055,
                          3.64784832476320460504,  1.27045825245236838258,  0.24178072517745061177,
                          0.0227238449892691845833, 7.7454501427834140764e-4};
constexpr double kD[8] = {1.0,                      2.05319162663775882187,  1.6763848301838038494,
                          0.68976733498510000455,   0.14810397642748007459,  0.0151986665636164571966,
                          5.475938084995344946e-4,  1.05075007164441684324e-9};
constexpr double kE[8] = {6.6579046435011037772,    5.4637849111641143699,   1.7848265399172913358,
                          0.29656057182850489123,   0.026532189526576123093, 0.0012426609473880784386,
                          2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[8] = {1.0,                      0.59983220655588793769,  0.13692988092273580531,
                          0.0148753612908506148525, 7.868691311456132591e-4, 1.8463183175100546818e-5,
                          1.4215117583164458887e-7, 2.04426310338993978564e-15};

inline double horner(const double* c, double r) {
    double acc = c[7];
    for (int j = 6; j >= 0; --j) acc = acc * r + c[j];
    return acc;
}

inline double tail_value(double p, double q) {
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = horner(kC, r) / horner(kD, r);
    } else {
        r -= 5.0;
        v = horner(kE, r) / horner(kF, r);
    }
    return q < 0 ? -v : v;
}

void check_coord(std::int64_t v) {
    if (v < kCoordMin || v > kCoordMax)
        throw ValidationError("lattice coordinate " + std::to_string(v) + " outside [-2^31, 2^31)");
}

// Batched pipeline over n counters that differ only in the first word.
constexpr int kChunk = 64;

void omega_batch(const std::uint32_t* c0, int n, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                 Key key, double* out) {
    std::uint32_t a[kChunk], b[kChunk], c[kChunk], d[kChunk];
    for (int j = 0; j < n; ++j) {
        a[j] = c0[j];
        b[j] = c1;
        c[j] = c2;
        d[j] = c3;
    }
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        for (int j = 0; j < n; ++j) {
            std::uint64_t p0 = std::uint64_t(kM0) * a[j];
            std::uint64_t p1 = std::uint64_t(kM1) * c[j];
            std::uint32_t na = std::uint32_t(p1 >> 32) ^ b[j] ^ k0;
            std::uint32_t nb = std::uint32_t(p1);
            std::uint32_t nc = std::uint32_t(p0 >> 32) ^ d[j] ^ k1;
            std::uint32_t nd = std::uint32_t(p0);
            a[j] = na;
            b[j] = nb;
            c[j] = nc;
            d[j] = nd;
        }
        k0 += kW0;
        k1 += kW1;
    }
    double u[kChunk];
    for (int j = 0; j < n; ++j) {
        std::uint64_t bits = (std::uint64_t(a[j]) << 32) | b[j];
        u[j] = (double(bits >> 12) + 0.5) * 0x1p-52;
    }
    double v[kChunk];
    for (int j = 0; j < n; ++j) {
        double q = u[j] - 0.5;
        double r = 0.180625 - q * q;
        v[j] = q * horner(kA, r) / horner(kB, r);
    }
    // Tail lanes (about 15%) are compacted without branches, then finished in scalar code.
    int idx[kChunk];
    int tails = 0;
    for (int j = 0; j < n; ++j) {
        idx[tails] = j;
        tails += std::fabs(u[j] - 0.5) > 0.425;
    }
    for (int m = 0; m < tails; ++m) {
        int j = idx[m];
        v[j] = tail_value(u[j], u[j] - 0.5);
    }
    std::copy(v, v + n, out);
}

}  // namespace

Counter philox4x32_10(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
        std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

double bits_to_uniform(std::uint64_t bits) noexcept { return (double(bits >> 12) + 0.5) * 0x1p-52; }

double inverse_normal_cdf(double p) noexcept {
    double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q * horner(kA, r) / horner(kB, r);
    }
    return tail_value(p, q);
}

double omega(std::uint64_t seed, std::int64_t i, Point x) {
    if (i < 1) throw ValidationError("time index must be >= 1, got " + std::to_string(i));
    check_coord(x.x);
    check_coord(x.y);
    std::uint64_t t = std::uint64_t(i);
    Counter ctr{std::uint32_t(x.x), std::uint32_t(x.y), std::uint32_t(t), std::uint32_t(t >> 32)};
    Counter out = philox4x32_10(ctr, {std::uint32_t(seed), std::uint32_t(seed >> 32)});
    return inverse_normal_cdf(bits_to_uniform((std::uint64_t(out[0]) << 32) | out[1]));
}

std::uint64_t DisorderView::absolute_time(std::int64_t i) const {
    if (i < 1) throw ValidationError("time index must be >= 1, got " + std::to_string(i));
    std::uint64_t t = offset_ + std::uint64_t(i);
    if (t < offset_) throw ValidationError("time index overflows 64 bits");
    return t;
}

double DisorderView::omega(std::int64_t i, Point x) const {
    std::uint64_t t = absolute_time(i);
    check_coord(x.x);
    check_coord(x.y);
    Counter ctr{std::uint32_t(x.x), std::uint32_t(x.y), std::uint32_t(t), std::uint32_t(t >> 32)};
    Counter out = philox4x32_10(ctr, {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
    return inverse_normal_cdf(bits_to_uniform((std::uint64_t(out[0]) << 32) | out[1]));
}

void DisorderView::omega_row(std::int64_t i, std::int64_t y, std::int64_t x0, std::int64_t x1,
                             double* out) const {
    if (x1 < x0) return;
    std::uint64_t t = absolute_time(i);
    check_coord(y);
    check_coord(x0);
    check_coord(x1);
    Key key{std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
    std::uint32_t c0[kChunk];
    for (std::int64_t start = x0; start <= x1; start += kChunk) {
        int n = int(std::min<std::int64_t>(kChunk, x1 - start + 1));
        for (int j = 0; j < n; ++j) c0[j] = std::uint32_t(start + j);
        omega_batch(c0, n, std::uint32_t(y), std::uint32_t(t), std::uint32_t(t >> 32), key, out);
        out += n;
    }
}

void DisorderView::omega_row_stride2(std::int64_t i, std::int64_t y, std::int64_t x0, std::int64_t count,
                                     double* out) const {
    if (count <= 0) return;
    std::uint64_t t = absolute_time(i);
    check_coord(y);
    check_coord(x0);
    check_coord(x0 + 2 * (count - 1));
    Key key{std::uint32_t(seed_), std::uint32_t(seed_ >> 32)};
    std::uint32_t c0[kChunk];
    for (std::int64_t done = 0; done < count; done += kChunk) {
        int n = int(std::min<std::int64_t>(kChunk, count - done));
        for (int j = 0; j < n; ++j) c0[j] = std::uint32_t(x0 + 2 * (done + j));
        omega_batch(c0, n, std::uint32_t(y), std::uint32_t(t), std::uint32_t(t >> 32), key, out);
        out += n;
    }
}

DisorderView DisorderView::shifted(std::uint64_t t) const {
    std::uint64_t o = offset_ + t;
    if (o < offset_) throw ValidationError("time shift overflows 64 bits");
    return DisorderView(seed_, o);
}

DisorderView shifted(std::uint64_t seed, std::uint64_t t) { return DisorderView(seed, t); }

}  // namespace polyext::env
