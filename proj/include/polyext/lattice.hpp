#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <cstdlib>

namespace polyext {

struct Point {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr bool operator==(Point a, Point b) = default;
};

inline std::int64_t l1(Point p) { return std::llabs(p.x) + std::llabs(p.y); }
inline std::int64_t linf(Point p) { return std::max(std::llabs(p.x), std::llabs(p.y)); }
inline double l2(Point p) { return std::hypot(double(p.x), double(p.y)); }

// 0 or 1: reachable sites after n steps from the origin satisfy parity(d) == n mod 2.
inline int parity(Point p) { return int((p.x + p.y) & 1); }

// Inclusive axis-aligned rectangle [x0, x1] x [y0, y1]. Empty when x0 > x1 or y0 > y1.
struct Box {
    std::int64_t x0 = 0, x1 = -1, y0 = 0, y1 = -1;

    static Box centered(Point c, std::int64_t r) { return {c.x - r, c.x + r, c.y - r, c.y + r}; }
    static Box around(Point c) { return centered(c, 0); }

    bool empty() const { return x0 > x1 || y0 > y1; }
    std::int64_t width() const { return empty() ? 0 : x1 - x0 + 1; }
    std::int64_t height() const { return empty() ? 0 : y1 - y0 + 1; }
    std::int64_t area() const { return width() * height(); }
    bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool contains(const Box& b) const {
        return b.empty() || (b.x0 >= x0 && b.x1 <= x1 && b.y0 >= y0 && b.y1 <= y1);
    }
    Box expanded(std::int64_t m) const { return {x0 - m, x1 + m, y0 - m, y1 + m}; }
    Box intersect(const Box& b) const {
        return {std::max(x0, b.x0), std::min(x1, b.x1), std::max(y0, b.y0), std::min(y1, b.y1)};
    }
    Box hull(const Box& b) const {
        if (empty()) return b;
        if (b.empty()) return *this;
        return {std::min(x0, b.x0), std::max(x1, b.x1), std::min(y0, b.y0), std::max(y1, b.y1)};
    }
    Box hull(Point p) const { return hull(around(p)); }
    // Row-major index of p (x fastest).
    std::int64_t index(Point p) const { return (p.y - y0) * width() + (p.x - x0); }
    Point at(std::int64_t idx) const { return {x0 + idx % width(), y0 + idx / width()}; }

    friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace polyext
