#include "polyext/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "polyext/errors.hpp"

namespace polyext::stats {

Summary summarize(const std::vector<double>& x) {
    Summary s;
    s.n = std::int64_t(x.size());
    if (x.empty()) return s;
    double sum = 0.0;
    for (double v : x) sum += v;
    s.mean = sum / double(s.n);
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : x) ss += (v - s.mean) * (v - s.mean);
        s.variance = ss / double(s.n - 1);
        s.sd = std::sqrt(s.variance);
        s.stderr_mean = s.sd / std::sqrt(double(s.n));
    }
    return s;
}

double quantile(std::vector<double> x, double p) {
    if (x.empty()) throw ValidationError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
    std::sort(x.begin(), x.end());
    double h = (double(x.size()) - 1.0) * p;
    std::size_t lo = std::size_t(std::floor(h));
    std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - double(lo)) * (x[hi] - x[lo]);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw ValidationError("KS test on an empty sample");
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    double D = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = cdf(x[i]);
        D = std::max({D, double(i + 1) / n - F, F - double(i) / n});
    }
    double sn = std::sqrt(n);
    return {D, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * D)};
}

KsResult ks_normal(const std::vector<double>& x, double mean, double sd) {
    if (!(sd > 0.0)) throw ValidationError("KS against a normal law needs sd > 0");
    return ks_one_sample(x, [&](double v) { return normal_cdf((v - mean) / sd); });
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw ValidationError("KS test on an empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = double(x.size()), m = double(y.size());
    std::size_t i = 0, j = 0;
    double D = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        D = std::max(D, std::fabs(double(i) / n - double(j) / m));
    }
    double ne = std::sqrt(n * m / (n + m));
    return {D, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * D)};
}

MannKendall mann_kendall(const std::vector<double>& series) {
    const std::size_t n = series.size();
    MannKendall mk;
    if (n < 2) return mk;
    std::int64_t S = 0;
    bool ties = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = series[j] - series[i];
            S += (d > 0) - (d < 0);
            if (d == 0) ties = true;
        }
    mk.S = double(S);
    const double nn = double(n);
    if (!ties && n <= 10) {
        // Null law of S = C(n,2) - 2 * inversions; inversion counts are Mahonian.
        const std::size_t maxinv = n * (n - 1) / 2;
        std::vector<double> cnt(maxinv + 1, 0.0), nxt;
        cnt[0] = 1.0;
        for (std::size_t k = 2; k <= n; ++k) {
            nxt.assign(maxinv + 1, 0.0);
            for (std::size_t v = 0; v <= maxinv; ++v)
                if (cnt[v] != 0.0)
                    for (std::size_t add = 0; add < k && v + add <= maxinv; ++add) nxt[v + add] += cnt[v];
            cnt.swap(nxt);
        }
        double total = 0.0;
        for (double c : cnt) total += c;
        double ge = 0.0, le = 0.0;
        for (std::size_t inv = 0; inv <= maxinv; ++inv) {
            std::int64_t s = std::int64_t(maxinv) - 2 * std::int64_t(inv);
            if (s >= S) ge += cnt[inv];
            if (s <= S) le += cnt[inv];
        }
        mk.p_increasing = ge / total;
        mk.p_decreasing = le / total;
        mk.exact = true;
    }
    double var = nn * (nn - 1.0) * (2.0 * nn + 5.0) / 18.0;
    if (ties) {
        std::vector<double> s = series;
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j < n && s[j] == s[i]) ++j;
            double t = double(j - i);
            var -= t * (t - 1.0) * (2.0 * t + 5.0) / 18.0;
            i = j;
        }
    }
    if (var > 0.0) mk.z = (S > 0 ? double(S) - 1.0 : S < 0 ? double(S) + 1.0 : 0.0) / std::sqrt(var);
    if (!mk.exact) {
        mk.p_increasing = 1.0 - normal_cdf(mk.z);
        mk.p_decreasing = normal_cdf(mk.z);
    }
    return mk;
}

PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("paired t test needs samples of equal length");
    if (a.size() < 2) throw ValidationError("paired t test needs at least two pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    Summary s = summarize(d);
    PairedT r;
    r.n = s.n;
    r.mean_diff = s.mean;
    r.se = s.stderr_mean;
    if (r.se == 0.0) {
        r.t = s.mean > 0 ? std::numeric_limits<double>::infinity()
                         : s.mean < 0 ? -std::numeric_limits<double>::infinity() : 0.0;
        r.p_greater = s.mean > 0 ? 0.0 : 1.0;
        r.p_less = s.mean < 0 ? 0.0 : 1.0;
        r.p_two_sided = s.mean != 0 ? 0.0 : 1.0;
        return r;
    }
    r.t = s.mean / r.se;
    boost::math::students_t dist(double(s.n - 1));
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
    r.p_less = boost::math::cdf(dist, r.t);
    r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_greater, r.p_less));
    return r;
}

Regression linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw ValidationError("regression needs >= 3 paired points");
    Regression r;
    r.n = std::int64_t(x.size());
    Summary sx = summarize(x), sy = summarize(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - sx.mean) * (x[i] - sx.mean);
        sxy += (x[i] - sx.mean) * (y[i] - sy.mean);
        syy += (y[i] - sy.mean) * (y[i] - sy.mean);
    }
    if (sxx == 0.0) throw ValidationError("regression needs non-constant x");
    r.slope = sxy / sxx;
    r.intercept = sy.mean - r.slope * sx.mean;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - r.intercept - r.slope * x[i];
        sse += e * e;
    }
    r.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    r.slope_se = std::sqrt(sse / double(r.n - 2) / sxx);
    return r;
}

}  // namespace polyext::stats
