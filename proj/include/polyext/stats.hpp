#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace polyext::stats {

struct Summary {
    std::int64_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased; 0 when n < 2
    double sd = 0.0;
    double stderr_mean = 0.0;
    double min = 0.0, max = 0.0;
};

// Two-pass, in index order.
Summary summarize(const std::vector<double>& x);

// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> x, double p);

double normal_cdf(double z);

struct KsResult {
    double D = 0.0;
    double p_value = 1.0;  // asymptotic Kolmogorov distribution
};

// Kolmogorov tail P(K > lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_tail(double lambda);

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_normal(const std::vector<double>& x, double mean, double sd);
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y);

struct MannKendall {
    double S = 0.0;
    double z = 0.0;
    double p_increasing = 1.0;  // one-sided, H1: upward trend
    double p_decreasing = 1.0;
    bool exact = false;         // exact permutation null (n <= 10, no ties)
};

MannKendall mann_kendall(const std::vector<double>& series);

struct PairedT {
    std::int64_t n = 0;
    double mean_diff = 0.0;  // mean of a - b
    double se = 0.0;
    double t = 0.0;
    double p_greater = 1.0;  // H1: mean(a - b) > 0
    double p_less = 1.0;     // H1: mean(a - b) < 0
    double p_two_sided = 1.0;
};

// Paired t test on a[i] - b[i]. A zero-variance difference gives p = 0 or 1 by the sign of the mean.
PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b);

struct Regression {
    double slope = 0.0, intercept = 0.0, r2 = 0.0, slope_se = 0.0;
    std::int64_t n = 0;
};

Regression linear_regression(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace polyext::stats
