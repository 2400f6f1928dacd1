#pragma once

#include <span>
#include <vector>

namespace hth::stats {

[[nodiscard]] double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance.
[[nodiscard]] double variance(std::span<const double> xs);
[[nodiscard]] double stddev(std::span<const double> xs);
[[nodiscard]] double median(std::vector<double> xs);

[[nodiscard]] double chi_squared_quantile(double p, double df);
[[nodiscard]] double students_t_sf(double t, double df);
[[nodiscard]] double normal_quantile(double p);

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
};

/// One-sample Kolmogorov-Smirnov test against Exp(rate). The p-value uses
/// the asymptotic Kolmogorov distribution with Stephens' small-sample
/// correction.
[[nodiscard]] KsResult ks_test_exponential(std::vector<double> samples, double rate);

/// P(K > x) for the limiting Kolmogorov distribution.
[[nodiscard]] double kolmogorov_sf(double x);

struct WelchResult {
    double t{0.0};
    double df{0.0};
    double p{1.0};
};

/// Two-sided Welch unequal-variance t-test of mean(a) - mean(b).
[[nodiscard]] WelchResult welch_test(std::span<const double> a, std::span<const double> b);

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
};

[[nodiscard]] LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace hth::stats
