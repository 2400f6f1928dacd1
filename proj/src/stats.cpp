#include "hth/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hth::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance needs at least 2 values");
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

double chi_squared_quantile(double p, double df) {
    return boost::math::quantile(boost::math::chi_squared(df), p);
}

double students_t_sf(double t, double df) {
    return boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;  // series converges slowly; the tail mass is 1 to double precision
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw std::invalid_argument("KS test needs samples");
    if (!(rate > 0.0)) throw std::invalid_argument("KS test rate must be > 0");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = -std::expm1(-rate * std::max(samples[i], 0.0));
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

WelchResult welch_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_test needs >= 2 per group");
    for (double x : a) {
        if (!std::isfinite(x)) throw std::invalid_argument("welch_test: non-finite value");
    }
    for (double x : b) {
        if (!std::isfinite(x)) throw std::invalid_argument("welch_test: non-finite value");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = variance(a) / na;
    const double vb = variance(b) / nb;
    const double se2 = va + vb;
    if (se2 == 0.0) {
        if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
        const double inf = std::numeric_limits<double>::infinity();
        return {ma > mb ? inf : -inf, na + nb - 2.0, 0.0};
    }
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = std::min(1.0, 2.0 * students_t_sf(std::abs(r.t), r.df));
    return r;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least_squares needs >= 2 paired points");
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: x has no spread");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace hth::stats
