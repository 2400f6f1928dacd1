#pragma once

// Slow, direct re-implementations used to check the library.

#include "hth/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

// True when every member of `edge` has an event in [s - delta, s].
inline bool window_complete(const std::vector<hth::Event>& events, const hth::Hyperedge& edge,
                            double delta, double s) {
    for (auto m : edge.members()) {
        bool seen = false;
        for (const auto& e : events) {
            if (e.node == m && e.time >= s - delta && e.time <= s) {
                seen = true;
                break;
            }
        }
        if (!seen) return false;
    }
    return true;
}

// Brute-force scan over member event times.
inline std::vector<double> completions(const std::vector<hth::Event>& events,
                                       const hth::Hyperedge& edge, double delta) {
    std::vector<double> out;
    for (const auto& e : events) {
        if (!edge.contains(e.node)) continue;
        if (window_complete(events, edge, delta, e.time)) out.push_back(e.time);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Re-derives the anchor from scratch for every query.
inline std::optional<double> anchor(const std::vector<hth::Event>& events, const hth::Hyperedge& edge,
                                    double delta, double t) {
    std::optional<double> best;
    for (const auto& e : events) {
        if (!(e.time < t) || !edge.contains(e.node)) continue;
        if (window_complete(events, edge, delta, e.time) && (!best || e.time > *best)) best = e.time;
    }
    return best;
}

inline double intensity(const hth::ModelParams& p, const std::vector<hth::Event>& events, std::size_t n,
                        double t) {
    double v = p.mu[n];
    for (const auto& e : events) {
        if (e.time < t) v += p.alpha(n, e.node) * std::exp(-p.beta * (t - e.time));
    }
    for (const auto& h : p.hyperedges) {
        if (!h.edge.contains(n)) continue;
        if (auto a = anchor(events, h.edge, p.delta, t)) v += h.weight * std::exp(-p.beta * (t - *a));
    }
    return v;
}

// Adaptive Gauss-Kronrod over [a, b] for a smooth integrand.
template <class F>
double integrate(F f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

// Integral of the intensity of node n over [0, T], split at every event
// (all jumps of the integrand happen there).
inline double compensator(const hth::ModelParams& p, const std::vector<hth::Event>& events, std::size_t n,
                          double horizon) {
    std::vector<double> cuts{0.0};
    for (const auto& e : events) {
        if (e.time < horizon) cuts.push_back(e.time);
    }
    cuts.push_back(horizon);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        if (!(b > a)) continue;
        // the integrand is right-continuous; evaluating strictly inside is enough
        total += integrate([&](double t) { return intensity(p, events, n, std::clamp(t, a + 1e-15, b)); }, a, b);
    }
    return total;
}

inline double log_likelihood(const hth::ModelParams& p, const hth::EventSequence& seq) {
    double ll = 0.0;
    for (const auto& e : seq.events()) ll += std::log(intensity(p, seq.events(), e.node, e.time));
    for (std::size_t n = 0; n < p.num_nodes(); ++n) ll -= compensator(p, seq.events(), n, seq.horizon());
    return ll;
}

template <class F>
double golden_section_max(F f, double lo, double hi, double tol = 1e-12) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Positive stable variate with Laplace transform exp(-s^a), 0 < a < 1 (Kanter).
inline double positive_stable(double a, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    std::exponential_distribution<double> ex(1.0);
    const double u = ang(gen);
    const double w = ex(gen);
    return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) * std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
}

// Marshall-Olkin sampler for the Gumbel copula with parameter theta >= 1.
inline std::vector<std::pair<double, double>> gumbel_sample(double theta, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> ex(1.0);
    std::vector<std::pair<double, double>> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double v = positive_stable(1.0 / theta, gen);
        const double x = ex(gen), y = ex(gen);
        out.emplace_back(std::exp(-std::pow(x / v, 1.0 / theta)), std::exp(-std::pow(y / v, 1.0 / theta)));
    }
    return out;
}

inline hth::ModelParams canonical() {
    hth::ModelParams p;
    p.mu = {0.6, 0.6, 0.3};
    p.alpha = hth::Matrix(3, 3, 0.0);
    p.alpha(2, 0) = 0.4;
    p.hyperedges = {{hth::Hyperedge({0, 1}), 0.4}};
    p.beta = 1.0;
    p.delta = 0.5;
    return p;
}

}  // namespace oracle
