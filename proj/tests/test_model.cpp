#include "hth/model.hpp"
#include "hth/simulator.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hth;

namespace {

EventSequence random_sequence(std::mt19937_64& gen, std::size_t n_nodes, std::size_t n_events, double horizon) {
    std::uniform_real_distribution<double> t(0.0, horizon);
    std::uniform_int_distribution<std::size_t> node(0, n_nodes - 1);
    std::vector<Event> ev;
    for (std::size_t i = 0; i < n_events; ++i) ev.push_back({t(gen), node(gen)});
    return EventSequence(std::move(ev), n_nodes, horizon);
}

// Integral of the anchored kernel, evaluated segment by segment.
double quadrature_compensator(const std::vector<double>& c, double beta, double horizon) {
    double total = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double end = k + 1 < c.size() ? c[k + 1] : horizon;
        total += oracle::integrate([&](double t) { return std::exp(-beta * (t - c[k])); }, c[k], end);
    }
    return total;
}

}  // namespace

TEST(Kernel, Examples) {
    EXPECT_DOUBLE_EQ(kernel(0.0, 2.0), 1.0);
    EXPECT_NEAR(kernel(std::log(2.0), 1.0), 0.5, 1e-15);
    EXPECT_NEAR(kernel(0.3, 4.0), std::exp(-1.2), 1e-15);
    EXPECT_NEAR(kernel(0.3, 4.0), 0.3012, 1e-4);
}

TEST(Kernel, DomainErrors) {
    EXPECT_THROW((void)kernel(-0.1, 1.0), std::invalid_argument);
    EXPECT_THROW((void)kernel(0.1, 0.0), std::invalid_argument);
}

TEST(Completions, Examples) {
    const EventSequence a({{0.1, 0}, {0.3, 1}}, 2, 1.0);
    EXPECT_EQ(compute_completions(a, Hyperedge({0, 1}), 0.5), std::vector<double>{0.3});

    const EventSequence b({{0.1, 0}, {0.9, 1}}, 2, 1.0);
    EXPECT_TRUE(compute_completions(b, Hyperedge({0, 1}), 0.5).empty());

    const EventSequence c({{0.1, 0}, {0.2, 1}, {0.4, 2}, {0.6, 0}}, 3, 1.0);
    const std::vector<double> expected{0.4, 0.6};
    EXPECT_EQ(compute_completions(c, Hyperedge({0, 1, 2}), 0.5), expected);
    EXPECT_EQ(oracle::completions(c.events(), Hyperedge({0, 1, 2}), 0.5), expected);
}

TEST(Completions, ClosedWindowBoundary) {
    const EventSequence s({{0.0, 0}, {0.5, 1}}, 2, 1.0);
    EXPECT_EQ(compute_completions(s, Hyperedge({0, 1}), 0.5), std::vector<double>{0.5});
}

TEST(Completions, DomainErrors) {
    const EventSequence s({{0.1, 0}}, 2, 1.0);
    EXPECT_THROW(Hyperedge({0}), std::invalid_argument);
    EXPECT_THROW((void)compute_completions(s, Hyperedge({0, 2}), 0.5), std::invalid_argument);
    EXPECT_THROW((void)compute_completions(s, Hyperedge({0, 1}), 0.0), std::invalid_argument);
}

TEST(Completions, MatchesBruteForceOnRandomSequences) {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + trial % 5;  // 2..6 nodes
        const auto seq = random_sequence(gen, n, 20 + (trial * 37) % 181, 30.0);
        std::vector<NodeId> members;
        for (NodeId v = 0; v < n; ++v) {
            if (gen() % 2 == 0) members.push_back(v);
        }
        while (members.size() < 2) {
            members = {0, n - 1};
        }
        const Hyperedge e(members);
        const double delta = 0.2 + 0.3 * (trial % 7);
        EXPECT_EQ(compute_completions(seq, e, delta), oracle::completions(seq.events(), e, delta))
            << "trial " << trial;
    }
}

TEST(Anchor, Examples) {
    const std::vector<double> one{0.3};
    EXPECT_FALSE(anchor_at(one, 0.2).has_value());
    EXPECT_DOUBLE_EQ(*anchor_at(one, 1.0), 0.3);
    EXPECT_FALSE(anchor_at(one, 0.3).has_value());
    const std::vector<double> two{0.4, 0.6};
    EXPECT_DOUBLE_EQ(*anchor_at(two, 0.65), 0.6);
}

TEST(Anchor, MonotoneInQueryTime) {
    const std::vector<double> c{0.5, 1.1, 2.0, 3.7};
    double prev = -1.0;
    for (double t = 0.0; t < 5.0; t += 0.01) {
        const auto a = anchor_at(c, t);
        const double v = a ? *a : -1.0;
        EXPECT_GE(v, prev);
        if (a) {
            EXPECT_LT(*a, t);
        }
        prev = v;
    }
}

TEST(Intensity, Examples) {
    const auto p0 = ModelParams::poisson({0.5});
    const EventSequence empty({}, 1, 10.0);
    EXPECT_DOUBLE_EQ(intensity(p0, empty, build_timeline(empty, {}, 0.5), 0, 3.0), 0.5);

    auto p = ModelParams::poisson({0.5, 0.0});
    p.alpha(0, 1) = 0.4;
    const double t = 2.0;
    const EventSequence s({{t - std::log(2.0), 1}}, 2, 10.0);
    EXPECT_NEAR(intensity(p, s, build_timeline(s, {}, 0.5), 0, t), 0.7, 1e-12);
    EXPECT_THROW((void)intensity(p, s, build_timeline(s, {}, 0.5), 2, t), std::invalid_argument);
}

TEST(Intensity, MatchesNaiveOracleOnCanonicalSystem) {
    const auto p = oracle::canonical();
    const auto sim = simulate({p, 40.0, 11, 10000});
    const auto tl = build_timeline(sim.sequence, p.edges(), p.delta);
    ASSERT_FALSE(tl.completions[0].empty());
    const double first_completion = tl.completions[0].front();
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(first_completion, 40.0);
    for (int k = 0; k < 40; ++k) {
        const double t = k == 0 ? first_completion + 1e-3 : u(gen);
        for (NodeId n = 0; n < 3; ++n) {
            EXPECT_NEAR(intensity(p, sim.sequence, tl, n, t), oracle::intensity(p, sim.sequence.events(), n, t),
                        1e-12);
        }
    }
}

TEST(Compensator, Examples) {
    const std::vector<double> none;
    EXPECT_EQ(piecewise_compensator(none, 1.0, 10.0), 0.0);
    EXPECT_EQ(naive_compensator(none, 1.0, 10.0), 0.0);

    const std::vector<double> zero{0.0};
    EXPECT_NEAR(piecewise_compensator(zero, 1.0, 10.0), 1.0 - std::exp(-10.0), 1e-15);
    EXPECT_DOUBLE_EQ(naive_compensator(zero, 1.0, 10.0), piecewise_compensator(zero, 1.0, 10.0));

    const std::vector<double> two{1.0, 2.5};
    const double pw = piecewise_compensator(two, 2.0, 4.0);
    EXPECT_NEAR(pw, 0.5 * (1 - std::exp(-3.0)) + 0.5 * (1 - std::exp(-3.0)), 1e-15);
    EXPECT_NEAR(pw, 0.9502, 1e-4);
    EXPECT_NEAR(pw, quadrature_compensator(two, 2.0, 4.0), 1e-12);
    const double nv = naive_compensator(two, 2.0, 4.0);
    EXPECT_NEAR(nv, 0.5 * (1 - std::exp(-6.0)) + 0.5 * (1 - std::exp(-3.0)), 1e-15);
    EXPECT_NEAR(nv, 0.9739, 1e-4);
    EXPECT_GT(nv, pw);
}

TEST(Compensator, DomainErrors) {
    const std::vector<double> late{1.0, 5.0};
    EXPECT_THROW((void)piecewise_compensator(late, 1.0, 4.0), std::invalid_argument);
    const std::vector<double> unsorted{2.0, 1.0};
    EXPECT_THROW((void)naive_compensator(unsorted, 1.0, 4.0), std::invalid_argument);
}

TEST(Compensator, PiecewiseMatchesQuadratureOnRandomSets) {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const double horizon = 5.0 + 20.0 * std::uniform_real_distribution<double>(0, 1)(gen);
        const double beta = std::exp(std::uniform_real_distribution<double>(std::log(0.2), std::log(10.0))(gen));
        const std::size_t m = gen() % 30;
        std::uniform_real_distribution<double> u(0.0, horizon);
        std::vector<double> c(m);
        for (auto& x : c) x = u(gen);
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        const double pw = piecewise_compensator(c, beta, horizon);
        const double q = quadrature_compensator(c, beta, horizon);
        if (c.empty()) {
            EXPECT_EQ(pw, 0.0);
        } else {
            EXPECT_NEAR(pw, q, 1e-6 * q) << "trial " << trial;
        }
        const double nv = naive_compensator(c, beta, horizon);
        if (c.size() <= 1) {
            EXPECT_EQ(nv, pw);
            continue;
        }
        // exact gap: the tails cut off at each later completion
        double gap = 0.0;
        for (std::size_t k = 0; k + 1 < c.size(); ++k) {
            gap += (std::exp(-beta * (c[k + 1] - c[k])) - std::exp(-beta * (horizon - c[k]))) / beta;
        }
        ASSERT_GT(gap, 0.0);
        EXPECT_NEAR(nv - pw, gap, 1e-9 * nv);
        if (gap > 1e-12 * nv) {
            EXPECT_GT(nv, pw);
        }
    }
}

TEST(LogLikelihood, PoissonClosedForm) {
    const auto p = ModelParams::poisson({1.0});
    std::vector<Event> ev;
    for (int i = 0; i < 8; ++i) ev.push_back({1.0 + i, 0});
    const EventSequence s(ev, 1, 10.0);
    EXPECT_NEAR(log_likelihood(p, s, build_timeline(s, {}, 0.5)), -10.0, 1e-12);
}

TEST(LogLikelihood, ZeroIntensityIsAnEvaluationError) {
    const auto p = ModelParams::poisson({0.0});
    const EventSequence s({{1.0, 0}}, 1, 10.0);
    EXPECT_THROW((void)log_likelihood(p, s, build_timeline(s, {}, 0.5)), EvaluationError);
}

TEST(LogLikelihood, MatchesQuadratureOracle) {
    const auto p = oracle::canonical();
    const auto sim = simulate({p, 12.0, 5, 50});
    ASSERT_LE(sim.sequence.size(), 50u);
    ASSERT_GE(sim.sequence.size(), 10u);
    const auto tl = build_timeline(sim.sequence, p.edges(), p.delta);
    const double ll = log_likelihood(p, sim.sequence, tl);
    const double ref = oracle::log_likelihood(p, sim.sequence);
    EXPECT_NEAR(ll, ref, 1e-6 * std::abs(ref));
}

TEST(LogLikelihood, SingleMultiplicityIsASurrogate) {
    const auto p = oracle::canonical();
    const auto sim = simulate({p, 50.0, 9, 10000});
    const auto tl = build_timeline(sim.sequence, p.edges(), p.delta);
    const double exact = log_likelihood(p, sim.sequence, tl);
    const double single = log_likelihood(p, sim.sequence, tl, {CompensatorMode::piecewise, Multiplicity::single});
    EXPECT_GT(single, exact);
}

TEST(RescaledTimes, MatchQuadratureCompensator) {
    const auto p = oracle::canonical();
    const auto sim = simulate({p, 10.0, 21, 40});
    const auto tl = build_timeline(sim.sequence, p.edges(), p.delta);
    const auto r = rescaled_times(p, sim.sequence, tl);
    ASSERT_EQ(r.size(), sim.sequence.size());
    for (std::size_t i = 0; i < r.size(); i += 5) {
        const double t = sim.sequence[i].time;
        double ref = 0.0;
        for (NodeId n = 0; n < 3; ++n) ref += oracle::compensator(p, sim.sequence.events(), n, t);
        EXPECT_NEAR(r[i], ref, 1e-8 * std::max(1.0, ref)) << "event " << i;
    }
}
