#include "hth/simulator.hpp"
#include "hth/stats.hpp"
#include "hth/structure.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace hth;

namespace {

// Every subset checked directly for pairwise adjacency.
std::vector<Hyperedge> brute_force_cliques(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
                                           std::size_t k_min, std::size_t k_max) {
    std::set<std::pair<NodeId, NodeId>> adj(edges.begin(), edges.end());
    std::vector<Hyperedge> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<NodeId> m;
        for (NodeId v = 0; v < n; ++v) {
            if (mask >> v & 1) m.push_back(v);
        }
        if (m.size() < k_min || m.size() > k_max) continue;
        bool ok = true;
        for (std::size_t a = 0; a < m.size() && ok; ++a) {
            for (std::size_t b = a + 1; b < m.size() && ok; ++b) ok = adj.count({m[a], m[b]}) > 0;
        }
        if (ok) out.emplace_back(m);
    }
    std::sort(out.begin(), out.end(), [](const Hyperedge& a, const Hyperedge& b) {
        return a.size() != b.size() ? a.size() < b.size() : a.members() < b.members();
    });
    return out;
}

EventSequence poisson_data(std::size_t n, double horizon, std::uint64_t seed) {
    return simulate({ModelParams::poisson(std::vector<double>(n, 1.0)), horizon, seed, 1000000}).sequence;
}

}  // namespace

TEST(Candidates, NoExcitationGivesNoCandidates) {
    const auto p = ModelParams::poisson({1.0, 1.0, 1.0});
    const auto cs = candidates_from_pairwise(p, CandidateConfig{});
    EXPECT_TRUE(cs.significance_graph.empty());
    EXPECT_TRUE(cs.candidates.empty());
}

TEST(Candidates, TriangleCliques) {
    const auto c = enumerate_cliques(3, {{0, 1}, {1, 2}, {0, 2}}, 2, 3);
    const std::vector<Hyperedge> expected{Hyperedge({0, 1}), Hyperedge({0, 2}), Hyperedge({1, 2}),
                                          Hyperedge({0, 1, 2})};
    EXPECT_EQ(c, expected);
}

TEST(Candidates, CliquesMatchBruteForce) {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + trial % 6;  // up to 8 nodes
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId a = 0; a < n; ++a) {
            for (NodeId b = a + 1; b < n; ++b) {
                if (gen() % 100 < 55) edges.emplace_back(a, b);
            }
        }
        const std::size_t k_max = 2 + trial % 3;
        EXPECT_EQ(enumerate_cliques(n, edges, 2, k_max), brute_force_cliques(n, edges, 2, k_max)) << trial;
    }
}

TEST(Candidates, ThresholdRules) {
    auto p = ModelParams::poisson({1.0, 1.0});
    p.alpha(1, 0) = 0.2;
    p.alpha(0, 1) = 0.01;
    CandidateConfig cfg;
    cfg.k_max = 2;
    EXPECT_TRUE(candidates_from_pairwise(p, cfg).candidates.empty());
    cfg.rule = SignificanceRule::max_direction;
    EXPECT_EQ(candidates_from_pairwise(p, cfg).candidates, std::vector<Hyperedge>{Hyperedge({0, 1})});
}

TEST(Compare, IdenticalFits) {
    const auto seq = poisson_data(2, 300.0, 1);
    const auto f = fit(seq, {}, 1.0, 0.5);
    const auto c = compare_models(seq, f, f);
    EXPECT_EQ(c.delta_L, 0.0);
    EXPECT_EQ(c.bic_diff, 0.0);
    EXPECT_EQ(c.aic_diff, 0.0);
    EXPECT_EQ(c.lr_df, 0);
    EXPECT_FALSE(c.lr_significant);
}

TEST(Compare, SixDegreesOfFreedomCriticalValue) {
    const auto seq = poisson_data(4, 300.0, 2);
    const auto base = fit(seq, {}, 1.0, 0.5);
    std::vector<Hyperedge> six;
    for (NodeId a = 0; a < 4; ++a) {
        for (NodeId b = a + 1; b < 4; ++b) six.push_back(Hyperedge({a, b}));
    }
    FitResult full = fit(seq, six, 1.0, 0.5);
    // weights forced positive so every candidate counts as a parameter
    for (auto& h : full.params.hyperedges) h.weight = std::max(h.weight, 1e-3);
    full.log_likelihood = log_likelihood(full.params, seq, build_timeline(seq, six, 0.5));
    const auto c = compare_models(seq, base, full);
    EXPECT_EQ(c.lr_df, 6);
    EXPECT_NEAR(c.chi2_critical, 12.59, 0.01);
    EXPECT_NEAR(c.chi2_critical, 12.591587243743977, 1e-9);
}

TEST(Compare, MismatchedSequencesRejected) {
    const auto a = poisson_data(2, 100.0, 1);
    const auto b = poisson_data(2, 100.0, 2);
    const auto fa = fit(a, {}, 1.0, 0.5);
    const auto fb = fit(b, {}, 1.0, 0.5);
    EXPECT_THROW((void)compare_models(a, fa, fb), std::invalid_argument);
}

TEST(InformationCriteria, Formulas) {
    EXPECT_DOUBLE_EQ(aic(-100.0, 5), 210.0);
    EXPECT_DOUBLE_EQ(bic(-100.0, 5, 1000), 5 * std::log(1000.0) + 200.0);
}

TEST(LogGrid, Spacing) {
    const auto g = log_grid(1.0, 100.0, 3);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_NEAR(g[1], 10.0, 1e-12);
    EXPECT_DOUBLE_EQ(g[2], 100.0);
    EXPECT_THROW((void)log_grid(0.0, 1.0, 3), std::invalid_argument);
}

class L1PathTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        seq_ = new EventSequence(simulate({oracle::canonical(), 1500.0, 31, 1000000}).sequence);
    }
    static void TearDownTestSuite() { delete seq_; }
    static std::vector<Hyperedge> pairs() { return {Hyperedge({0, 1}), Hyperedge({0, 2}), Hyperedge({1, 2})}; }
    static FitConfig config() {
        FitConfig cfg;
        cfg.max_iters = 300;
        cfg.tol = 1e-8;
        return cfg;
    }
    static EventSequence* seq_;
};
EventSequence* L1PathTest::seq_ = nullptr;

TEST_F(L1PathTest, HugePenaltyZeroesWeights) {
    const auto path = l1_path(*seq_, pairs(), 1.0, 0.5, {1e9}, config());
    for (double w : path.points[0].weights) EXPECT_LT(w, 1e-6);
}

TEST_F(L1PathTest, ZeroPenaltyMatchesUnpenalizedFit) {
    const auto path = l1_path(*seq_, pairs(), 1.0, 0.5, {0.0}, config());
    const auto f = fit(*seq_, pairs(), 1.0, 0.5, config());
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(path.points[0].weights[c], f.params.hyperedges[c].weight, 1e-6);
    EXPECT_NEAR(path.points[0].log_likelihood, f.log_likelihood, 1e-6);
}

TEST_F(L1PathTest, ShrinksMonotonically) {
    const auto path = l1_path(*seq_, pairs(), 1.0, 0.5, log_grid(1.0, 1000.0, 8), config());
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 1; i < path.points.size(); ++i) {
            EXPECT_LE(path.points[i].weights[c], path.points[i - 1].weights[c] + 1e-6) << "candidate " << c;
        }
    }
    EXPECT_LT(path.best_bic, path.points.size());
    EXPECT_THROW((void)l1_path(*seq_, pairs(), 1.0, 0.5, {2.0, 1.0}, config()), std::invalid_argument);
}

TEST(DeltaScan, SinglePoint) {
    const auto seq = simulate({oracle::canonical(), 300.0, 4, 100000}).sequence;
    const auto s = delta_grid_search(seq, oracle::canonical().edges(), 1.0, {0.5}, FitConfig{});
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_EQ(s.best, 0u);
    EXPECT_DOUBLE_EQ(s.points[0].delta, 0.5);
}

TEST(DeltaScan, FlatOnPoissonData) {
    const auto seq = poisson_data(3, 2000.0, 5);
    FitConfig cfg;
    cfg.max_iters = 200;
    const auto s = delta_grid_search(seq, {Hyperedge({0, 1})}, 1.0, {0.1, 0.25, 0.5, 1.0, 2.0}, cfg, 2);
    double lo = s.points[0].log_likelihood, hi = lo;
    for (const auto& pt : s.points) {
        lo = std::min(lo, pt.log_likelihood);
        hi = std::max(hi, pt.log_likelihood);
        EXPECT_LT(pt.weights[0], 0.05) << "delta " << pt.delta;
    }
    // a single extra parameter cannot buy more than a few nats on null data
    EXPECT_LT(hi - lo, 5.0);
}

TEST(DeltaScan, WorkersDoNotChangeResults) {
    const auto seq = simulate({oracle::canonical(), 300.0, 6, 100000}).sequence;
    const std::vector<double> grid{0.25, 0.5, 1.0};
    const auto a = delta_grid_search(seq, oracle::canonical().edges(), 1.0, grid, FitConfig{}, 1);
    const auto b = delta_grid_search(seq, oracle::canonical().edges(), 1.0, grid, FitConfig{}, 3);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(a.points[i].log_likelihood, b.points[i].log_likelihood);
}

TEST(InteractionMatrix, Examples) {
    const auto zero = interaction_matrix(ModelParams::poisson({1.0, 1.0}));
    for (double v : zero.data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(spectral_radius(zero), 0.0);

    auto p = ModelParams::poisson({1.0, 1.0}, 2.0);
    p.alpha(1, 0) = 2.0;
    EXPECT_DOUBLE_EQ(interaction_matrix(p)(1, 0), 1.0);

    auto q = ModelParams::poisson({1.0, 1.0, 1.0}, 2.0);
    q.hyperedges = {{Hyperedge({0, 1, 2}), 0.8}};
    const auto a = interaction_matrix(q);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(a(r, c), r == c ? 0.0 : 0.8 / 2.0 / 2.0);
    }
}

TEST(SpectralRadius, MatchesEigen) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 9;
        Matrix a(n, n, 0.0);
        Eigen::MatrixXd m(n, n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                const double v = gen() % 3 == 0 ? 0.0 : u(gen);
                a(r, c) = v;
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
            }
        }
        const double ref = Eigen::EigenSolver<Eigen::MatrixXd>(m).eigenvalues().cwiseAbs().maxCoeff();
        EXPECT_NEAR(spectral_radius(a), ref, 1e-8 * std::max(1.0, ref)) << "trial " << trial;
    }
}

TEST(SpectralRadius, NilpotentAndInvalid) {
    Matrix a(3, 3, 0.0);
    a(1, 0) = 0.7;
    a(2, 1) = 0.4;
    EXPECT_NEAR(spectral_radius(a), 0.0, 1e-8);
    Matrix neg(2, 2, 0.0);
    neg(0, 1) = -1.0;
    EXPECT_THROW((void)spectral_radius(neg), std::invalid_argument);
}

TEST(PhaseScan, SubcriticalGridNeverHitsCap) {
    PhaseScanConfig cfg;
    cfg.base = oracle::canonical();
    cfg.multipliers = {0.25, 0.5, 0.75};
    cfg.horizon = 100.0;
    cfg.seeds_per_point = 2;
    const auto scan = phase_scan(cfg);
    ASSERT_EQ(scan.points.size(), 3u);
    for (const auto& pt : scan.points) {
        EXPECT_EQ(pt.cap_fraction, 0.0);
        EXPECT_LT(pt.rho_true, 1.0);
    }
    EXPECT_FALSE(scan.onset_strength.has_value());
    ASSERT_TRUE(scan.critical_strength.has_value());
    EXPECT_NEAR(spectral_radius(interaction_matrix(
                    scale_strength(cfg.base, *scan.critical_strength, StrengthScope::all_excitation))),
                1.0, 1e-9);
}

TEST(PhaseScan, SinglePoint) {
    PhaseScanConfig cfg;
    cfg.base = oracle::canonical();
    cfg.multipliers = {1.0};
    cfg.horizon = 50.0;
    cfg.seeds_per_point = 1;
    EXPECT_EQ(phase_scan(cfg).points.size(), 1u);
    cfg.multipliers = {};
    EXPECT_THROW((void)phase_scan(cfg), std::invalid_argument);
}

TEST(PhaseScan, HyperedgeOnlyScopeLeavesPairwiseFixed) {
    const auto p = scale_strength(oracle::canonical(), 3.0, StrengthScope::hyperedges_only);
    EXPECT_DOUBLE_EQ(p.alpha(2, 0), 0.4);
    EXPECT_DOUBLE_EQ(p.hyperedges[0].weight, 1.2);
    const auto q = scale_strength(oracle::canonical(), 3.0, StrengthScope::all_excitation);
    EXPECT_NEAR(q.alpha(2, 0), 1.2, 1e-15);
    EXPECT_DOUBLE_EQ(q.mu[0], 0.6);
}
