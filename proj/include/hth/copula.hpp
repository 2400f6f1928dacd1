#pragma once

#include "hth/stats.hpp"
#include "hth/types.hpp"

#include <cstdint>
#include <vector>

namespace hth {

struct PairedSeries {
    std::vector<double> first;
    std::vector<double> second;
};

/// Per-bin event counts of nodes a and b over equal windows covering [0, T].
/// Throws if fewer than 20 bins result.
[[nodiscard]] PairedSeries pair_activity_series(const EventSequence& seq, NodeId a, NodeId b,
                                                double bin_width);

struct TailStats {
    double tau_upper{0.0};
    double rho_probit{0.0};
    double threshold{0.9};
    std::size_t tail_pairs{0};
    bool degenerate_margin{false};  // a margin with all values tied
    bool empty_tail{false};         // fewer than two joint exceedances
};

/// Average-rank pseudo-observations rank / (m + 1).
[[nodiscard]] std::vector<double> pseudo_observations(const std::vector<double>& xs);

/// Empirical upper-tail dependence at level u and the Pearson correlation of
/// probit-transformed pseudo-observations over the joint exceedances.
[[nodiscard]] TailStats tail_stats(const PairedSeries& series, double threshold = 0.9);

struct CopulaConfig {
    ModelParams params;  // HTH ground truth; the null drops its hyperedges
    double horizon{1000.0};
    std::size_t replicates{20};
    double bin_width{0.0};  // 0 selects params.delta
    double threshold{0.9};
    std::uint64_t seed{0};
    std::size_t workers{1};
};

struct CopulaReplicate {
    bool with_hyperedge{false};
    std::uint64_t seed{0};
    TailStats stats;
};

struct CopulaReport {
    std::vector<CopulaReplicate> replicates;
    stats::WelchResult tau_test;
    stats::WelchResult rho_test;
    NodeId node_a{0};
    NodeId node_b{0};
};

/// Simulates replicates with and without the hyperedges (same pairwise
/// parameters) and compares tail statistics of the first hyperedge's first
/// two members with Welch tests.
[[nodiscard]] CopulaReport copula_validation(const CopulaConfig& cfg);

}  // namespace hth
