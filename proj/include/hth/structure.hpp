#pragma once

#include "hth/inference.hpp"
#include "hth/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace hth {

/// Weights at or below this are reported as absent in structure outputs.
inline constexpr double kPruneThreshold = 1e-4;

enum class SignificanceRule { min_direction, max_direction };

struct CandidateConfig {
    double theta{0.05};  // branching-ratio units (alpha / beta)
    std::size_t k_min{2};
    std::size_t k_max{3};
    SignificanceRule rule{SignificanceRule::min_direction};
    FitConfig fit{};
};

struct CandidateSet {
    std::vector<std::pair<NodeId, NodeId>> significance_graph;  // i < j
    std::vector<Hyperedge> candidates;
    ModelParams stage1;
};

/// All cliques with k_min <= size <= k_max of an undirected graph, ordered
/// by size then lexicographically.
[[nodiscard]] std::vector<Hyperedge> enumerate_cliques(
    std::size_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
    std::size_t k_min, std::size_t k_max);

/// Stage 1 pairwise-only fit, thresholding of mutual excitation, and clique
/// enumeration over the resulting significance graph.
[[nodiscard]] CandidateSet generate_candidates(const EventSequence& seq, double beta,
                                               const CandidateConfig& cfg);

[[nodiscard]] CandidateSet candidates_from_pairwise(const ModelParams& pairwise_fit,
                                                    const CandidateConfig& cfg);

/// Free parameters: N baselines, N^2 pairwise weights and the hyperedges
/// whose weight exceeds `prune` (pass a negative value to count all).
[[nodiscard]] std::size_t parameter_count(const ModelParams& params, double prune = -1.0);

struct ModelComparison {
    double logL_full{0.0};
    double logL_baseline{0.0};
    std::size_t k_full{0};
    std::size_t k_baseline{0};
    std::size_t n_events{0};
    double delta_L{0.0};
    double aic_diff{0.0};  // baseline minus full; positive favors full
    double bic_diff{0.0};
    double lr_stat{0.0};
    std::int64_t lr_df{0};
    double chi2_critical{0.0};  // 0.95 quantile at lr_df (0 when lr_df <= 0)
    bool lr_significant{false};
};

[[nodiscard]] double aic(double log_likelihood, std::size_t k);
[[nodiscard]] double bic(double log_likelihood, std::size_t k, std::size_t n_events);

[[nodiscard]] ModelComparison compare_models(const EventSequence& seq, const FitResult& baseline,
                                             const FitResult& full);

struct L1PathPoint {
    double lambda{0.0};
    std::vector<double> weights;  // per candidate
    double log_likelihood{0.0};
    std::size_t k{0};
    double aic{0.0};
    double bic{0.0};
};

struct L1Path {
    std::vector<Hyperedge> candidates;
    std::vector<L1PathPoint> points;
    std::size_t best_bic{0};
    std::size_t best_aic{0};
};

/// Log-spaced grid of `count` points over [lo, hi].
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// Refits at each lambda, warm-starting from the previous solution; lambda*
/// minimizes BIC, ties going to the larger lambda.
[[nodiscard]] L1Path l1_path(const EventSequence& seq, const std::vector<Hyperedge>& candidates,
                             double beta, double delta, const std::vector<double>& lambdas,
                             const FitConfig& cfg);

struct DeltaPoint {
    double delta{0.0};
    double log_likelihood{0.0};
    std::vector<double> weights;
    std::size_t total_completions{0};
};

struct DeltaScan {
    std::vector<DeltaPoint> points;
    std::size_t best{0};
};

[[nodiscard]] DeltaScan delta_grid_search(const EventSequence& seq,
                                          const std::vector<Hyperedge>& candidates, double beta,
                                          const std::vector<double>& deltas, const FitConfig& cfg,
                                          std::size_t workers = 1);

/// Branching-ratio matrix A(n, j): alpha(n, j) / beta plus, for every
/// hyperedge, alpha_e / (beta (|e| - 1)) between each ordered pair of
/// distinct members.
[[nodiscard]] Matrix interaction_matrix(const ModelParams& params);

/// Perron root of a non-negative square matrix: the largest root over its
/// strongly connected blocks, each found by power iteration on B + I until
/// the Collatz-Wielandt bounds agree to `tol` (relative).
[[nodiscard]] double spectral_radius(const Matrix& a, double tol = 1e-12,
                                     std::size_t max_iters = 200000);

enum class StrengthScope { all_excitation, hyperedges_only };

[[nodiscard]] ModelParams scale_strength(const ModelParams& base, double multiplier,
                                         StrengthScope scope);

struct PhaseScanConfig {
    ModelParams base;
    std::vector<double> multipliers;
    StrengthScope scope{StrengthScope::all_excitation};
    double horizon{200.0};
    std::size_t seeds_per_point{4};
    std::size_t event_cap{20000};
    std::uint64_t seed{0};
    FitConfig fit{};
    std::size_t workers{1};
};

struct PhasePoint {
    double multiplier{0.0};
    double mean_events{0.0};
    double cap_fraction{0.0};
    double rho_true{0.0};
    double rho_inferred{0.0};  // mean over seeds
    std::vector<std::string> failures;
};

struct PhaseScan {
    std::vector<PhasePoint> points;
    /// Strength at which rho_true = 1 (bisection); absent if never reached.
    std::optional<double> critical_strength;
    /// First multiplier with cap fraction above 0.5.
    std::optional<double> onset_strength;
    /// Linear interpolation of the first upward crossing of rho_inferred = 1.
    std::optional<double> inferred_crossing;
    std::optional<double> onset_ratio;  // onset / critical
};

[[nodiscard]] PhaseScan phase_scan(const PhaseScanConfig& cfg);

}  // namespace hth
