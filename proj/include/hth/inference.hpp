#pragma once

#include "hth/model.hpp"
#include "hth/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hth {

/// Soft attribution of one event across its possible causes.
struct EventResponsibility {
    double intensity{0.0};  // normalizer lambda_{n_i}(t_i)
    double background{0.0};
    /// (prior event index, probability); zero-probability sources omitted.
    std::vector<std::pair<std::size_t, double>> pairwise;
    /// (hyperedge index, probability); only hyperedges with an anchor.
    std::vector<std::pair<std::size_t, double>> hyperedge;

    [[nodiscard]] double total() const;
};

struct Responsibilities {
    std::vector<EventResponsibility> events;
};

/// Sufficient statistics of the E-step: everything the closed-form M-step
/// reads. Filled either from materialized responsibilities or streamed.
struct ExpectedCounts {
    std::vector<double> background;  // per node
    Matrix pairwise;                 // (target, source)
    std::vector<double> hyperedge;   // per hyperedge
    double log_intensity_sum{0.0};
};

struct InitPolicy {
    /// Overrides the default starting point (warm starts).
    std::optional<ModelParams> start;
    double pairwise_init{0.1};
    double hyperedge_init{0.1};
    /// When set, every starting value is multiplied by U(1 - jitter, 1 + jitter).
    std::optional<std::uint64_t> jitter_seed;
    double jitter{0.5};
};

struct FitConfig {
    std::size_t max_iters{80};
    double tol{1e-6};
    double l1_penalty{0.0};
    CompensatorOptions compensator{};
    InitPolicy init{};
    /// Post-hoc CP factorization of the fitted hyperedge weights (0 = off).
    std::size_t cp_rank{0};
    std::size_t cp_iters{2000};

    void validate() const;
};

struct CPFactors {
    Matrix factors;  // N x R, non-negative
    [[nodiscard]] std::size_t rank() const noexcept { return factors.cols(); }
};

struct CPResult {
    CPFactors factors;
    double residual{0.0};
    std::vector<double> residual_trace;  // one entry per sweep
    std::vector<std::string> warnings;
};

struct FitResult {
    ModelParams params;
    /// Penalized objective at each iterate, starting with the initial point.
    std::vector<double> trace;
    std::vector<double> iteration_seconds;
    std::size_t iterations{0};
    bool converged{false};
    /// Exact (piecewise, per-member, unpenalized) log-likelihood of params.
    double log_likelihood{0.0};
    std::uint64_t sequence_fingerprint{0};
    std::vector<std::string> warnings;
    std::optional<CPResult> cp;
};

[[nodiscard]] Responsibilities e_step(const ModelParams& params, const EventSequence& seq,
                                      const AnchorTimeline& timeline);

[[nodiscard]] ExpectedCounts expected_counts(const Responsibilities& resp,
                                             const EventSequence& seq,
                                             const ModelParams& params);

/// Streams responsibilities straight into the M-step accumulators without
/// materializing them. Memory O(N^2 + hyperedges).
[[nodiscard]] ExpectedCounts streamed_counts(const ModelParams& params, const EventSequence& seq,
                                             const AnchorTimeline& timeline);

/// Closed-form update of mu, pairwise alpha and hyperedge weights. The
/// hyperedge list, beta and delta are taken from `current`.
[[nodiscard]] ModelParams m_step(const ExpectedCounts& counts, const EventSequence& seq,
                                 const AnchorTimeline& timeline, const ModelParams& current,
                                 const FitConfig& cfg,
                                 std::vector<std::string>* warnings = nullptr);

[[nodiscard]] ModelParams m_step(const Responsibilities& resp, const EventSequence& seq,
                                 const AnchorTimeline& timeline, const ModelParams& current,
                                 const FitConfig& cfg,
                                 std::vector<std::string>* warnings = nullptr);

/// Objective EM climbs: surrogate log-likelihood under cfg's compensator
/// options minus l1_penalty * sum of hyperedge weights.
[[nodiscard]] double penalized_objective(const ModelParams& params, const EventSequence& seq,
                                         const AnchorTimeline& timeline, const FitConfig& cfg);

[[nodiscard]] ModelParams initial_params(const EventSequence& seq,
                                         const std::vector<Hyperedge>& candidates, double beta,
                                         double delta, const FitConfig& cfg);

/// EM until the absolute objective change drops below tol or max_iters
/// M-steps have run. The anchor timeline is computed once and reused.
[[nodiscard]] FitResult fit(const EventSequence& seq, const std::vector<Hyperedge>& candidates,
                            double beta, double delta, const FitConfig& cfg = {});

/// Non-negative rank-R CP factorization of sparse hyperedge weights by
/// node-wise multiplicative updates; the squared residual never increases.
[[nodiscard]] CPResult cp_factorize(const std::vector<WeightedHyperedge>& weights,
                                    std::size_t num_nodes, std::size_t rank,
                                    std::size_t iterations, std::uint64_t seed);

[[nodiscard]] double cp_alpha(const CPFactors& factors, const Hyperedge& edge);

}  // namespace hth
