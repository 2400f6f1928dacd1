#pragma once

#include "hth/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace hth {

enum class CompensatorMode { piecewise, naive };

/// How a hyperedge compensator enters the total integral. `per_member` adds
/// C_e once per member node (the hyperedge term appears in every member's
/// intensity); `single` adds it once.
enum class Multiplicity { per_member, single };

struct CompensatorOptions {
    CompensatorMode mode{CompensatorMode::piecewise};
    Multiplicity multiplicity{Multiplicity::per_member};
};

[[nodiscard]] double kernel(double tau, double beta);

/// All member event times at which every member of `edge` has fired within
/// the closed trailing window [t - delta, t]. Strictly increasing.
[[nodiscard]] std::vector<double> compute_completions(const EventSequence& seq,
                                                      const Hyperedge& edge, double delta);

[[nodiscard]] AnchorTimeline build_timeline(const EventSequence& seq,
                                            const std::vector<Hyperedge>& edges, double delta);

/// Latest completion strictly before t.
[[nodiscard]] std::optional<double> anchor_at(std::span<const double> completions, double t);

/// Direct evaluation of the conditional intensity of node n at time t.
/// `timeline` must have been built from params.hyperedges with params.delta.
[[nodiscard]] double intensity(const ModelParams& params, const EventSequence& seq,
                               const AnchorTimeline& timeline, NodeId n, double t);

/// Integral over [0, horizon] of the anchored kernel, where each anchor is
/// cut off at the next completion.
[[nodiscard]] double piecewise_compensator(std::span<const double> completions, double beta,
                                           double horizon);

/// Biased variant: each completion's kernel is integrated all the way to the
/// horizon.
[[nodiscard]] double naive_compensator(std::span<const double> completions, double beta,
                                       double horizon);

[[nodiscard]] double hyperedge_compensator(std::span<const double> completions, double beta,
                                           double horizon, CompensatorMode mode);

/// sum_{k: n_k = j} (1 - exp(-beta (T - t_k))) / beta for every source node j.
[[nodiscard]] std::vector<double> pairwise_compensators(const EventSequence& seq, double beta);

/// Sum over all nodes of the integrated intensity on [0, T].
[[nodiscard]] double total_compensator(const ModelParams& params, const EventSequence& seq,
                                       const AnchorTimeline& timeline,
                                       const CompensatorOptions& options = {});

/// sum_i log lambda_{n_i}(t_i) - sum_n int_0^T lambda_n(t) dt.
/// With non-default options this is the surrogate objective the matching EM
/// variant climbs; the defaults give the exact log-likelihood.
[[nodiscard]] double log_likelihood(const ModelParams& params, const EventSequence& seq,
                                    const AnchorTimeline& timeline,
                                    const CompensatorOptions& options = {});

/// Cumulative total compensator Lambda(t_i) at every event, using exact
/// integrals of each component. Increments between consecutive events are
/// Exp(1) under the true model (time-rescaling theorem).
[[nodiscard]] std::vector<double> rescaled_times(const ModelParams& params,
                                                 const EventSequence& seq,
                                                 const AnchorTimeline& timeline);

/// Maps node -> indices of the hyperedges containing it.
[[nodiscard]] std::vector<std::vector<std::size_t>> hyperedges_by_node(
    const std::vector<Hyperedge>& edges, std::size_t num_nodes);

}  // namespace hth
