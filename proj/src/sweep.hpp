#pragma once

// Single forward pass over an event sequence that exposes, for every event,
// the decomposition of its conditional intensity into background, per-source
// pairwise and per-hyperedge terms. Shared by the likelihood, the E-step and
// the streaming EM accumulators.

#include "hth/model.hpp"
#include "hth/types.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hth::detail {

struct EventTerms {
    std::size_t index;
    NodeId node;
    double time;
    double background;
    /// pairwise[j] = alpha(node, j) * sum_{k: n_k = j, t_k < time} phi(time - t_k)
    std::span<const double> pairwise;
    /// (hyperedge index, alpha_e * phi(time - anchor))
    std::span<const std::pair<std::size_t, double>> hyper;
    double total;
};

/// Calls visit(const EventTerms&) for each event in order. Events sharing a
/// timestamp see only strictly earlier history.
template <class Visit>
void sweep_events(const ModelParams& params, const EventSequence& seq,
                  const AnchorTimeline& timeline, Visit&& visit) {
    const std::size_t n_nodes = params.num_nodes();
    const double beta = params.beta;
    const auto& events = seq.events();
    const auto edges = params.edges();
    const auto by_node = hyperedges_by_node(edges, n_nodes);

    std::vector<double> decayed(n_nodes, 0.0);  // per source node
    std::vector<double> pairwise(n_nodes, 0.0);
    std::vector<std::pair<std::size_t, double>> hyper;
    std::vector<std::size_t> cursor(edges.size(), 0);
    double state_time = 0.0;

    std::size_t i = 0;
    while (i < events.size()) {
        const double t = events[i].time;
        const double decay = std::exp(-beta * (t - state_time));
        for (double& s : decayed) s *= decay;
        state_time = t;

        std::size_t group_end = i;
        while (group_end < events.size() && events[group_end].time == t) ++group_end;

        for (std::size_t k = i; k < group_end; ++k) {
            const NodeId n = events[k].node;
            double total = params.mu[n];
            for (std::size_t j = 0; j < n_nodes; ++j) {
                pairwise[j] = params.alpha(n, j) * decayed[j];
                total += pairwise[j];
            }
            hyper.clear();
            for (std::size_t e : by_node[n]) {
                const auto& comp = timeline.completions[e];
                std::size_t& c = cursor[e];
                while (c < comp.size() && comp[c] < t) ++c;
                if (c == 0) continue;
                const double w = params.hyperedges[e].weight;
                if (w == 0.0) continue;
                const double v = w * std::exp(-beta * (t - comp[c - 1]));
                hyper.emplace_back(e, v);
                total += v;
            }
            visit(EventTerms{k, n, t, params.mu[n], pairwise, hyper, total});
        }
        for (std::size_t k = i; k < group_end; ++k) decayed[events[k].node] += 1.0;
        i = group_end;
    }
}

inline void require_positive(const EventTerms& terms) {
    if (!(terms.total > 0.0) || !std::isfinite(terms.total)) {
        throw EvaluationError("intensity " + std::to_string(terms.total) + " at event " +
                              std::to_string(terms.index) + " (t=" + std::to_string(terms.time) +
                              ", node " + std::to_string(terms.node) + ") is not positive");
    }
}

}  // namespace hth::detail
