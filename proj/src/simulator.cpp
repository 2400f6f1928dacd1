#include "hth/simulator.hpp"

#include "hth/model.hpp"
#include "hth/parallel.hpp"
#include "hth/random.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace hth {

namespace {

class ThinningState {
public:
    explicit ThinningState(const ModelParams& params)
        : params_(params),
          edges_(params.edges()),
          by_node_(hyperedges_by_node(edges_, params.num_nodes())),
          decayed_(params.num_nodes(), 0.0),
          column_(params.num_nodes(), 0.0),
          last_fire_(params.num_nodes(), -std::numeric_limits<double>::infinity()),
          anchor_(edges_.size()) {
        const std::size_t n = params.num_nodes();
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t target = 0; target < n; ++target) {
                column_[j] += params.alpha(target, j);
            }
        }
        for (double m : params.mu) mu_total_ += m;
    }

    void advance_to(double t) {
        const double decay = std::exp(-params_.beta * (t - time_));
        for (double& s : decayed_) s *= decay;
        time_ = t;
    }

    [[nodiscard]] double total() const {
        double lambda = mu_total_;
        for (std::size_t j = 0; j < decayed_.size(); ++j) lambda += column_[j] * decayed_[j];
        for (std::size_t e = 0; e < edges_.size(); ++e) lambda += edges_[e].size() * hyper_term(e);
        return lambda;
    }

    [[nodiscard]] double node_intensity(NodeId n) const {
        double lambda = params_.mu[n];
        for (std::size_t j = 0; j < decayed_.size(); ++j) lambda += params_.alpha(n, j) * decayed_[j];
        for (std::size_t e : by_node_[n]) lambda += hyper_term(e);
        return lambda;
    }

    // Registers an event at the current time and refreshes completions of
    // every hyperedge containing the node.
    void fire(NodeId n) {
        decayed_[n] += 1.0;
        last_fire_[n] = time_;
        const double window_start = time_ - params_.delta;
        for (std::size_t e : by_node_[n]) {
            bool complete = true;
            for (NodeId v : edges_[e].members()) {
                if (!(last_fire_[v] >= window_start)) {
                    complete = false;
                    break;
                }
            }
            if (complete) anchor_[e] = time_;
        }
    }

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    [[nodiscard]] double hyper_term(std::size_t e) const {
        if (!anchor_[e]) return 0.0;
        return params_.hyperedges[e].weight * std::exp(-params_.beta * (time_ - *anchor_[e]));
    }

    const ModelParams& params_;
    std::vector<Hyperedge> edges_;
    std::vector<std::vector<std::size_t>> by_node_;
    std::vector<double> decayed_;
    std::vector<double> column_;
    std::vector<double> last_fire_;
    std::vector<std::optional<double>> anchor_;
    double mu_total_{0.0};
    double time_{0.0};
};

}  // namespace

SimResult simulate(const SimConfig& cfg) {
    cfg.params.validate();
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw std::invalid_argument("simulate: horizon must be positive");
    }
    if (cfg.event_cap < 1) throw std::invalid_argument("simulate: event_cap must be >= 1");

    const std::size_t n = cfg.params.num_nodes();
    Rng rng(cfg.seed);
    ThinningState state(cfg.params);
    std::vector<Event> events;
    SimResult result;

    while (true) {
        const double bound = state.total();
        if (!(bound > 0.0)) break;
        const double candidate = state.time() + rng.exponential(bound);
        if (candidate > cfg.horizon) break;
        ++result.candidates;
        state.advance_to(candidate);
        const double lambda = state.total();
        if (rng.uniform() * bound > lambda) continue;

        double pick = rng.uniform() * lambda;
        NodeId node = n - 1;
        for (NodeId v = 0; v < n; ++v) {
            pick -= state.node_intensity(v);
            if (pick <= 0.0) {
                node = v;
                break;
            }
        }
        state.fire(node);
        events.push_back({candidate, node});
        if (events.size() >= cfg.event_cap) {
            result.cap_hit = true;
            break;
        }
    }

    const double horizon = result.cap_hit ? events.back().time : cfg.horizon;
    result.sequence = EventSequence::from_sorted(std::move(events), n, horizon);
    return result;
}

std::vector<SimResult> simulate_batch(const std::vector<SimConfig>& cfgs, std::size_t workers) {
    std::vector<SimResult> out(cfgs.size());
    parallel_for(cfgs.size(), workers, [&](std::size_t i) {
        try {
            out[i] = simulate(cfgs[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("simulation run " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace hth
