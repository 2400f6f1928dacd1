#include "hth/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

namespace hth {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

EventSequence::EventSequence(std::vector<Event> events, std::size_t num_nodes, double horizon)
    : events_(std::move(events)), num_nodes_(num_nodes), horizon_(horizon) {
    // stable_sort keeps insertion order among exact (time, node) ties
    std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.node < b.node;
    });
    validate();
}

EventSequence EventSequence::from_sorted(std::vector<Event> events, std::size_t num_nodes,
                                         double horizon) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& a = events[i - 1];
        const auto& b = events[i];
        if (b.time < a.time || (b.time == a.time && b.node < a.node)) {
            throw std::invalid_argument("events out of order at row " + std::to_string(i));
        }
    }
    EventSequence seq;
    seq.events_ = std::move(events);
    seq.num_nodes_ = num_nodes;
    seq.horizon_ = horizon;
    seq.validate();
    return seq;
}

void EventSequence::validate() const {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw std::invalid_argument("horizon must be positive and finite");
    }
    if (num_nodes_ == 0) throw std::invalid_argument("sequence needs at least one node");
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const auto& e = events_[i];
        if (!std::isfinite(e.time) || e.time < 0.0 || e.time > horizon_) {
            throw std::invalid_argument("event " + std::to_string(i) + " time " +
                                        std::to_string(e.time) + " outside [0, T]");
        }
        if (e.node >= num_nodes_) {
            throw std::invalid_argument("event " + std::to_string(i) + " node " +
                                        std::to_string(e.node) + " >= N");
        }
    }
}

std::vector<std::size_t> EventSequence::counts_per_node() const {
    std::vector<std::size_t> counts(num_nodes_, 0);
    for (const auto& e : events_) ++counts[e.node];
    return counts;
}

std::uint64_t EventSequence::fingerprint() const noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    const std::uint64_t n = num_nodes_;
    h = fnv1a(h, &n, sizeof n);
    h = fnv1a(h, &horizon_, sizeof horizon_);
    for (const auto& e : events_) {
        const std::uint64_t node = e.node;
        h = fnv1a(h, &e.time, sizeof e.time);
        h = fnv1a(h, &node, sizeof node);
    }
    return h;
}

EventSequence EventSequence::truncated(double horizon) const {
    std::vector<Event> kept;
    for (const auto& e : events_) {
        if (e.time <= horizon) kept.push_back(e);
    }
    return from_sorted(std::move(kept), num_nodes_, horizon);
}

EventSequence EventSequence::only_nodes_below(std::size_t n) const {
    std::vector<Event> kept;
    for (const auto& e : events_) {
        if (e.node < n) kept.push_back(e);
    }
    return from_sorted(std::move(kept), n, horizon_);
}

Hyperedge::Hyperedge(std::vector<NodeId> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    if (members_.size() < 2) throw std::invalid_argument("hyperedge needs at least 2 members");
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
        throw std::invalid_argument("hyperedge members must be distinct");
    }
}

bool Hyperedge::contains(NodeId n) const noexcept {
    return std::binary_search(members_.begin(), members_.end(), n);
}

std::string Hyperedge::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(members_[i]);
    }
    return s + ")";
}

std::vector<Hyperedge> ModelParams::edges() const {
    std::vector<Hyperedge> out;
    out.reserve(hyperedges.size());
    for (const auto& h : hyperedges) out.push_back(h.edge);
    return out;
}

void ModelParams::validate() const {
    const std::size_t n = mu.size();
    if (n == 0) throw std::invalid_argument("params need at least one node");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be > 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be > 0");
    for (double m : mu) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("mu must be >= 0");
    }
    if (alpha.rows() != n || alpha.cols() != n) {
        throw std::invalid_argument("alpha must be N x N");
    }
    for (double a : alpha.data()) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("alpha must be >= 0");
    }
    std::set<Hyperedge> seen;
    for (const auto& h : hyperedges) {
        if (h.edge.size() < 2) throw std::invalid_argument("hyperedge needs at least 2 members");
        if (h.edge.members().back() >= n) {
            throw std::invalid_argument("hyperedge " + h.edge.to_string() + " exceeds N");
        }
        if (!(h.weight >= 0.0) || !std::isfinite(h.weight)) {
            throw std::invalid_argument("hyperedge weight must be >= 0");
        }
        if (!seen.insert(h.edge).second) {
            throw std::invalid_argument("duplicate hyperedge " + h.edge.to_string());
        }
    }
}

ModelParams ModelParams::poisson(std::vector<double> mu, double beta, double delta) {
    ModelParams p;
    const std::size_t n = mu.size();
    p.mu = std::move(mu);
    p.alpha = Matrix(n, n, 0.0);
    p.beta = beta;
    p.delta = delta;
    return p;
}

}  // namespace hth
