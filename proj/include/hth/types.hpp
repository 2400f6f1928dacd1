#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hth {

using NodeId = std::size_t;

/// Raised when an intensity or likelihood cannot be evaluated (zero intensity
/// at an observed event, non-finite objective).
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Event {
    double time{0.0};
    NodeId node{0};

    friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered marked events over the observation window [0, horizon].
///
/// Construction sorts by (time, node, insertion index) and validates every
/// event against the node count and horizon.
class EventSequence {
public:
    EventSequence() = default;
    EventSequence(std::vector<Event> events, std::size_t num_nodes, double horizon);

    /// Builds from events that must already be in canonical order; throws on
    /// the first row that is out of order instead of sorting.
    static EventSequence from_sorted(std::vector<Event> events, std::size_t num_nodes,
                                     double horizon);

    [[nodiscard]] const std::vector<Event>& events() const noexcept { return events_; }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] const Event& operator[](std::size_t i) const { return events_[i]; }
    [[nodiscard]] std::size_t num_nodes() const noexcept { return num_nodes_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }

    [[nodiscard]] std::vector<std::size_t> counts_per_node() const;

    /// FNV-1a over the binary representation of (N, T, events).
    [[nodiscard]] std::uint64_t fingerprint() const noexcept;

    /// Same events, shorter window. Events after the new horizon are dropped.
    [[nodiscard]] EventSequence truncated(double horizon) const;

    [[nodiscard]] EventSequence only_nodes_below(std::size_t n) const;

private:
    void validate() const;

    std::vector<Event> events_;
    std::size_t num_nodes_{0};
    double horizon_{0.0};
};

/// Node subset of size >= 2 with strictly sorted members.
class Hyperedge {
public:
    Hyperedge() = default;
    explicit Hyperedge(std::vector<NodeId> members);

    [[nodiscard]] const std::vector<NodeId>& members() const noexcept { return members_; }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] bool contains(NodeId n) const noexcept;
    [[nodiscard]] std::string to_string() const;

    friend auto operator<=>(const Hyperedge&, const Hyperedge&) = default;

private:
    std::vector<NodeId> members_;
};

struct WeightedHyperedge {
    Hyperedge edge;
    double weight{0.0};
};

/// Dense row-major N x N matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const {
        return data_[r * cols_ + c];
    }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_{0};
    std::size_t cols_{0};
    std::vector<double> data_;
};

/// HTH parameters. alpha(n, j) is the excitation from source node j onto
/// target node n.
struct ModelParams {
    std::vector<double> mu;
    Matrix alpha;
    std::vector<WeightedHyperedge> hyperedges;
    double beta{1.0};
    double delta{0.5};

    [[nodiscard]] std::size_t num_nodes() const noexcept { return mu.size(); }
    [[nodiscard]] std::vector<Hyperedge> edges() const;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;

    /// Zero excitation, given baselines.
    static ModelParams poisson(std::vector<double> mu, double beta = 1.0, double delta = 0.5);
};

/// Completion times for each hyperedge of a candidate list, computed for a
/// fixed window delta. Index i matches the i-th hyperedge it was built from.
struct AnchorTimeline {
    double delta{0.0};
    std::vector<std::vector<double>> completions;
};

}  // namespace hth
