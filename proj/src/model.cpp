#include "hth/model.hpp"

#include "sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hth {

namespace {

void check_timeline(const ModelParams& params, const AnchorTimeline& timeline) {
    if (timeline.completions.size() != params.hyperedges.size()) {
        throw std::invalid_argument("anchor timeline does not match the hyperedge list");
    }
}

void check_completions(std::span<const double> completions, double beta, double horizon) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    for (std::size_t k = 0; k < completions.size(); ++k) {
        if (completions[k] > horizon) {
            throw std::invalid_argument("completion time beyond the horizon");
        }
        if (k > 0 && !(completions[k] > completions[k - 1])) {
            throw std::invalid_argument("completions must be strictly increasing");
        }
    }
}

// (1 - exp(-beta * dt)) / beta
double kernel_integral(double dt, double beta) { return -std::expm1(-beta * dt) / beta; }

}  // namespace

double kernel(double tau, double beta) {
    if (!(tau >= 0.0)) throw std::invalid_argument("kernel: tau must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("kernel: beta must be > 0");
    return std::exp(-beta * tau);
}

std::vector<double> compute_completions(const EventSequence& seq, const Hyperedge& edge,
                                        double delta) {
    if (edge.size() < 2) throw std::invalid_argument("hyperedge needs at least 2 members");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    const auto& members = edge.members();
    if (members.back() >= seq.num_nodes()) {
        throw std::invalid_argument("hyperedge " + edge.to_string() + " exceeds sequence nodes");
    }

    constexpr double never = -std::numeric_limits<double>::infinity();
    std::vector<double> last_fire(members.size(), never);
    std::vector<double> out;
    for (const auto& ev : seq.events()) {
        const auto it = std::lower_bound(members.begin(), members.end(), ev.node);
        if (it == members.end() || *it != ev.node) continue;
        last_fire[static_cast<std::size_t>(it - members.begin())] = ev.time;
        const double window_start = ev.time - delta;
        const bool complete = std::all_of(last_fire.begin(), last_fire.end(),
                                          [&](double t) { return t >= window_start; });
        if (complete && (out.empty() || out.back() < ev.time)) out.push_back(ev.time);
    }
    return out;
}

AnchorTimeline build_timeline(const EventSequence& seq, const std::vector<Hyperedge>& edges,
                              double delta) {
    AnchorTimeline tl;
    tl.delta = delta;
    tl.completions.reserve(edges.size());
    for (const auto& e : edges) tl.completions.push_back(compute_completions(seq, e, delta));
    return tl;
}

std::optional<double> anchor_at(std::span<const double> completions, double t) {
    const auto it = std::lower_bound(completions.begin(), completions.end(), t);
    if (it == completions.begin()) return std::nullopt;
    return *std::prev(it);
}

double intensity(const ModelParams& params, const EventSequence& seq,
                 const AnchorTimeline& timeline, NodeId n, double t) {
    if (n >= params.num_nodes()) throw std::invalid_argument("intensity: node out of range");
    check_timeline(params, timeline);
    double value = params.mu[n];
    for (const auto& ev : seq.events()) {
        if (!(ev.time < t)) break;
        value += params.alpha(n, ev.node) * std::exp(-params.beta * (t - ev.time));
    }
    for (std::size_t e = 0; e < params.hyperedges.size(); ++e) {
        const auto& h = params.hyperedges[e];
        if (!h.edge.contains(n)) continue;
        if (const auto a = anchor_at(timeline.completions[e], t)) {
            value += h.weight * std::exp(-params.beta * (t - *a));
        }
    }
    return value;
}

double piecewise_compensator(std::span<const double> completions, double beta, double horizon) {
    check_completions(completions, beta, horizon);
    double c = 0.0;
    for (std::size_t k = 0; k < completions.size(); ++k) {
        const double next = k + 1 < completions.size() ? completions[k + 1] : horizon;
        c += kernel_integral(next - completions[k], beta);
    }
    return c;
}

double naive_compensator(std::span<const double> completions, double beta, double horizon) {
    check_completions(completions, beta, horizon);
    double c = 0.0;
    for (double tc : completions) c += kernel_integral(horizon - tc, beta);
    return c;
}

double hyperedge_compensator(std::span<const double> completions, double beta, double horizon,
                             CompensatorMode mode) {
    return mode == CompensatorMode::piecewise ? piecewise_compensator(completions, beta, horizon)
                                              : naive_compensator(completions, beta, horizon);
}

std::vector<double> pairwise_compensators(const EventSequence& seq, double beta) {
    std::vector<double> g(seq.num_nodes(), 0.0);
    for (const auto& ev : seq.events()) g[ev.node] += kernel_integral(seq.horizon() - ev.time, beta);
    return g;
}

double total_compensator(const ModelParams& params, const EventSequence& seq,
                         const AnchorTimeline& timeline, const CompensatorOptions& options) {
    check_timeline(params, timeline);
    const std::size_t n = params.num_nodes();
    const double horizon = seq.horizon();
    double total = 0.0;
    for (double m : params.mu) total += m * horizon;

    const auto g = pairwise_compensators(seq, params.beta);
    for (std::size_t j = 0; j < n; ++j) {
        double column = 0.0;
        for (std::size_t target = 0; target < n; ++target) column += params.alpha(target, j);
        total += column * g[j];
    }
    for (std::size_t e = 0; e < params.hyperedges.size(); ++e) {
        const auto& h = params.hyperedges[e];
        const double c = hyperedge_compensator(timeline.completions[e], params.beta, horizon,
                                               options.mode);
        const double mult = options.multiplicity == Multiplicity::per_member
                                ? static_cast<double>(h.edge.size())
                                : 1.0;
        total += mult * h.weight * c;
    }
    return total;
}

double log_likelihood(const ModelParams& params, const EventSequence& seq,
                      const AnchorTimeline& timeline, const CompensatorOptions& options) {
    check_timeline(params, timeline);
    if (seq.num_nodes() != params.num_nodes()) {
        throw std::invalid_argument("sequence and params disagree on N");
    }
    double log_sum = 0.0;
    detail::sweep_events(params, seq, timeline, [&](const detail::EventTerms& terms) {
        detail::require_positive(terms);
        log_sum += std::log(terms.total);
    });
    return log_sum - total_compensator(params, seq, timeline, options);
}

std::vector<double> rescaled_times(const ModelParams& params, const EventSequence& seq,
                                   const AnchorTimeline& timeline) {
    check_timeline(params, timeline);
    const std::size_t n = params.num_nodes();
    const double beta = params.beta;

    double mu_total = 0.0;
    for (double m : params.mu) mu_total += m;
    std::vector<double> column(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t target = 0; target < n; ++target) column[j] += params.alpha(target, j);
    }

    std::vector<double> decayed(n, 0.0);
    std::vector<std::size_t> cursor(params.hyperedges.size(), 0);
    std::vector<double> out;
    out.reserve(seq.size());
    const auto& events = seq.events();

    double lambda = 0.0;
    double prev = 0.0;
    std::size_t i = 0;
    while (i < events.size()) {
        const double t = events[i].time;
        const double dt = t - prev;
        const double ki = kernel_integral(dt, beta);
        lambda += mu_total * dt;
        for (std::size_t j = 0; j < n; ++j) lambda += column[j] * decayed[j] * ki;
        for (std::size_t e = 0; e < params.hyperedges.size(); ++e) {
            const std::size_t c = cursor[e];
            if (c == 0) continue;
            const auto& h = params.hyperedges[e];
            const double anchor = timeline.completions[e][c - 1];
            lambda += static_cast<double>(h.edge.size()) * h.weight *
                      std::exp(-beta * (prev - anchor)) * ki;
        }

        const double decay = std::exp(-beta * dt);
        for (double& s : decayed) s *= decay;
        std::size_t group_end = i;
        while (group_end < events.size() && events[group_end].time == t) {
            out.push_back(lambda);
            decayed[events[group_end].node] += 1.0;
            ++group_end;
        }
        for (std::size_t e = 0; e < params.hyperedges.size(); ++e) {
            const auto& comp = timeline.completions[e];
            while (cursor[e] < comp.size() && comp[cursor[e]] <= t) ++cursor[e];
        }
        prev = t;
        i = group_end;
    }
    return out;
}

std::vector<std::vector<std::size_t>> hyperedges_by_node(const std::vector<Hyperedge>& edges,
                                                         std::size_t num_nodes) {
    std::vector<std::vector<std::size_t>> out(num_nodes);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        for (NodeId v : edges[e].members()) {
            if (v < num_nodes) out[v].push_back(e);
        }
    }
    return out;
}

}  // namespace hth
