#include "hth/inference.hpp"

#include "hth/random.hpp"
#include "sweep.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hth {

double EventResponsibility::total() const {
    double s = background;
    for (const auto& [j, p] : pairwise) s += p;
    for (const auto& [e, p] : hyperedge) s += p;
    return s;
}

void FitConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (!(l1_penalty >= 0.0)) throw std::invalid_argument("l1_penalty must be >= 0");
    if (!(init.jitter >= 0.0 && init.jitter < 1.0)) {
        throw std::invalid_argument("jitter must lie in [0, 1)");
    }
}

Responsibilities e_step(const ModelParams& params, const EventSequence& seq,
                        const AnchorTimeline& timeline) {
    Responsibilities out;
    out.events.resize(seq.size());
    const auto& events = seq.events();
    detail::sweep_events(params, seq, timeline, [&](const detail::EventTerms& terms) {
        detail::require_positive(terms);
        auto& r = out.events[terms.index];
        r.intensity = terms.total;
        r.background = terms.background / terms.total;
        for (std::size_t j = 0; j < terms.index && events[j].time < terms.time; ++j) {
            const double w = params.alpha(terms.node, events[j].node);
            if (w == 0.0) continue;
            const double p = w * std::exp(-params.beta * (terms.time - events[j].time)) / terms.total;
            if (p > 0.0) r.pairwise.emplace_back(j, p);
        }
        for (const auto& [e, v] : terms.hyper) r.hyperedge.emplace_back(e, v / terms.total);
    });
    return out;
}

namespace {

ExpectedCounts empty_counts(std::size_t n, std::size_t h) {
    ExpectedCounts c;
    c.background.assign(n, 0.0);
    c.pairwise = Matrix(n, n, 0.0);
    c.hyperedge.assign(h, 0.0);
    return c;
}

double multiplicity(const CompensatorOptions& opt, const Hyperedge& e) {
    return opt.multiplicity == Multiplicity::per_member ? static_cast<double>(e.size()) : 1.0;
}

double weight_sum(const ModelParams& params) {
    double s = 0.0;
    for (const auto& h : params.hyperedges) s += h.weight;
    return s;
}

}  // namespace

ExpectedCounts expected_counts(const Responsibilities& resp, const EventSequence& seq,
                               const ModelParams& params) {
    if (resp.events.size() != seq.size()) {
        throw std::invalid_argument("responsibilities do not match the sequence");
    }
    auto c = empty_counts(params.num_nodes(), params.hyperedges.size());
    const auto& events = seq.events();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& r = resp.events[i];
        const NodeId n = events[i].node;
        c.background[n] += r.background;
        for (const auto& [j, p] : r.pairwise) c.pairwise(n, events[j].node) += p;
        for (const auto& [e, p] : r.hyperedge) c.hyperedge[e] += p;
        c.log_intensity_sum += std::log(r.intensity);
    }
    return c;
}

ExpectedCounts streamed_counts(const ModelParams& params, const EventSequence& seq,
                               const AnchorTimeline& timeline) {
    const std::size_t n = params.num_nodes();
    auto c = empty_counts(n, params.hyperedges.size());
    detail::sweep_events(params, seq, timeline, [&](const detail::EventTerms& terms) {
        detail::require_positive(terms);
        const double inv = 1.0 / terms.total;
        c.background[terms.node] += terms.background * inv;
        for (std::size_t j = 0; j < n; ++j) c.pairwise(terms.node, j) += terms.pairwise[j] * inv;
        for (const auto& [e, v] : terms.hyper) c.hyperedge[e] += v * inv;
        c.log_intensity_sum += std::log(terms.total);
    });
    return c;
}

ModelParams m_step(const ExpectedCounts& counts, const EventSequence& seq,
                   const AnchorTimeline& timeline, const ModelParams& current,
                   const FitConfig& cfg, std::vector<std::string>* warnings) {
    const std::size_t n = current.num_nodes();
    const double horizon = seq.horizon();
    ModelParams next = current;

    for (std::size_t v = 0; v < n; ++v) next.mu[v] = counts.background[v] / horizon;

    const auto g = pairwise_compensators(seq, current.beta);
    for (std::size_t j = 0; j < n; ++j) {
        if (g[j] <= 0.0) {
            for (std::size_t target = 0; target < n; ++target) next.alpha(target, j) = 0.0;
            if (warnings) {
                warnings->push_back("node " + std::to_string(j) +
                                    " has no source events; outgoing weights set to 0");
            }
            continue;
        }
        for (std::size_t target = 0; target < n; ++target) {
            next.alpha(target, j) = counts.pairwise(target, j) / g[j];
        }
    }

    for (std::size_t e = 0; e < next.hyperedges.size(); ++e) {
        auto& h = next.hyperedges[e];
        const double c = hyperedge_compensator(timeline.completions[e], current.beta, horizon,
                                               cfg.compensator.mode);
        const double denom = multiplicity(cfg.compensator, h.edge) * c + cfg.l1_penalty;
        h.weight = (c > 0.0 && denom > 0.0) ? counts.hyperedge[e] / denom : 0.0;
    }
    return next;
}

ModelParams m_step(const Responsibilities& resp, const EventSequence& seq,
                   const AnchorTimeline& timeline, const ModelParams& current,
                   const FitConfig& cfg, std::vector<std::string>* warnings) {
    return m_step(expected_counts(resp, seq, current), seq, timeline, current, cfg, warnings);
}

double penalized_objective(const ModelParams& params, const EventSequence& seq,
                           const AnchorTimeline& timeline, const FitConfig& cfg) {
    return log_likelihood(params, seq, timeline, cfg.compensator) -
           cfg.l1_penalty * weight_sum(params);
}

ModelParams initial_params(const EventSequence& seq, const std::vector<Hyperedge>& candidates,
                           double beta, double delta, const FitConfig& cfg) {
    const std::size_t n = seq.num_nodes();
    ModelParams p;
    p.beta = beta;
    p.delta = delta;
    std::map<Hyperedge, double> warm;
    if (cfg.init.start) {
        const auto& s = *cfg.init.start;
        if (s.num_nodes() != n) throw std::invalid_argument("warm start has the wrong N");
        p.mu = s.mu;
        p.alpha = s.alpha;
        for (const auto& h : s.hyperedges) warm[h.edge] = h.weight;
    } else {
        const auto counts = seq.counts_per_node();
        p.mu.resize(n);
        for (std::size_t v = 0; v < n; ++v) p.mu[v] = counts[v] / seq.horizon();
        p.alpha = Matrix(n, n, cfg.init.pairwise_init);
    }
    for (const auto& e : candidates) {
        const auto it = warm.find(e);
        p.hyperedges.push_back({e, it != warm.end() ? it->second : cfg.init.hyperedge_init});
    }

    if (cfg.init.jitter_seed) {
        Rng rng(*cfg.init.jitter_seed);
        const double j = cfg.init.jitter;
        auto jitter = [&](double& x) { x *= 1.0 - j + 2.0 * j * rng.uniform(); };
        for (double& m : p.mu) jitter(m);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) jitter(p.alpha(r, c));
        }
        for (auto& h : p.hyperedges) jitter(h.weight);
    }
    p.validate();
    return p;
}

FitResult fit(const EventSequence& seq, const std::vector<Hyperedge>& candidates, double beta,
              double delta, const FitConfig& cfg) {
    cfg.validate();
    if (!(beta > 0.0) || !(delta > 0.0)) throw std::invalid_argument("beta, delta must be > 0");
    using clock = std::chrono::steady_clock;

    const AnchorTimeline timeline = build_timeline(seq, candidates, delta);
    FitResult result;
    result.sequence_fingerprint = seq.fingerprint();
    ModelParams params = initial_params(seq, candidates, beta, delta, cfg);

    for (std::size_t it = 0;; ++it) {
        const auto start = clock::now();
        ExpectedCounts counts;
        try {
            counts = streamed_counts(params, seq, timeline);
        } catch (const EvaluationError& e) {
            throw EvaluationError("EM iteration " + std::to_string(it) + ": " + e.what());
        }
        const double objective = counts.log_intensity_sum -
                                 total_compensator(params, seq, timeline, cfg.compensator) -
                                 cfg.l1_penalty * weight_sum(params);
        if (!std::isfinite(objective)) {
            throw EvaluationError("non-finite objective at EM iteration " + std::to_string(it));
        }
        result.trace.push_back(objective);
        if (it > 0 && std::abs(objective - result.trace[it - 1]) < cfg.tol) {
            result.converged = true;
            break;
        }
        if (it == cfg.max_iters) break;
        params = m_step(counts, seq, timeline, params, cfg, it == 0 ? &result.warnings : nullptr);
        result.iteration_seconds.push_back(
            std::chrono::duration<double>(clock::now() - start).count());
        result.iterations = it + 1;
    }

    result.params = params;
    result.log_likelihood = log_likelihood(params, seq, timeline);
    if (cfg.cp_rank > 0 && !params.hyperedges.empty()) {
        result.cp = cp_factorize(params.hyperedges, params.num_nodes(), cfg.cp_rank,
                                 cfg.cp_iters, cfg.init.jitter_seed.value_or(0));
    }
    return result;
}

double cp_alpha(const CPFactors& factors, const Hyperedge& edge) {
    const auto& f = factors.factors;
    double total = 0.0;
    for (std::size_t r = 0; r < f.cols(); ++r) {
        double prod = 1.0;
        for (NodeId v : edge.members()) {
            if (v >= f.rows()) throw std::invalid_argument("cp_alpha: member outside factor rows");
            prod *= f(v, r);
        }
        total += prod;
    }
    return total;
}

CPResult cp_factorize(const std::vector<WeightedHyperedge>& weights, std::size_t num_nodes,
                      std::size_t rank, std::size_t iterations, std::uint64_t seed) {
    if (rank < 1) throw std::invalid_argument("cp_factorize: rank must be >= 1");
    CPResult out;
    out.factors.factors = Matrix(num_nodes, rank, 0.0);
    Matrix& f = out.factors.factors;

    double weight_total = 0.0;
    double size_total = 0.0;
    std::vector<std::vector<std::size_t>> by_node(num_nodes);
    for (std::size_t e = 0; e < weights.size(); ++e) {
        const auto& w = weights[e];
        if (!(w.weight >= 0.0)) throw std::invalid_argument("cp_factorize: negative weight");
        for (NodeId v : w.edge.members()) {
            if (v >= num_nodes) throw std::invalid_argument("cp_factorize: member exceeds N");
            by_node[v].push_back(e);
        }
        weight_total += w.weight;
        size_total += static_cast<double>(w.edge.size());
    }
    if (rank > weights.size()) {
        out.warnings.push_back("rank " + std::to_string(rank) + " exceeds the " +
                               std::to_string(weights.size()) +
                               " observed hyperedges (overparameterized)");
    }

    auto residual = [&] {
        double r = 0.0;
        for (const auto& w : weights) {
            const double d = w.weight - cp_alpha(out.factors, w.edge);
            r += d * d;
        }
        return r;
    };
    if (weights.empty() || weight_total == 0.0) {
        out.residual = residual();
        return out;
    }

    // Start near the scale where each rank-one term carries 1/R of the mean weight.
    const double mean_weight = weight_total / static_cast<double>(weights.size());
    const double mean_size = size_total / static_cast<double>(weights.size());
    const double scale = std::pow(mean_weight / static_cast<double>(rank), 1.0 / mean_size);
    Rng rng(seed);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        if (by_node[v].empty()) continue;
        for (std::size_t r = 0; r < rank; ++r) f(v, r) = scale * (0.5 + rng.uniform());
    }

    // partial(e, v, r) = prod_{u in e, u != v} F[u, r]
    auto partial = [&](const Hyperedge& edge, NodeId v, std::size_t r) {
        double prod = 1.0;
        for (NodeId u : edge.members()) {
            if (u != v) prod *= f(u, r);
        }
        return prod;
    };

    std::vector<double> numer(rank), denom(rank);
    for (std::size_t sweep = 0; sweep < iterations; ++sweep) {
        for (std::size_t v = 0; v < num_nodes; ++v) {
            if (by_node[v].empty()) continue;
            std::fill(numer.begin(), numer.end(), 0.0);
            std::fill(denom.begin(), denom.end(), 0.0);
            for (std::size_t e : by_node[v]) {
                const auto& w = weights[e];
                const double fitted = cp_alpha(out.factors, w.edge);
                for (std::size_t r = 0; r < rank; ++r) {
                    const double p = partial(w.edge, v, r);
                    numer[r] += w.weight * p;
                    denom[r] += fitted * p;
                }
            }
            for (std::size_t r = 0; r < rank; ++r) {
                if (denom[r] > 0.0) f(v, r) *= numer[r] / denom[r];
            }
        }
        out.residual_trace.push_back(residual());
        if (out.residual_trace.back() < 1e-30) break;
    }
    out.residual = residual();
    return out;
}

}  // namespace hth
