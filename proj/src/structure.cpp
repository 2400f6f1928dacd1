#include "hth/structure.hpp"

#include "hth/parallel.hpp"
#include "hth/random.hpp"
#include "hth/simulator.hpp"
#include "hth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace hth {

std::vector<Hyperedge> enumerate_cliques(std::size_t num_nodes,
                                         const std::vector<std::pair<NodeId, NodeId>>& edges,
                                         std::size_t k_min, std::size_t k_max) {
    if (k_min < 2 || k_min > k_max) throw std::invalid_argument("need 2 <= k_min <= k_max");
    std::vector<std::vector<bool>> adj(num_nodes, std::vector<bool>(num_nodes, false));
    for (const auto& [a, b] : edges) {
        if (a >= num_nodes || b >= num_nodes) throw std::invalid_argument("edge node out of range");
        if (a == b) continue;
        adj[a][b] = adj[b][a] = true;
    }

    // Bron-Kerbosch without pivoting, restricted to candidates greater than
    // the last member so every clique is produced exactly once.
    std::vector<Hyperedge> out;
    std::vector<NodeId> clique;
    std::function<void(const std::vector<NodeId>&)> extend = [&](const std::vector<NodeId>& pool) {
        if (clique.size() >= k_min) out.emplace_back(clique);
        if (clique.size() == k_max) return;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const NodeId v = pool[i];
            std::vector<NodeId> next;
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                if (adj[v][pool[j]]) next.push_back(pool[j]);
            }
            clique.push_back(v);
            extend(next);
            clique.pop_back();
        }
    };
    std::vector<NodeId> all(num_nodes);
    for (std::size_t v = 0; v < num_nodes; ++v) all[v] = v;
    extend(all);

    std::sort(out.begin(), out.end(), [](const Hyperedge& a, const Hyperedge& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.members() < b.members();
    });
    return out;
}

CandidateSet candidates_from_pairwise(const ModelParams& pairwise_fit, const CandidateConfig& cfg) {
    const std::size_t n = pairwise_fit.num_nodes();
    if (!(cfg.theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
    if (cfg.k_min < 2 || cfg.k_min > cfg.k_max || cfg.k_max > std::max<std::size_t>(n, 2)) {
        throw std::invalid_argument("need 2 <= k_min <= k_max <= N");
    }
    CandidateSet out;
    out.stage1 = pairwise_fit;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            const double a = pairwise_fit.alpha(j, i) / pairwise_fit.beta;
            const double b = pairwise_fit.alpha(i, j) / pairwise_fit.beta;
            const double score =
                cfg.rule == SignificanceRule::min_direction ? std::min(a, b) : std::max(a, b);
            if (score > cfg.theta) out.significance_graph.emplace_back(i, j);
        }
    }
    out.candidates = enumerate_cliques(n, out.significance_graph, cfg.k_min, cfg.k_max);
    return out;
}

CandidateSet generate_candidates(const EventSequence& seq, double beta, const CandidateConfig& cfg) {
    const auto stage1 = fit(seq, {}, beta, 1.0, cfg.fit);
    return candidates_from_pairwise(stage1.params, cfg);
}

std::size_t parameter_count(const ModelParams& params, double prune) {
    const std::size_t n = params.num_nodes();
    std::size_t k = n + n * n;
    for (const auto& h : params.hyperedges) {
        if (h.weight > prune) ++k;
    }
    return k;
}

double aic(double log_likelihood, std::size_t k) {
    return 2.0 * static_cast<double>(k) - 2.0 * log_likelihood;
}

double bic(double log_likelihood, std::size_t k, std::size_t n_events) {
    return static_cast<double>(k) * std::log(static_cast<double>(n_events)) - 2.0 * log_likelihood;
}

ModelComparison compare_models(const EventSequence& seq, const FitResult& baseline,
                               const FitResult& full) {
    const auto fp = seq.fingerprint();
    if (baseline.sequence_fingerprint != fp || full.sequence_fingerprint != fp) {
        throw std::invalid_argument("compare_models: fits were not made on this sequence");
    }
    if (baseline.params.beta != full.params.beta) {
        throw std::invalid_argument("compare_models: fits use different beta");
    }
    ModelComparison c;
    c.n_events = seq.size();
    c.logL_baseline = baseline.log_likelihood;
    c.logL_full = full.log_likelihood;
    c.k_baseline = parameter_count(baseline.params);
    c.k_full = parameter_count(full.params);
    c.delta_L = c.logL_full - c.logL_baseline;
    c.lr_stat = 2.0 * c.delta_L;
    c.aic_diff = aic(c.logL_baseline, c.k_baseline) - aic(c.logL_full, c.k_full);
    c.bic_diff = bic(c.logL_baseline, c.k_baseline, c.n_events) - bic(c.logL_full, c.k_full, c.n_events);
    c.lr_df = static_cast<std::int64_t>(c.k_full) - static_cast<std::int64_t>(c.k_baseline);
    if (c.lr_df > 0) {
        c.chi2_critical = stats::chi_squared_quantile(0.95, static_cast<double>(c.lr_df));
        c.lr_significant = c.lr_stat > c.chi2_critical;
    }
    return c;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw std::invalid_argument("bad log grid");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
    out.back() = hi;
    return out;
}

L1Path l1_path(const EventSequence& seq, const std::vector<Hyperedge>& candidates, double beta,
               double delta, const std::vector<double>& lambdas, const FitConfig& cfg) {
    if (lambdas.empty()) throw std::invalid_argument("l1_path: empty lambda grid");
    if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
        throw std::invalid_argument("l1_path: lambdas must be ascending");
    }
    L1Path path;
    path.candidates = candidates;
    std::optional<ModelParams> warm;
    for (double lambda : lambdas) {
        FitConfig c = cfg;
        c.l1_penalty = lambda;
        if (warm) c.init.start = warm;
        const auto fr = fit(seq, candidates, beta, delta, c);
        warm = fr.params;
        L1PathPoint pt;
        pt.lambda = lambda;
        for (const auto& h : fr.params.hyperedges) pt.weights.push_back(h.weight);
        pt.log_likelihood = fr.log_likelihood;
        pt.k = parameter_count(fr.params, kPruneThreshold);
        pt.aic = aic(pt.log_likelihood, pt.k);
        pt.bic = bic(pt.log_likelihood, pt.k, seq.size());
        path.points.push_back(std::move(pt));
    }
    auto select = [&](auto score) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < path.points.size(); ++i) {
            if (score(path.points[i]) <= score(path.points[best]) + 1e-9) best = i;
        }
        return best;
    };
    path.best_bic = select([](const L1PathPoint& p) { return p.bic; });
    path.best_aic = select([](const L1PathPoint& p) { return p.aic; });
    return path;
}

DeltaScan delta_grid_search(const EventSequence& seq, const std::vector<Hyperedge>& candidates,
                            double beta, const std::vector<double>& deltas, const FitConfig& cfg,
                            std::size_t workers) {
    if (deltas.empty()) throw std::invalid_argument("delta_grid_search: empty grid");
    for (double d : deltas) {
        if (!(d > 0.0)) throw std::invalid_argument("delta_grid_search: deltas must be > 0");
    }
    DeltaScan scan;
    scan.points.resize(deltas.size());
    parallel_for(deltas.size(), workers, [&](std::size_t i) {
        const auto fr = fit(seq, candidates, beta, deltas[i], cfg);
        auto& pt = scan.points[i];
        pt.delta = deltas[i];
        pt.log_likelihood = fr.log_likelihood;
        for (const auto& h : fr.params.hyperedges) pt.weights.push_back(h.weight);
        for (const auto& e : candidates) pt.total_completions += compute_completions(seq, e, deltas[i]).size();
    });
    for (std::size_t i = 1; i < scan.points.size(); ++i) {
        if (scan.points[i].log_likelihood > scan.points[scan.best].log_likelihood) scan.best = i;
    }
    return scan;
}

Matrix interaction_matrix(const ModelParams& params) {
    const std::size_t n = params.num_nodes();
    Matrix a(n, n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) a(r, c) = params.alpha(r, c) / params.beta;
    }
    for (const auto& h : params.hyperedges) {
        const auto& m = h.edge.members();
        const double share = h.weight / (params.beta * static_cast<double>(m.size() - 1));
        for (NodeId target : m) {
            for (NodeId source : m) {
                if (target != source) a(target, source) += share;
            }
        }
    }
    return a;
}

namespace {

// Perron root of an irreducible block by power iteration on B + I; the shift
// makes the block primitive, so the Collatz-Wielandt bounds close in.
double irreducible_radius(const Matrix& a, const std::vector<std::size_t>& idx, double tol,
                          std::size_t max_iters) {
    const std::size_t m = idx.size();
    if (m == 1) return a(idx[0], idx[0]);
    std::vector<double> x(m, 1.0), y(m);
    double lo = 0.0, hi = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        for (std::size_t r = 0; r < m; ++r) {
            double s = x[r];
            for (std::size_t c = 0; c < m; ++c) s += a(idx[r], idx[c]) * x[c];
            y[r] = s;
        }
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        double norm = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double ratio = y[r] / x[r];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            norm = std::max(norm, y[r]);
        }
        for (std::size_t r = 0; r < m; ++r) x[r] = y[r] / norm;
        if (hi - lo <= tol * hi) break;
    }
    return 0.5 * (lo + hi) - 1.0;
}

}  // namespace

double spectral_radius(const Matrix& a, double tol, std::size_t max_iters) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("spectral_radius: matrix must be square");
    if (n == 0) return 0.0;
    for (double v : a.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("spectral_radius: entries must be finite and >= 0");
        }
    }
    // reach(i, j): j reachable from i through positive entries (reflexive)
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        reach[i][i] = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (a(i, j) > 0.0) reach[i][j] = true;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[k][j]) reach[i][j] = true;
            }
        }
    }
    // the spectrum is the union of the strongly connected blocks' spectra
    std::vector<bool> done(n, false);
    double rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        std::vector<std::size_t> block;
        for (std::size_t j = i; j < n; ++j) {
            if (reach[i][j] && reach[j][i]) {
                block.push_back(j);
                done[j] = true;
            }
        }
        rho = std::max(rho, irreducible_radius(a, block, tol, max_iters));
    }
    return rho;
}

ModelParams scale_strength(const ModelParams& base, double multiplier, StrengthScope scope) {
    ModelParams p = base;
    if (scope == StrengthScope::all_excitation) {
        for (std::size_t r = 0; r < p.alpha.rows(); ++r) {
            for (std::size_t c = 0; c < p.alpha.cols(); ++c) p.alpha(r, c) *= multiplier;
        }
    }
    for (auto& h : p.hyperedges) h.weight *= multiplier;
    return p;
}

PhaseScan phase_scan(const PhaseScanConfig& cfg) {
    cfg.base.validate();
    if (cfg.multipliers.empty()) throw std::invalid_argument("phase_scan: empty strength grid");
    if (!std::is_sorted(cfg.multipliers.begin(), cfg.multipliers.end())) {
        throw std::invalid_argument("phase_scan: multipliers must be ascending");
    }
    if (cfg.seeds_per_point < 1) throw std::invalid_argument("phase_scan: need >= 1 seed");

    const std::size_t points = cfg.multipliers.size();
    const std::size_t seeds = cfg.seeds_per_point;
    struct Job {
        std::size_t events{0};
        bool cap_hit{false};
        std::optional<double> rho_hat;
        std::string failure;
    };
    std::vector<Job> jobs(points * seeds);
    const auto candidates = cfg.base.edges();

    parallel_for(jobs.size(), cfg.workers, [&](std::size_t k) {
        const std::size_t p = k / seeds;
        const std::size_t s = k % seeds;
        auto& job = jobs[k];
        try {
            const auto params = scale_strength(cfg.base, cfg.multipliers[p], cfg.scope);
            // same seed stream at every strength
            const auto sim = simulate({params, cfg.horizon, derive_seed(cfg.seed, s), cfg.event_cap});
            job.events = sim.sequence.size();
            job.cap_hit = sim.cap_hit;
            const auto fr = fit(sim.sequence, candidates, params.beta, params.delta, cfg.fit);
            job.rho_hat = spectral_radius(interaction_matrix(fr.params));
        } catch (const std::exception& e) {
            job.failure = e.what();
        }
    });

    PhaseScan scan;
    for (std::size_t p = 0; p < points; ++p) {
        PhasePoint pt;
        pt.multiplier = cfg.multipliers[p];
        pt.rho_true = spectral_radius(
            interaction_matrix(scale_strength(cfg.base, pt.multiplier, cfg.scope)));
        double events = 0.0, capped = 0.0, rho = 0.0;
        std::size_t fitted = 0;
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto& job = jobs[p * seeds + s];
            events += static_cast<double>(job.events);
            capped += job.cap_hit ? 1.0 : 0.0;
            if (job.rho_hat) {
                rho += *job.rho_hat;
                ++fitted;
            }
            if (!job.failure.empty()) pt.failures.push_back(job.failure);
        }
        pt.mean_events = events / static_cast<double>(seeds);
        pt.cap_fraction = capped / static_cast<double>(seeds);
        pt.rho_inferred = fitted ? rho / static_cast<double>(fitted)
                                 : std::numeric_limits<double>::quiet_NaN();
        scan.points.push_back(std::move(pt));
    }

    auto rho_at = [&](double s) {
        return spectral_radius(interaction_matrix(scale_strength(cfg.base, s, cfg.scope)));
    };
    double hi = 1.0;
    while (rho_at(hi) < 1.0 && hi < 1e6) hi *= 2.0;
    if (rho_at(hi) >= 1.0) {
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (rho_at(mid) < 1.0 ? lo : hi) = mid;
        }
        scan.critical_strength = 0.5 * (lo + hi);
    }
    for (const auto& pt : scan.points) {
        if (pt.cap_fraction > 0.5) {
            scan.onset_strength = pt.multiplier;
            break;
        }
    }
    for (std::size_t p = 1; p < scan.points.size(); ++p) {
        const auto& a = scan.points[p - 1];
        const auto& b = scan.points[p];
        if (a.rho_inferred < 1.0 && b.rho_inferred >= 1.0) {
            const double w = (1.0 - a.rho_inferred) / (b.rho_inferred - a.rho_inferred);
            scan.inferred_crossing = a.multiplier + w * (b.multiplier - a.multiplier);
            break;
        }
    }
    if (scan.onset_strength && scan.critical_strength) {
        scan.onset_ratio = *scan.onset_strength / *scan.critical_strength;
    }
    return scan;
}

}  // namespace hth
