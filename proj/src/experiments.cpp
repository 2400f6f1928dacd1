#include "hth/experiments.hpp"

#include "hth/copula.hpp"
#include "hth/parallel.hpp"
#include "hth/random.hpp"
#include "hth/simulator.hpp"
#include "hth/stats.hpp"
#include "hth/structure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hth {

using io::json;

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"1", "1b", "2", "3", "4", "5",
                                              "6", "7", "8", "9", "11"};
    return ids;
}

ModelParams canonical_system() {
    auto p = ModelParams::poisson({0.6, 0.6, 0.3}, 1.0, 0.5);
    p.alpha(2, 0) = 0.4;
    p.hyperedges.push_back({Hyperedge({0, 1}), 0.4});
    return p;
}

namespace {

bool known_id(const std::string& id) {
    const auto& ids = experiment_ids();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

ModelParams four_node_l1_system() {
    auto p = ModelParams::poisson({0.7, 0.7, 0.3, 0.5}, 1.0, 0.5);
    p.alpha(2, 0) = 0.4;
    p.hyperedges.push_back({Hyperedge({0, 1}), 0.4});
    return p;
}

// 3-edge on {0,1,2} plus weak mutual excitation inside it, so stage 1 sees
// the triangle, and a pairwise-only coupling 2 <-> 3.
ModelParams triple_system() {
    auto p = ModelParams::poisson({0.5, 0.5, 0.5, 0.5}, 1.0, 0.5);
    for (NodeId i = 0; i < 3; ++i) {
        for (NodeId j = 0; j < 3; ++j) {
            if (i != j) p.alpha(i, j) = 0.12;
        }
    }
    p.alpha(3, 2) = 0.3;
    p.alpha(2, 3) = 0.3;
    p.hyperedges.push_back({Hyperedge({0, 1, 2}), 0.3});
    return p;
}

ModelParams cycle_system() {
    auto p = ModelParams::poisson({0.3, 0.3, 0.3}, 1.0, 0.5);
    for (NodeId i = 0; i < 3; ++i) {
        p.alpha((i + 1) % 3, i) = 0.25;
        p.alpha(i, i) = 0.15;
    }
    p.hyperedges.push_back({Hyperedge({0, 1}), 0.2});
    return p;
}

ModelParams scaling_system(std::size_t n) {
    auto p = ModelParams::poisson(std::vector<double>(n, 0.5), 1.0, 0.5);
    for (NodeId i = 0; i < n; ++i) p.alpha((i + 1) % n, i) = 0.3;
    for (NodeId k = 0; k < n / 5; ++k) p.hyperedges.push_back({Hyperedge({2 * k, 2 * k + 1}), 0.2});
    return p;
}

std::vector<double> arange(double lo, double hi, double step) {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + step * static_cast<double>(i));
    return out;
}

json fit_config_json(const FitConfig& c) {
    json j{{"max_iters", c.max_iters},
           {"tol", c.tol},
           {"l1_penalty", c.l1_penalty},
           {"compensator", c.compensator.mode == CompensatorMode::piecewise ? "piecewise" : "naive"},
           {"multiplicity",
            c.compensator.multiplicity == Multiplicity::per_member ? "per_member" : "single"},
           {"pairwise_init", c.init.pairwise_init},
           {"hyperedge_init", c.init.hyperedge_init},
           {"jitter", c.init.jitter}};
    if (c.init.jitter_seed) j["jitter_seed"] = *c.init.jitter_seed;
    return j;
}

FitConfig fit_config_from_json(const json& j, FitConfig c) {
    c.max_iters = j.value("max_iters", c.max_iters);
    c.tol = j.value("tol", c.tol);
    c.l1_penalty = j.value("l1_penalty", c.l1_penalty);
    if (j.contains("compensator")) {
        const auto m = j.at("compensator").get<std::string>();
        if (m == "piecewise") c.compensator.mode = CompensatorMode::piecewise;
        else if (m == "naive") c.compensator.mode = CompensatorMode::naive;
        else throw std::invalid_argument("unknown compensator mode '" + m + "'");
    }
    if (j.contains("multiplicity")) {
        const auto m = j.at("multiplicity").get<std::string>();
        if (m == "per_member") c.compensator.multiplicity = Multiplicity::per_member;
        else if (m == "single") c.compensator.multiplicity = Multiplicity::single;
        else throw std::invalid_argument("unknown multiplicity '" + m + "'");
    }
    c.init.pairwise_init = j.value("pairwise_init", c.init.pairwise_init);
    c.init.hyperedge_init = j.value("hyperedge_init", c.init.hyperedge_init);
    c.init.jitter = j.value("jitter", c.init.jitter);
    if (j.contains("jitter_seed")) c.init.jitter_seed = j.at("jitter_seed").get<std::uint64_t>();
    return c;
}

double rel_err(double estimate, double truth) { return (estimate - truth) / truth; }

json fit_summary(const FitResult& fr) {
    return {{"params", io::to_json(fr.params)},
            {"iterations", fr.iterations},
            {"converged", fr.converged},
            {"log_likelihood", fr.log_likelihood},
            {"final_objective", fr.trace.empty() ? 0.0 : fr.trace.back()},
            {"warnings", fr.warnings}};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

struct StageFailure {};

class Stages {
public:
    explicit Stages(RunRecord& rec) : rec_(rec) {}

    template <class F>
    void run(const std::string& name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            f();
        } catch (const std::exception& e) {
            rec_.failed_stage = name;
            rec_.error = e.what();
            record(name, t0);
            throw StageFailure{};
        }
        record(name, t0);
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec_.timings[name] = rec_.timings.value(name, 0.0) + s;
    }
    RunRecord& rec_;
};

void verdict(RunRecord& rec, std::string criterion, bool passed, std::string detail) {
    rec.verdicts.push_back({std::move(criterion), passed, std::move(detail)});
}

std::vector<SimResult> simulate_seeds(const ExperimentSpec& spec, const ModelParams& params,
                                      std::size_t count, std::uint64_t base) {
    std::vector<SimConfig> cfgs;
    for (std::size_t k = 0; k < count; ++k) {
        cfgs.push_back({params, spec.horizon, derive_seed(base, k), spec.event_cap});
    }
    return simulate_batch(cfgs, spec.workers);
}

std::vector<FitResult> fit_all(const std::vector<SimResult>& sims,
                               const std::vector<Hyperedge>& candidates, double beta, double delta,
                               const FitConfig& cfg, std::size_t workers) {
    std::vector<FitResult> out(sims.size());
    parallel_for(sims.size(), workers, [&](std::size_t k) {
        out[k] = fit(sims[k].sequence, candidates, beta, delta, cfg);
    });
    return out;
}

// Relative errors of every baseline, every non-zero pairwise weight and every
// hyperedge weight, hyperedges matched by member set.
struct Recovery {
    std::vector<double> mu;
    std::vector<double> pairwise;
    std::vector<double> hyper;
    double max_spurious_pairwise{0.0};
};

Recovery recovery(const ModelParams& truth, const ModelParams& est) {
    Recovery r;
    const std::size_t n = truth.num_nodes();
    for (std::size_t i = 0; i < n; ++i) r.mu.push_back(rel_err(est.mu[i], truth.mu[i]));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (truth.alpha(i, j) > 0.0) {
                r.pairwise.push_back(rel_err(est.alpha(i, j), truth.alpha(i, j)));
            } else {
                r.max_spurious_pairwise = std::max(r.max_spurious_pairwise, est.alpha(i, j));
            }
        }
    }
    for (const auto& h : truth.hyperedges) {
        double w = 0.0;
        for (const auto& g : est.hyperedges) {
            if (g.edge == h.edge) w = g.weight;
        }
        r.hyper.push_back(rel_err(w, h.weight));
    }
    return r;
}

double max_abs(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

double hyper_estimate(const FitResult& fr, const Hyperedge& e) {
    for (const auto& g : fr.params.hyperedges) {
        if (g.edge == e) return g.weight;
    }
    return 0.0;
}

void run_recovery(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    std::vector<SimResult> sims;
    std::vector<FitResult> fits;
    const auto candidates = spec.system.edges();
    st.run("simulate", [&] { sims = simulate_seeds(spec, spec.system, spec.replicates, spec.seed); });
    st.run("fit", [&] {
        fits = fit_all(sims, candidates, spec.system.beta, spec.system.delta, spec.fit, spec.workers);
    });
    st.run("analyze", [&] {
        CsvTable table{"recovery", {"seed_index", "events", "max_mu_err", "max_pairwise_err", "hyper_err"}, {}};
        json runs = json::array();
        std::vector<std::size_t> passing;
        for (std::size_t k = 0; k < fits.size(); ++k) {
            const auto r = recovery(spec.system, fits[k].params);
            const bool ok = max_abs(r.mu) < 0.07 && max_abs(r.pairwise) < 0.07 && max_abs(r.hyper) < 0.15;
            if (ok) passing.push_back(k);
            runs.push_back({{"seed", derive_seed(spec.seed, k)},
                            {"events", sims[k].sequence.size()},
                            {"mu_rel_err", r.mu},
                            {"pairwise_rel_err", r.pairwise},
                            {"hyper_rel_err", r.hyper},
                            {"max_spurious_pairwise", r.max_spurious_pairwise},
                            {"within_bands", ok},
                            {"fit", fit_summary(fits[k])}});
            table.rows.push_back({static_cast<double>(k), static_cast<double>(sims[k].sequence.size()),
                                  max_abs(r.mu), max_abs(r.pairwise), max_abs(r.hyper)});
        }
        rec.results["runs"] = runs;
        rec.results["passing_seed_indices"] = passing;
        rec.tables.push_back(std::move(table));
        std::string detail = std::to_string(passing.size()) + "/" + std::to_string(fits.size()) +
                             " seeds within bands";
        if (!passing.empty()) detail += "; first documented seed " + std::to_string(derive_seed(spec.seed, passing[0]));
        verdict(rec, "recovery: mu, pairwise within 7% and hyperedge within 15% at a documented seed",
                !passing.empty(), detail);
    });
}

void run_bias(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    std::vector<SimResult> sims;
    std::vector<FitResult> piecewise, naive;
    const auto candidates = spec.system.edges();
    if (spec.system.hyperedges.empty()) throw std::invalid_argument("bias experiment needs a hyperedge");
    const auto& edge = spec.system.hyperedges.front();
    st.run("simulate", [&] { sims = simulate_seeds(spec, spec.system, spec.replicates, spec.seed); });
    st.run("fit", [&] {
        FitConfig pc = spec.fit;
        pc.compensator.mode = CompensatorMode::piecewise;
        FitConfig nc = spec.fit;
        nc.compensator.mode = CompensatorMode::naive;
        piecewise = fit_all(sims, candidates, spec.system.beta, spec.system.delta, pc, spec.workers);
        naive = fit_all(sims, candidates, spec.system.beta, spec.system.delta, nc, spec.workers);
    });
    st.run("analyze", [&] {
        CsvTable table{"bias", {"seed_index", "events", "hyper_piecewise", "hyper_naive", "pairwise_abs_rel_err"}, {}};
        std::vector<double> hp, hn, pw;
        for (std::size_t k = 0; k < sims.size(); ++k) {
            const auto r = recovery(spec.system, piecewise[k].params);
            double e = 0.0;
            for (double x : r.pairwise) e += std::abs(x);
            e /= static_cast<double>(std::max<std::size_t>(1, r.pairwise.size()));
            hp.push_back(hyper_estimate(piecewise[k], edge.edge));
            hn.push_back(hyper_estimate(naive[k], edge.edge));
            pw.push_back(e);
            table.rows.push_back({static_cast<double>(k), static_cast<double>(sims[k].sequence.size()),
                                  hp.back(), hn.back(), e});
        }
        const double bias_p = stats::mean(hp) / edge.weight - 1.0;
        const double bias_n = stats::mean(hn) / edge.weight - 1.0;
        const double pw_mre = stats::mean(pw);
        rec.results["hyper_piecewise"] = hp;
        rec.results["hyper_naive"] = hn;
        rec.results["bias_piecewise"] = bias_p;
        rec.results["bias_naive"] = bias_n;
        rec.results["cv_piecewise"] = stats::stddev(hp) / stats::mean(hp);
        rec.results["pairwise_mean_rel_err"] = pw_mre;
        rec.tables.push_back(std::move(table));
        verdict(rec, "pairwise mean relative error < 5%", pw_mre < 0.05, fmt(100 * pw_mre) + "%");
        verdict(rec, "piecewise hyperedge bias in [-35%, -10%]", bias_p >= -0.35 && bias_p <= -0.10,
                fmt(100 * bias_p) + "%");
        verdict(rec, "naive bias more negative than piecewise", bias_n < bias_p,
                "naive " + fmt(100 * bias_n) + "% vs piecewise " + fmt(100 * bias_p) + "%");
    });
}

std::vector<Hyperedge> all_pairs(std::size_t n) {
    std::vector<Hyperedge> out;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) out.push_back(Hyperedge({i, j}));
    }
    return out;
}

void run_l1(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    SimResult sim;
    L1Path path;
    const auto candidates = all_pairs(spec.system.num_nodes());
    st.run("simulate", [&] { sim = simulate({spec.system, spec.horizon, spec.seed, spec.event_cap}); });
    st.run("fit", [&] {
        path = l1_path(sim.sequence, candidates, spec.system.beta, spec.system.delta, spec.grid, spec.fit);
    });
    st.run("analyze", [&] {
        CsvTable table{"l1_path", {"lambda", "log_likelihood", "k", "aic", "bic"}, {}};
        for (const auto& c : candidates) table.header.push_back("w" + c.to_string());
        for (const auto& pt : path.points) {
            std::vector<double> row{pt.lambda, pt.log_likelihood, static_cast<double>(pt.k), pt.aic, pt.bic};
            row.insert(row.end(), pt.weights.begin(), pt.weights.end());
            table.rows.push_back(std::move(row));
        }
        bool true_alive = true;
        std::size_t decoys_dead = 0;
        std::size_t decoys = 0;
        json first_zero = json::object();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const bool is_true = std::any_of(spec.system.hyperedges.begin(), spec.system.hyperedges.end(),
                                             [&](const WeightedHyperedge& h) { return h.edge == candidates[c]; });
            std::optional<std::size_t> zero_at;
            for (std::size_t i = 0; i < path.points.size(); ++i) {
                if (path.points[i].weights[c] <= kPruneThreshold) {
                    zero_at = i;
                    break;
                }
            }
            if (is_true) {
                if (zero_at) true_alive = false;
            } else {
                ++decoys;
                if (zero_at && *zero_at <= path.best_bic) ++decoys_dead;
            }
            first_zero[candidates[c].to_string()] = zero_at ? json(path.points[*zero_at].lambda) : json(nullptr);
        }
        rec.results["events"] = sim.sequence.size();
        rec.results["lambda_star_bic"] = path.points[path.best_bic].lambda;
        rec.results["lambda_star_aic"] = path.points[path.best_aic].lambda;
        rec.results["first_zero_lambda"] = first_zero;
        rec.results["decoys"] = decoys;
        rec.results["decoys_zero_by_lambda_star"] = decoys_dead;
        rec.tables.push_back(std::move(table));
        verdict(rec, "true edge nonzero at every lambda", true_alive, "");
        verdict(rec, ">= 5 decoys reach 0 at or before lambda*", decoys_dead >= 5,
                std::to_string(decoys_dead) + "/" + std::to_string(decoys));
        verdict(rec, "AIC and BIC select the same lambda*", path.best_aic == path.best_bic,
                "BIC " + fmt(path.points[path.best_bic].lambda) + ", AIC " + fmt(path.points[path.best_aic].lambda));
    });
}

void run_multistart(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    SimResult sim;
    std::vector<FitResult> fits(spec.replicates);
    st.run("simulate", [&] { sim = simulate({spec.system, spec.horizon, spec.seed, spec.event_cap}); });
    st.run("fit", [&] {
        parallel_for(spec.replicates, spec.workers, [&](std::size_t r) {
            FitConfig c = spec.fit;
            c.init.jitter_seed = derive_seed(spec.seed, 1000 + r);
            fits[r] = fit(sim.sequence, spec.system.edges(), spec.system.beta, spec.system.delta, c);
        });
    });
    st.run("analyze", [&] {
        std::vector<double> ll;
        CsvTable table{"multistart", {"start", "log_likelihood", "iterations", "hyper_weight"}, {}};
        for (std::size_t r = 0; r < fits.size(); ++r) {
            ll.push_back(fits[r].log_likelihood);
            table.rows.push_back({static_cast<double>(r), fits[r].log_likelihood,
                                  static_cast<double>(fits[r].iterations),
                                  fits[r].params.hyperedges.empty() ? 0.0 : fits[r].params.hyperedges[0].weight});
        }
        const double sd = stats::stddev(ll);
        rec.results["events"] = sim.sequence.size();
        rec.results["log_likelihoods"] = ll;
        rec.results["std"] = sd;
        rec.tables.push_back(std::move(table));
        verdict(rec, "final log-likelihood std < 0.05 nats", sd < 0.05, fmt(sd) + " nats");
    });
}

void run_phase(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    PhaseScan scan;
    st.run("scan", [&] {
        PhaseScanConfig pc;
        pc.base = spec.system;
        pc.multipliers = spec.grid;
        pc.horizon = spec.horizon;
        pc.seeds_per_point = spec.replicates;
        pc.event_cap = spec.event_cap;
        pc.seed = spec.seed;
        pc.fit = spec.fit;
        pc.workers = spec.workers;
        scan = phase_scan(pc);
    });
    st.run("analyze", [&] {
        CsvTable table{"phase_scan", {"multiplier", "mean_events", "cap_fraction", "rho_true", "rho_inferred"}, {}};
        json failures = json::array();
        for (const auto& pt : scan.points) {
            table.rows.push_back({pt.multiplier, pt.mean_events, pt.cap_fraction, pt.rho_true, pt.rho_inferred});
            for (const auto& f : pt.failures) failures.push_back({{"multiplier", pt.multiplier}, {"error", f}});
        }
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        rec.results["critical_strength"] = opt(scan.critical_strength);
        rec.results["onset_strength"] = opt(scan.onset_strength);
        rec.results["onset_ratio"] = opt(scan.onset_ratio);
        rec.results["inferred_crossing"] = opt(scan.inferred_crossing);
        rec.results["failures"] = failures;
        rec.tables.push_back(std::move(table));
        const bool ratio_ok = scan.onset_ratio && *scan.onset_ratio >= 1.0 && *scan.onset_ratio <= 1.5;
        verdict(rec, "cascade onset / critical strength in [1.0, 1.5]", ratio_ok,
                scan.onset_ratio ? fmt(*scan.onset_ratio) : "no onset in grid");
        verdict(rec, "inferred rho crosses 1 within the grid", scan.inferred_crossing.has_value(),
                scan.inferred_crossing ? "at " + fmt(*scan.inferred_crossing) : "no crossing");
    });
}

void run_copula(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    CopulaReport report;
    st.run("simulate", [&] {
        CopulaConfig cc;
        cc.params = spec.system;
        cc.horizon = spec.horizon;
        cc.replicates = spec.replicates;
        cc.threshold = spec.threshold;
        cc.seed = spec.seed;
        cc.workers = spec.workers;
        report = copula_validation(cc);
    });
    st.run("analyze", [&] {
        CsvTable table{"copula", {"with_hyperedge", "tau_upper", "rho_probit", "tail_pairs"}, {}};
        std::vector<double> th, t0;
        for (const auto& r : report.replicates) {
            table.rows.push_back({r.with_hyperedge ? 1.0 : 0.0, r.stats.tau_upper, r.stats.rho_probit,
                                  static_cast<double>(r.stats.tail_pairs)});
            (r.with_hyperedge ? th : t0).push_back(r.stats.tau_upper);
        }
        rec.results["pair"] = {report.node_a, report.node_b};
        rec.results["tau_mean_hth"] = stats::mean(th);
        rec.results["tau_mean_null"] = stats::mean(t0);
        rec.results["tau_welch"] = {{"t", report.tau_test.t}, {"df", report.tau_test.df}, {"p", report.tau_test.p}};
        rec.results["rho_welch"] = {{"t", report.rho_test.t}, {"df", report.rho_test.df}, {"p", report.rho_test.p}};
        rec.tables.push_back(std::move(table));
        const bool ok = report.tau_test.p < 0.01 && stats::mean(th) > stats::mean(t0);
        verdict(rec, "tau_U higher under HTH, Welch p < 0.01", ok, "p = " + fmt(report.tau_test.p));
    });
}

void run_higher_order(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    SimResult sim;
    CandidateSet cs;
    FitResult fr;
    st.run("simulate", [&] { sim = simulate({spec.system, spec.horizon, spec.seed, spec.event_cap}); });
    st.run("candidates", [&] {
        CandidateConfig cc;
        cc.k_max = std::min<std::size_t>(3, spec.system.num_nodes());
        cs = generate_candidates(sim.sequence, spec.system.beta, cc);
    });
    st.run("fit", [&] {
        FitConfig c = spec.fit;
        c.l1_penalty = spec.penalty;
        fr = fit(sim.sequence, cs.candidates, spec.system.beta, spec.system.delta, c);
    });
    st.run("analyze", [&] {
        const auto& truth = spec.system.hyperedges.front();
        bool found = false;
        double estimate = 0.0;
        double worst_decoy = 0.0;
        std::size_t decoys = 0;
        json weights = json::object();
        for (const auto& g : fr.params.hyperedges) {
            weights[g.edge.to_string()] = g.weight;
            if (g.edge == truth.edge) {
                found = true;
                estimate = g.weight;
            } else {
                ++decoys;
                worst_decoy = std::max(worst_decoy, g.weight);
            }
        }
        json graph = json::array();
        for (auto [a, b] : cs.significance_graph) graph.push_back({a, b});
        const double err = rel_err(estimate, truth.weight);
        rec.results["events"] = sim.sequence.size();
        rec.results["significance_graph"] = graph;
        rec.results["weights"] = weights;
        rec.results["true_weight_rel_err"] = err;
        rec.results["decoys"] = decoys;
        rec.results["max_decoy_weight"] = worst_decoy;
        rec.results["fit"] = fit_summary(fr);
        verdict(rec, "stage 1 proposes the true 3-edge", found, "");
        verdict(rec, "true 3-edge within 15%", found && std::abs(err) < 0.15, fmt(100 * err) + "%");
        verdict(rec, "all 4 decoys below 0.01", decoys == 4 && worst_decoy < 0.01,
                std::to_string(decoys) + " decoys, max " + fmt(worst_decoy));
    });
}

void run_falsifiability(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    const ModelParams scenario_b = spec.alternate.value_or([&] {
        auto p = spec.system;
        p.hyperedges.clear();
        return p;
    }());
    const auto candidates = spec.system.edges();
    const std::vector<std::pair<std::string, const ModelParams*>> scenarios{{"A", &spec.system}, {"B", &scenario_b}};
    std::vector<SimResult> sims(2);
    std::vector<ModelComparison> cmp(2);
    std::vector<FitResult> full(2);
    st.run("simulate", [&] {
        for (std::size_t s = 0; s < 2; ++s) {
            sims[s] = simulate({*scenarios[s].second, spec.horizon, derive_seed(spec.seed, s), spec.event_cap});
        }
    });
    st.run("fit", [&] {
        parallel_for(2, spec.workers, [&](std::size_t s) {
            const auto& p = *scenarios[s].second;
            const auto base = fit(sims[s].sequence, {}, p.beta, p.delta, spec.fit);
            full[s] = fit(sims[s].sequence, candidates, p.beta, p.delta, spec.fit);
            cmp[s] = compare_models(sims[s].sequence, base, full[s]);
        });
    });
    st.run("analyze", [&] {
        CsvTable table{"falsifiability", {"scenario", "events", "delta_L", "aic_diff", "bic_diff", "lr_stat"}, {}};
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& c = cmp[s];
            rec.results[scenarios[s].first] = {{"events", c.n_events},       {"delta_L", c.delta_L},
                                               {"aic_diff", c.aic_diff},     {"bic_diff", c.bic_diff},
                                               {"lr_stat", c.lr_stat},       {"lr_df", c.lr_df},
                                               {"chi2_critical", c.chi2_critical},
                                               {"lr_significant", c.lr_significant},
                                               {"full_fit", fit_summary(full[s])}};
            table.rows.push_back({static_cast<double>(s), static_cast<double>(c.n_events), c.delta_L,
                                  c.aic_diff, c.bic_diff, c.lr_stat});
        }
        rec.tables.push_back(std::move(table));
        verdict(rec, "scenario A: delta_L > 3 and BIC favors HTH", cmp[0].delta_L > 3.0 && cmp[0].bic_diff > 0.0,
                "delta_L " + fmt(cmp[0].delta_L) + ", BIC diff " + fmt(cmp[0].bic_diff));
        verdict(rec, "scenario B: |delta_L| < 1 and BIC favors baseline",
                std::abs(cmp[1].delta_L) < 1.0 && cmp[1].bic_diff < 0.0,
                "delta_L " + fmt(cmp[1].delta_L) + ", BIC diff " + fmt(cmp[1].bic_diff));
    });
}

void run_delta(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    SimResult sim;
    DeltaScan scan;
    st.run("simulate", [&] { sim = simulate({spec.system, spec.horizon, spec.seed, spec.event_cap}); });
    st.run("fit", [&] {
        scan = delta_grid_search(sim.sequence, spec.system.edges(), spec.system.beta, spec.grid, spec.fit,
                                 spec.workers);
    });
    st.run("analyze", [&] {
        CsvTable table{"delta_scan", {"delta", "log_likelihood", "completions", "hyper_weight"}, {}};
        for (const auto& pt : scan.points) {
            table.rows.push_back({pt.delta, pt.log_likelihood, static_cast<double>(pt.total_completions),
                                  pt.weights.empty() ? 0.0 : pt.weights[0]});
        }
        const auto& best = scan.points[scan.best];
        const double truth = spec.system.hyperedges.front().weight;
        const double err = rel_err(best.weights.front(), truth);
        rec.results["events"] = sim.sequence.size();
        rec.results["best_delta"] = best.delta;
        rec.results["hyper_rel_err_at_peak"] = err;
        rec.tables.push_back(std::move(table));
        verdict(rec, "log-likelihood peaks at the true delta", best.delta == spec.system.delta,
                "argmax " + fmt(best.delta));
        verdict(rec, "hyperedge error at the peak < 5%", std::abs(err) < 0.05, fmt(100 * err) + "%");
    });
}

void run_scaling(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    ScalingReport report;
    std::vector<std::size_t> sizes;
    for (double g : spec.grid) sizes.push_back(static_cast<std::size_t>(g));
    st.run("benchmark", [&] { report = scaling_benchmark(sizes, spec.events_per_node, spec.repeats, spec.seed); });
    st.run("analyze", [&] {
        CsvTable table{"scaling",
                       {"nodes", "events", "seconds_per_iteration", "seconds_per_event_pair",
                        "streamed_seconds_per_iteration"},
                       {}};
        for (const auto& p : report.points) {
            table.rows.push_back({static_cast<double>(p.nodes), static_cast<double>(p.events),
                                  p.seconds_per_iteration, p.seconds_per_event_pair,
                                  p.streamed_seconds_per_iteration});
        }
        rec.tables.push_back(std::move(table));
        // timings are not reproducible, so they stay out of results
        rec.timings["scaling_exponent"] = report.exponent;
        rec.timings["streamed_scaling_exponent"] = report.streamed_exponent;
        json events = json::array();
        for (const auto& p : report.points) events.push_back(p.events);
        rec.results["events"] = events;
        verdict(rec, "wall-clock exponent in [1.7, 2.3]", report.exponent >= 1.7 && report.exponent <= 2.3,
                "exponent " + fmt(report.exponent));
    });
}

void run_beta_ablation(const ExperimentSpec& spec, RunRecord& rec, Stages& st) {
    const std::size_t points = spec.grid.size();
    std::vector<std::vector<double>> estimates(points);
    const auto& edge = spec.system.hyperedges.front();
    std::vector<std::vector<SimResult>> sims(points);
    st.run("simulate", [&] {
        for (std::size_t b = 0; b < points; ++b) {
            auto p = spec.system;
            p.beta = spec.grid[b];
            sims[b] = simulate_seeds(spec, p, spec.replicates, derive_seed(spec.seed, b));
        }
    });
    st.run("fit", [&] {
        for (std::size_t b = 0; b < points; ++b) {
            const auto fits = fit_all(sims[b], spec.system.edges(), spec.grid[b], spec.system.delta, spec.fit,
                                      spec.workers);
            for (const auto& f : fits) estimates[b].push_back(hyper_estimate(f, edge.edge));
        }
    });
    st.run("analyze", [&] {
        CsvTable table{"beta_ablation", {"beta", "mean_estimate", "bias", "cv"}, {}};
        std::vector<double> bias(points), cv(points);
        for (std::size_t b = 0; b < points; ++b) {
            const double m = stats::mean(estimates[b]);
            bias[b] = m / edge.weight - 1.0;
            cv[b] = stats::stddev(estimates[b]) / m;
            table.rows.push_back({spec.grid[b], m, bias[b], cv[b]});
        }
        rec.results["beta"] = spec.grid;
        rec.results["bias"] = bias;
        rec.results["cv"] = cv;
        rec.tables.push_back(std::move(table));
        double best_interior = std::numeric_limits<double>::infinity();
        for (std::size_t b = 1; b + 1 < points; ++b) best_interior = std::min(best_interior, std::abs(bias[b]));
        const bool shape = best_interior < std::abs(bias.front()) && best_interior < std::abs(bias.back());
        const bool cv_last = std::max_element(cv.begin(), cv.end()) == cv.end() - 1;
        verdict(rec, "bias non-monotonic: best interior |bias| below both ends", shape,
                "interior " + fmt(100 * best_interior) + "%, ends " + fmt(100 * bias.front()) + "% / " +
                    fmt(100 * bias.back()) + "%");
        verdict(rec, "largest beta has the largest CV", cv_last, "CV at largest beta " + fmt(cv.back()));
    });
}

}  // namespace

ExperimentSpec default_spec(const std::string& id) {
    if (!known_id(id)) throw std::invalid_argument("unknown experiment id '" + id + "'");
    ExperimentSpec s;
    s.id = id;
    s.system = canonical_system();
    s.seed = 20240601;
    if (id == "1") {
        s.horizon = 4000.0;
        s.replicates = 10;
    } else if (id == "1b") {
        s.horizon = 4000.0;
        s.replicates = 25;
    } else if (id == "2") {
        s.system = four_node_l1_system();
        s.horizon = 4000.0;
        s.grid = log_grid(1.0, 100.0, 20);
        s.fit.max_iters = 300;
    } else if (id == "3") {
        s.horizon = 2000.0;
        s.replicates = 20;
        s.fit.max_iters = 500;
        s.fit.tol = 1e-7;
    } else if (id == "4") {
        s.system = cycle_system();
        s.horizon = 200.0;
        s.replicates = 8;
        s.event_cap = 20000;
        s.grid = arange(0.5, 3.0, 0.05);
    } else if (id == "5") {
        s.horizon = 1000.0;
        s.replicates = 20;
        s.threshold = 0.9;
    } else if (id == "6") {
        s.system = triple_system();
        s.horizon = 20000.0;
        s.penalty = 100.0;
        s.fit.max_iters = 1000;
    } else if (id == "7") {
        s.horizon = 2000.0;
        s.fit.max_iters = 200;
        auto b = s.system;
        b.hyperedges.clear();
        s.alternate = b;
    } else if (id == "8") {
        s.horizon = 200000.0;
        s.event_cap = 10'000'000;
        s.grid = {0.1, 0.25, 0.5, 1.0, 2.0};
        s.fit.max_iters = 800;
        s.fit.tol = 1e-9;
    } else if (id == "9") {
        s.grid = {5, 10, 20, 40};
        s.events_per_node = 100.0;
        s.repeats = 5;
    } else if (id == "11") {
        s.horizon = 1000.0;
        s.replicates = 100;
        s.grid = {0.5, 1.0, 2.0, 4.0, 8.0};
    }
    return s;
}

void ExperimentSpec::validate() const {
    if (!known_id(id)) throw std::invalid_argument("unknown experiment id '" + id + "'");
    system.validate();
    if (alternate) alternate->validate();
    fit.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    const bool needs_grid = id == "2" || id == "4" || id == "8" || id == "9" || id == "11";
    if (needs_grid && grid.empty()) throw std::invalid_argument("experiment " + id + " needs a grid");
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("grid must be ascending");
    if ((id == "1b" || id == "3" || id == "5" || id == "11") && replicates < 2) {
        throw std::invalid_argument("experiment " + id + " needs >= 2 replicates");
    }
    if ((id == "1" || id == "1b" || id == "5" || id == "6" || id == "8" || id == "11") && system.hyperedges.empty()) {
        throw std::invalid_argument("experiment " + id + " needs a ground-truth hyperedge");
    }
    if (id == "2" && grid.back() < 100.0 * grid.front()) {
        throw std::invalid_argument("lambda grid must span two decades");
    }
    if (id == "9") {
        if (grid.size() < 3) throw std::invalid_argument("scaling needs >= 3 node counts");
        if (grid.back() < 4.0 * grid.front()) throw std::invalid_argument("node counts must span >= 4x");
        if (repeats < 3) throw std::invalid_argument("scaling needs >= 3 repeats");
    }
    if (id == "11" && grid.size() < 3) throw std::invalid_argument("beta grid needs >= 3 points");
}

json to_json(const ExperimentSpec& s) {
    json j{{"id", s.id},
           {"system", io::to_json(s.system)},
           {"horizon", s.horizon},
           {"seed", s.seed},
           {"replicates", s.replicates},
           {"grid", s.grid},
           {"fit", fit_config_json(s.fit)},
           {"penalty", s.penalty},
           {"event_cap", s.event_cap},
           {"repeats", s.repeats},
           {"threshold", s.threshold},
           {"events_per_node", s.events_per_node}};
    if (s.alternate) j["alternate"] = io::to_json(*s.alternate);
    return j;
}

ExperimentSpec spec_from_json(const json& j) {
    try {
        auto s = default_spec(j.at("id").get<std::string>());
        if (j.contains("system")) s.system = io::params_from_json(j.at("system"));
        if (j.contains("alternate")) s.alternate = io::params_from_json(j.at("alternate"));
        s.horizon = j.value("horizon", s.horizon);
        s.seed = j.value("seed", s.seed);
        s.replicates = j.value("replicates", s.replicates);
        if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
        if (j.contains("fit")) s.fit = fit_config_from_json(j.at("fit"), s.fit);
        s.penalty = j.value("penalty", s.penalty);
        s.event_cap = j.value("event_cap", s.event_cap);
        s.repeats = j.value("repeats", s.repeats);
        s.threshold = j.value("threshold", s.threshold);
        s.events_per_node = j.value("events_per_node", s.events_per_node);
        s.workers = j.value("workers", s.workers);
        return s;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("experiment spec: ") + e.what());
    }
}

std::string spec_hash(const ExperimentSpec& spec) {
    const std::string text = to_json(spec).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool RunRecord::passed() const {
    if (failed_stage) return false;
    return !verdicts.empty() &&
           std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

RunRecord run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    RunRecord rec;
    rec.id = spec.id;
    rec.spec = to_json(spec);
    rec.spec_hash = spec_hash(spec);
    rec.environment = {{"version", kVersion}, {"seed", spec.seed}, {"workers", spec.workers}};
    Stages st(rec);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto& id = spec.id;
        if (id == "1") run_recovery(spec, rec, st);
        else if (id == "1b") run_bias(spec, rec, st);
        else if (id == "2") run_l1(spec, rec, st);
        else if (id == "3") run_multistart(spec, rec, st);
        else if (id == "4") run_phase(spec, rec, st);
        else if (id == "5") run_copula(spec, rec, st);
        else if (id == "6") run_higher_order(spec, rec, st);
        else if (id == "7") run_falsifiability(spec, rec, st);
        else if (id == "8") run_delta(spec, rec, st);
        else if (id == "9") run_scaling(spec, rec, st);
        else if (id == "11") run_beta_ablation(spec, rec, st);
    } catch (const StageFailure&) {
        // already recorded; keep partial results
    }
    rec.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

json to_json(const RunRecord& r) {
    json verdicts = json::array();
    for (const auto& v : r.verdicts) {
        verdicts.push_back({{"criterion", v.criterion}, {"passed", v.passed}, {"detail", v.detail}});
    }
    json j{{"id", r.id},
           {"spec_hash", r.spec_hash},
           {"results", r.results},
           {"verdicts", verdicts},
           {"passed", r.passed()},
           {"timings", r.timings},
           {"environment", r.environment}};
    if (r.failed_stage) j["failure"] = {{"stage", *r.failed_stage}, {"error", r.error}};
    return j;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << io::format_double(row[i]);
        out << '\n';
    }
}

void write_run(const std::filesystem::path& dir, const RunRecord& record) {
    std::filesystem::create_directories(dir);
    io::write_json(dir / "spec.json", record.spec);
    io::write_json(dir / "results.json", to_json(record));
    for (const auto& t : record.tables) write_csv(dir / (t.name + ".csv"), t);
}

ScalingReport scaling_benchmark(const std::vector<std::size_t>& node_counts, double events_per_node,
                                std::size_t repeats, std::uint64_t seed) {
    if (node_counts.size() < 2) throw std::invalid_argument("scaling_benchmark: need >= 2 node counts to fit an exponent");
    if (repeats < 3) throw std::invalid_argument("scaling_benchmark: need >= 3 repeats per point");
    if (!(events_per_node > 0.0)) throw std::invalid_argument("scaling_benchmark: events per node must be > 0");
    for (std::size_t n : node_counts) {
        if (n < 2) throw std::invalid_argument("scaling_benchmark: node counts must be >= 2");
    }
    ScalingReport report;
    std::vector<double> xs, ys, ys_streamed;
    for (std::size_t i = 0; i < node_counts.size(); ++i) {
        const std::size_t n = node_counts[i];
        const auto params = scaling_system(n);
        // stationary rate per node is about mu / (1 - 0.3) plus a little hyperedge drive
        const double horizon = events_per_node * 0.6 / 0.5;
        const auto sim = simulate({params, horizon, derive_seed(seed, i), std::size_t{10'000'000}});
        FitConfig cfg;
        cfg.max_iters = repeats;
        cfg.tol = std::numeric_limits<double>::min();  // run every iteration
        const auto fr = fit(sim.sequence, params.edges(), params.beta, params.delta, cfg);

        const auto timeline = build_timeline(sim.sequence, params.edges(), params.delta);
        auto current = initial_params(sim.sequence, params.edges(), params.beta, params.delta, cfg);
        std::vector<double> secs;
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto resp = e_step(current, sim.sequence, timeline);
            current = m_step(resp, sim.sequence, timeline, current, cfg);
            secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }

        ScalingPoint pt;
        pt.nodes = n;
        pt.events = sim.sequence.size();
        pt.seconds_per_iteration = stats::median(secs);
        const double e = static_cast<double>(pt.events);
        pt.seconds_per_event_pair = pt.seconds_per_iteration / (0.5 * e * (e - 1.0));
        pt.streamed_seconds_per_iteration = stats::median(fr.iteration_seconds);
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(pt.seconds_per_iteration));
        ys_streamed.push_back(std::log(pt.streamed_seconds_per_iteration));
        report.points.push_back(pt);
    }
    const auto lf = stats::least_squares(xs, ys);
    report.exponent = lf.slope;
    report.intercept = lf.intercept;
    report.streamed_exponent = stats::least_squares(xs, ys_streamed).slope;
    return report;
}

}  // namespace hth
