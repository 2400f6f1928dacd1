#include "hth/copula.hpp"
#include "hth/experiments.hpp"
#include "hth/inference.hpp"
#include "hth/io.hpp"
#include "hth/simulator.hpp"
#include "hth/structure.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using hth::io::json;

namespace {

// Reads --config files written as JSON: top-level keys are global options and
// nested objects hold the options of the subcommand with that name.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const auto name = opt->get_lnames()[0];
            if (opt->count() > 0) {
                j[name] = opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::parse_error& e) {
            throw CLI::ConversionError(std::string("config JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                // CLI11 needs an "++" marker to enter a subcommand section
                out.push_back({p, "++", {}});
                collect(value, p, out);
                out.push_back({p, "--", {}});
                continue;
            }
            CLI::ConfigItem item{parents, key, {}};
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }
};

struct Globals {
    std::string out = "out";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct FitOptions {
    double beta = 1.0;
    double delta = 0.5;
    std::size_t iters = 80;
    double tol = 1e-6;
    double lambda = 0.0;
    std::string compensator = "piecewise";
    std::string multiplicity = "per_member";
    std::size_t cp_rank = 0;

    void add(CLI::App* app, bool with_delta = true) {
        app->add_option("--beta", beta, "Kernel decay rate")->capture_default_str();
        if (with_delta) app->add_option("--delta", delta, "Completion window")->capture_default_str();
        app->add_option("--max-iters", iters, "Maximum EM iterations")->capture_default_str();
        app->add_option("--tol", tol, "Objective change tolerance")->capture_default_str();
        app->add_option("--l1", lambda, "L1 penalty on hyperedge weights")->capture_default_str();
        app->add_option("--compensator", compensator)
            ->check(CLI::IsMember({"piecewise", "naive"}))
            ->capture_default_str();
        app->add_option("--multiplicity", multiplicity)
            ->check(CLI::IsMember({"per_member", "single"}))
            ->capture_default_str();
        app->add_option("--cp-rank", cp_rank, "Post-hoc CP rank (0 = off)")->capture_default_str();
    }

    [[nodiscard]] hth::FitConfig config() const {
        hth::FitConfig c;
        c.max_iters = iters;
        c.tol = tol;
        c.l1_penalty = lambda;
        c.compensator.mode = compensator == "naive" ? hth::CompensatorMode::naive : hth::CompensatorMode::piecewise;
        c.compensator.multiplicity =
            multiplicity == "single" ? hth::Multiplicity::single : hth::Multiplicity::per_member;
        c.cp_rank = cp_rank;
        c.validate();
        return c;
    }
};

struct EventsInput {
    std::string path;
    double horizon = 0.0;
    std::size_t nodes = 0;

    void add(CLI::App* app) {
        app->add_option("--events", path, "Event CSV (time,node)")->required()->check(CLI::ExistingFile);
        app->add_option("--horizon", horizon, "Observation horizon T (default: sidecar)");
        app->add_option("--nodes", nodes, "Node count N (default: sidecar)");
    }

    [[nodiscard]] hth::EventSequence load() const {
        return hth::io::ingest_events(path, hth::io::SequenceMeta{horizon, nodes});
    }
};

std::vector<hth::Hyperedge> load_candidates(const std::string& path) {
    if (path.empty()) return {};
    const auto j = hth::io::read_json(path);
    return hth::io::hyperedges_from_json(j.is_object() ? j.at("candidates") : j);
}

fs::path out_dir(const Globals& g) {
    fs::create_directories(g.out);
    return g.out;
}

json candidates_json(const std::vector<hth::Hyperedge>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back(c.members());
    return a;
}

void report(const fs::path& file) { std::cout << "wrote " << file.string() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes processes with hyperedge excitation: simulation, inference and structure search"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file of option values");

    Globals g;
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate events by thinning");
    std::string sim_params;
    double sim_horizon = 100.0;
    std::size_t sim_cap = 100000;
    sim_cmd->add_option("--params", sim_params, "Ground-truth parameters JSON")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--horizon", sim_horizon)->capture_default_str();
    sim_cmd->add_option("--cap", sim_cap, "Event cap")->capture_default_str();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit by EM");
    EventsInput fit_in;
    FitOptions fit_opts;
    std::string fit_cands;
    fit_in.add(fit_cmd);
    fit_opts.add(fit_cmd);
    fit_cmd->add_option("--candidates", fit_cands, "Candidate hyperedges JSON")->check(CLI::ExistingFile);

    // candidates
    auto* cand_cmd = app.add_subcommand("candidates", "Stage 1 pairwise fit and clique enumeration");
    EventsInput cand_in;
    hth::CandidateConfig cand_cfg;
    double cand_beta = 1.0;
    std::string cand_rule = "min";
    cand_in.add(cand_cmd);
    cand_cmd->add_option("--beta", cand_beta)->capture_default_str();
    cand_cmd->add_option("--theta", cand_cfg.theta, "Threshold in branching-ratio units")->capture_default_str();
    cand_cmd->add_option("--k-min", cand_cfg.k_min)->capture_default_str();
    cand_cmd->add_option("--k-max", cand_cfg.k_max)->capture_default_str();
    cand_cmd->add_option("--rule", cand_rule)->check(CLI::IsMember({"min", "max"}))->capture_default_str();
    cand_cmd->add_option("--max-iters", cand_cfg.fit.max_iters)->capture_default_str();

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Baseline versus hyperedge model");
    EventsInput cmp_in;
    FitOptions cmp_opts;
    std::string cmp_cands;
    cmp_in.add(cmp_cmd);
    cmp_opts.add(cmp_cmd);
    cmp_cmd->add_option("--candidates", cmp_cands)->required()->check(CLI::ExistingFile);

    // l1-path
    auto* l1_cmd = app.add_subcommand("l1-path", "Regularisation path over lambda");
    EventsInput l1_in;
    FitOptions l1_opts;
    std::string l1_cands;
    double l1_lo = 1.0, l1_hi = 100.0;
    std::size_t l1_points = 20;
    l1_in.add(l1_cmd);
    l1_opts.add(l1_cmd);
    l1_cmd->add_option("--candidates", l1_cands)->required()->check(CLI::ExistingFile);
    l1_cmd->add_option("--lambda-min", l1_lo)->capture_default_str();
    l1_cmd->add_option("--lambda-max", l1_hi)->capture_default_str();
    l1_cmd->add_option("--points", l1_points)->capture_default_str();

    // delta-scan
    auto* ds_cmd = app.add_subcommand("delta-scan", "Profile likelihood over the completion window");
    EventsInput ds_in;
    FitOptions ds_opts;
    std::string ds_cands;
    std::vector<double> ds_grid{0.1, 0.25, 0.5, 1.0, 2.0};
    ds_in.add(ds_cmd);
    ds_opts.add(ds_cmd, false);
    ds_cmd->add_option("--candidates", ds_cands)->required()->check(CLI::ExistingFile);
    ds_cmd->add_option("--deltas", ds_grid)->capture_default_str();

    // phase-scan
    auto* ps_cmd = app.add_subcommand("phase-scan", "Strength scan across the stability boundary");
    std::string ps_params;
    hth::PhaseScanConfig ps_cfg;
    std::vector<double> ps_grid;
    std::string ps_scope = "all";
    ps_cmd->add_option("--params", ps_params)->required()->check(CLI::ExistingFile);
    ps_cmd->add_option("--multipliers", ps_grid, "Ascending strength multipliers")->required();
    ps_cmd->add_option("--horizon", ps_cfg.horizon)->capture_default_str();
    ps_cmd->add_option("--seeds-per-point", ps_cfg.seeds_per_point)->capture_default_str();
    ps_cmd->add_option("--cap", ps_cfg.event_cap)->capture_default_str();
    ps_cmd->add_option("--scope", ps_scope)->check(CLI::IsMember({"all", "hyperedges"}))->capture_default_str();
    ps_cmd->add_option("--max-iters", ps_cfg.fit.max_iters)->capture_default_str();

    // copula
    auto* cop_cmd = app.add_subcommand("copula", "Tail dependence of HTH versus pairwise-null replicates");
    std::string cop_params;
    hth::CopulaConfig cop_cfg;
    cop_cmd->add_option("--params", cop_params)->required()->check(CLI::ExistingFile);
    cop_cmd->add_option("--horizon", cop_cfg.horizon)->capture_default_str();
    cop_cmd->add_option("--replicates", cop_cfg.replicates)->capture_default_str();
    cop_cmd->add_option("--bin-width", cop_cfg.bin_width, "0 selects delta")->capture_default_str();
    cop_cmd->add_option("--threshold", cop_cfg.threshold)->capture_default_str();

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Run a synthetic experiment protocol");
    std::string exp_id, exp_spec;
    bool exp_print_spec = false;
    exp_cmd->add_option("id", exp_id, "Experiment identifier")->required();
    exp_cmd->add_option("--spec", exp_spec, "Experiment spec JSON overrides")->check(CLI::ExistingFile);
    exp_cmd->add_flag("--print-spec", exp_print_spec, "Print the resolved spec and exit");

    // bench-scaling
    auto* bench_cmd = app.add_subcommand("bench-scaling", "Time EM iterations against node count");
    std::vector<std::size_t> bench_nodes{5, 10, 20, 40};
    double bench_events = 1000.0;
    std::size_t bench_repeats = 5;
    bench_cmd->add_option("--nodes", bench_nodes)->capture_default_str();
    bench_cmd->add_option("--events-per-node", bench_events)->capture_default_str();
    bench_cmd->add_option("--repeats", bench_repeats)->capture_default_str();

    // ingest-check
    auto* ing_cmd = app.add_subcommand("ingest-check", "Validate an event file");
    EventsInput ing_in;
    ing_in.add(ing_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sim_cmd) {
            const auto params = hth::io::params_from_json(hth::io::read_json(sim_params));
            const auto res = hth::simulate({params, sim_horizon, g.seed, sim_cap});
            const auto dir = out_dir(g);
            hth::io::write_events(dir / "events.csv", res.sequence);
            hth::io::write_json(dir / "simulation.json",
                                {{"events", res.sequence.size()}, {"cap_hit", res.cap_hit},
                                 {"horizon", res.sequence.horizon()}, {"candidates", res.candidates},
                                 {"seed", g.seed}, {"counts", res.sequence.counts_per_node()}});
            report(dir / "events.csv");
        } else if (*fit_cmd) {
            const auto seq = fit_in.load();
            auto cfg = fit_opts.config();
            const auto fr = hth::fit(seq, load_candidates(fit_cands), fit_opts.beta, fit_opts.delta, cfg);
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "fit.json", hth::io::to_json(fr));
            report(dir / "fit.json");
        } else if (*cand_cmd) {
            const auto seq = cand_in.load();
            cand_cfg.rule = cand_rule == "max" ? hth::SignificanceRule::max_direction
                                               : hth::SignificanceRule::min_direction;
            const auto cs = hth::generate_candidates(seq, cand_beta, cand_cfg);
            json graph = json::array();
            for (auto [a, b] : cs.significance_graph) graph.push_back({a, b});
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "candidates.json", {{"candidates", candidates_json(cs.candidates)},
                                                          {"significance_graph", graph},
                                                          {"stage1", hth::io::to_json(cs.stage1)}});
            report(dir / "candidates.json");
        } else if (*cmp_cmd) {
            const auto seq = cmp_in.load();
            const auto cfg = cmp_opts.config();
            const auto base = hth::fit(seq, {}, cmp_opts.beta, cmp_opts.delta, cfg);
            const auto full = hth::fit(seq, load_candidates(cmp_cands), cmp_opts.beta, cmp_opts.delta, cfg);
            const auto c = hth::compare_models(seq, base, full);
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "compare.json",
                                {{"logL_full", c.logL_full}, {"logL_baseline", c.logL_baseline},
                                 {"k_full", c.k_full}, {"k_baseline", c.k_baseline},
                                 {"n_events", c.n_events}, {"delta_L", c.delta_L},
                                 {"aic_diff", c.aic_diff}, {"bic_diff", c.bic_diff},
                                 {"lr_stat", c.lr_stat}, {"lr_df", c.lr_df},
                                 {"chi2_critical", c.chi2_critical}, {"lr_significant", c.lr_significant},
                                 {"full", hth::io::to_json(full.params)},
                                 {"baseline", hth::io::to_json(base.params)}});
            report(dir / "compare.json");
        } else if (*l1_cmd) {
            const auto seq = l1_in.load();
            const auto cands = load_candidates(l1_cands);
            const auto path = hth::l1_path(seq, cands, l1_opts.beta, l1_opts.delta,
                                           hth::log_grid(l1_lo, l1_hi, l1_points), l1_opts.config());
            hth::CsvTable t{"l1_path", {"lambda", "log_likelihood", "k", "aic", "bic"}, {}};
            for (const auto& c : cands) t.header.push_back("w" + c.to_string());
            json points = json::array();
            for (const auto& pt : path.points) {
                std::vector<double> row{pt.lambda, pt.log_likelihood, static_cast<double>(pt.k), pt.aic, pt.bic};
                row.insert(row.end(), pt.weights.begin(), pt.weights.end());
                t.rows.push_back(row);
                points.push_back({{"lambda", pt.lambda}, {"weights", pt.weights}, {"log_likelihood", pt.log_likelihood},
                                  {"k", pt.k}, {"aic", pt.aic}, {"bic", pt.bic}});
            }
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "l1_path.json",
                                {{"candidates", candidates_json(cands)}, {"points", points},
                                 {"lambda_star_bic", path.points[path.best_bic].lambda},
                                 {"lambda_star_aic", path.points[path.best_aic].lambda}});
            hth::write_csv(dir / "l1_path.csv", t);
            report(dir / "l1_path.json");
        } else if (*ds_cmd) {
            const auto seq = ds_in.load();
            const auto scan = hth::delta_grid_search(seq, load_candidates(ds_cands), ds_opts.beta, ds_grid,
                                                     ds_opts.config(), g.workers);
            hth::CsvTable t{"delta_scan", {"delta", "log_likelihood", "completions"}, {}};
            json points = json::array();
            for (const auto& pt : scan.points) {
                t.rows.push_back({pt.delta, pt.log_likelihood, static_cast<double>(pt.total_completions)});
                points.push_back({{"delta", pt.delta}, {"log_likelihood", pt.log_likelihood},
                                  {"weights", pt.weights}, {"completions", pt.total_completions}});
            }
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "delta_scan.json",
                                {{"points", points}, {"best_delta", scan.points[scan.best].delta}});
            hth::write_csv(dir / "delta_scan.csv", t);
            report(dir / "delta_scan.json");
        } else if (*ps_cmd) {
            ps_cfg.base = hth::io::params_from_json(hth::io::read_json(ps_params));
            ps_cfg.multipliers = ps_grid;
            ps_cfg.scope = ps_scope == "hyperedges" ? hth::StrengthScope::hyperedges_only
                                                    : hth::StrengthScope::all_excitation;
            ps_cfg.seed = g.seed;
            ps_cfg.workers = g.workers;
            const auto scan = hth::phase_scan(ps_cfg);
            hth::CsvTable t{"phase_scan", {"multiplier", "mean_events", "cap_fraction", "rho_true", "rho_inferred"}, {}};
            for (const auto& pt : scan.points) {
                t.rows.push_back({pt.multiplier, pt.mean_events, pt.cap_fraction, pt.rho_true, pt.rho_inferred});
            }
            auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "phase_scan.json",
                                {{"critical_strength", opt(scan.critical_strength)},
                                 {"onset_strength", opt(scan.onset_strength)},
                                 {"onset_ratio", opt(scan.onset_ratio)},
                                 {"inferred_crossing", opt(scan.inferred_crossing)}});
            hth::write_csv(dir / "phase_scan.csv", t);
            report(dir / "phase_scan.json");
        } else if (*cop_cmd) {
            cop_cfg.params = hth::io::params_from_json(hth::io::read_json(cop_params));
            cop_cfg.seed = g.seed;
            cop_cfg.workers = g.workers;
            const auto rep = hth::copula_validation(cop_cfg);
            hth::CsvTable t{"copula", {"with_hyperedge", "tau_upper", "rho_probit", "tail_pairs"}, {}};
            for (const auto& r : rep.replicates) {
                t.rows.push_back({r.with_hyperedge ? 1.0 : 0.0, r.stats.tau_upper, r.stats.rho_probit,
                                  static_cast<double>(r.stats.tail_pairs)});
            }
            const auto dir = out_dir(g);
            hth::io::write_json(dir / "copula.json",
                                {{"pair", {rep.node_a, rep.node_b}},
                                 {"tau_welch", {{"t", rep.tau_test.t}, {"df", rep.tau_test.df}, {"p", rep.tau_test.p}}},
                                 {"rho_welch", {{"t", rep.rho_test.t}, {"df", rep.rho_test.df}, {"p", rep.rho_test.p}}}});
            hth::write_csv(dir / "copula.csv", t);
            report(dir / "copula.json");
        } else if (*exp_cmd) {
            json overrides = exp_spec.empty() ? json::object() : hth::io::read_json(exp_spec);
            overrides["id"] = exp_id;
            if (app.get_option("--seed")->count() > 0) overrides["seed"] = g.seed;
            overrides["workers"] = g.workers;
            const auto spec = hth::spec_from_json(overrides);
            if (exp_print_spec) {
                std::cout << hth::to_json(spec).dump(2) << '\n';
                return 0;
            }
            const auto rec = hth::run_experiment(spec);
            const auto dir = fs::path(g.out) / ("exp_" + exp_id);
            hth::write_run(dir, rec);
            for (const auto& v : rec.verdicts) {
                std::cout << (v.passed ? "PASS " : "FAIL ") << v.criterion;
                if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
                std::cout << '\n';
            }
            std::cout << "total " << rec.timings.value("total", 0.0) << " s; wrote " << dir.string() << '\n';
            if (rec.failed_stage) {
                std::cerr << "stage '" << *rec.failed_stage << "' failed: " << rec.error << '\n';
                return 2;
            }
        } else if (*bench_cmd) {
            const auto rep = hth::scaling_benchmark(bench_nodes, bench_events, bench_repeats, g.seed);
            hth::CsvTable t{"scaling", {"nodes", "events", "seconds_per_iteration", "seconds_per_event_pair"}, {}};
            for (const auto& p : rep.points) {
                t.rows.push_back({static_cast<double>(p.nodes), static_cast<double>(p.events),
                                  p.seconds_per_iteration, p.seconds_per_event_pair});
            }
            const auto dir = out_dir(g);
            hth::write_csv(dir / "scaling.csv", t);
            hth::io::write_json(dir / "scaling.json", {{"exponent", rep.exponent}, {"intercept", rep.intercept}});
            std::cout << "exponent " << rep.exponent << '\n';
            report(dir / "scaling.csv");
        } else if (*ing_cmd) {
            const auto seq = ing_in.load();
            std::cout << seq.size() << " events, N = " << seq.num_nodes() << ", T = " << seq.horizon() << '\n';
            const auto counts = seq.counts_per_node();
            for (std::size_t i = 0; i < counts.size(); ++i) std::cout << "  node " << i << ": " << counts[i] << '\n';
        }
    } catch (const hth::io::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
