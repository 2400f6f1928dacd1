#pragma once

#include "hth/inference.hpp"
#include "hth/io.hpp"
#include "hth/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hth {

inline constexpr const char* kVersion = "0.1.0";

/// Identifiers accepted by default_spec and run_experiment.
[[nodiscard]] const std::vector<std::string>& experiment_ids();

/// Canonical three-node system: one hyperedge {0,1} of weight 0.4 and a
/// single pairwise link 0 -> 2.
[[nodiscard]] ModelParams canonical_system();

struct ExperimentSpec {
    std::string id;
    ModelParams system;
    /// Second ground truth where the protocol needs one (the no-hyperedge
    /// scenario of the falsifiability check).
    std::optional<ModelParams> alternate;
    double horizon{1000.0};
    std::uint64_t seed{0};
    /// Seeds, random starts, or seeds per grid point depending on the protocol.
    std::size_t replicates{1};
    /// lambda, delta, beta, strength multipliers or node counts.
    std::vector<double> grid;
    FitConfig fit{};
    double penalty{0.0};
    std::size_t event_cap{1'000'000};
    std::size_t repeats{3};
    double threshold{0.9};
    double events_per_node{1000.0};
    std::size_t workers{1};

    void validate() const;
};

[[nodiscard]] ExperimentSpec default_spec(const std::string& id);

[[nodiscard]] io::json to_json(const ExperimentSpec& spec);

/// Starts from default_spec(j["id"]) and overrides whichever keys are present.
[[nodiscard]] ExperimentSpec spec_from_json(const io::json& j);

/// FNV-1a over the canonical JSON form, as 16 hex digits.
[[nodiscard]] std::string spec_hash(const ExperimentSpec& spec);

struct Verdict {
    std::string criterion;
    bool passed{false};
    std::string detail;
};

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct RunRecord {
    std::string id;
    std::string spec_hash;
    io::json spec;
    io::json results = io::json::object();
    std::vector<Verdict> verdicts;
    std::vector<CsvTable> tables;
    io::json timings = io::json::object();  // stage name -> seconds
    io::json environment = io::json::object();
    std::optional<std::string> failed_stage;
    std::string error;

    [[nodiscard]] bool passed() const;
};

/// Runs the protocol of spec.id. Stage failures are caught and recorded
/// together with whatever results were produced before them; an invalid
/// spec throws std::invalid_argument before any simulation.
[[nodiscard]] RunRecord run_experiment(const ExperimentSpec& spec);

[[nodiscard]] io::json to_json(const RunRecord& record);

/// Writes spec.json, results.json and one CSV per table into dir.
void write_run(const std::filesystem::path& dir, const RunRecord& record);

void write_csv(const std::filesystem::path& path, const CsvTable& table);

struct ScalingPoint {
    std::size_t nodes{0};
    std::size_t events{0};
    /// E-step over all (event, earlier event) pairs plus the M-step.
    double seconds_per_iteration{0.0};
    double seconds_per_event_pair{0.0};
    /// The recursive per-source E-step used by fit().
    double streamed_seconds_per_iteration{0.0};
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double exponent{0.0};
    double intercept{0.0};
    double streamed_exponent{0.0};
};

/// Times EM iterations on simulated data at each node count, holding the
/// number of events per node near `events_per_node`. Each point is the
/// median of `repeats` timed iterations; exponents are least-squares slopes
/// of log time against log n.
[[nodiscard]] ScalingReport scaling_benchmark(const std::vector<std::size_t>& node_counts,
                                              double events_per_node, std::size_t repeats,
                                              std::uint64_t seed);

}  // namespace hth
