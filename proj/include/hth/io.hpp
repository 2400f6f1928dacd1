#pragma once

#include "hth/inference.hpp"
#include "hth/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace hth::io {

using nlohmann::json;

/// Horizon and node count; stored in a `<events>.json` sidecar next to the CSV.
struct SequenceMeta {
    double horizon{0.0};
    std::size_t num_nodes{0};
};

/// Error while reading an input file; carries the 1-based line number when
/// the problem is tied to a row.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// `time,node` CSV, times printed with round-trip precision.
void write_events_csv(std::ostream& out, const EventSequence& seq);
void write_events(const std::filesystem::path& csv, const EventSequence& seq);

[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& csv);
[[nodiscard]] SequenceMeta read_meta(const std::filesystem::path& sidecar);

/// Parses rows and validates order, node range and horizon. Rows must be
/// sorted; the first offending row is reported.
[[nodiscard]] EventSequence read_events_csv(std::istream& in, const SequenceMeta& meta);

/// Reads the CSV; metadata fields left unset (zero) are filled from the
/// sidecar, which must then exist.
[[nodiscard]] EventSequence ingest_events(const std::filesystem::path& csv,
                                          std::optional<SequenceMeta> meta = std::nullopt);

[[nodiscard]] json to_json(const ModelParams& params);
[[nodiscard]] ModelParams params_from_json(const json& j);
[[nodiscard]] json to_json(const FitResult& fit);

[[nodiscard]] std::vector<Hyperedge> hyperedges_from_json(const json& j);

[[nodiscard]] json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

}  // namespace hth::io
