#include "hth/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hth::io {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_events_csv(std::ostream& out, const EventSequence& seq) {
    out << "time,node\n";
    for (const auto& e : seq.events()) out << format_double(e.time) << ',' << e.node << '\n';
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

void write_events(const std::filesystem::path& csv, const EventSequence& seq) {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    write_events_csv(out, seq);
    write_json(sidecar_path(csv), json{{"T", seq.horizon()}, {"N", seq.num_nodes()}});
}

SequenceMeta read_meta(const std::filesystem::path& sidecar) {
    const auto j = read_json(sidecar);
    try {
        return {j.at("T").get<double>(), j.at("N").get<std::size_t>()};
    } catch (const json::exception& e) {
        throw ParseError(sidecar.string() + ": metadata needs numeric T and N (" + e.what() + ")");
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

EventSequence read_events_csv(std::istream& in, const SequenceMeta& meta) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty event file");
    ++line_no;
    if (trim(line) != "time,node") throw ParseError("expected header 'time,node'", line_no);

    std::vector<Event> events;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string_view::npos) throw ParseError("expected 'time,node'", line_no);
        const auto ts = trim(row.substr(0, comma));
        const auto ns = trim(row.substr(comma + 1));
        Event e;
        auto r1 = std::from_chars(ts.data(), ts.data() + ts.size(), e.time);
        if (r1.ec != std::errc() || r1.ptr != ts.data() + ts.size()) {
            throw ParseError("bad time '" + std::string(ts) + "'", line_no);
        }
        auto r2 = std::from_chars(ns.data(), ns.data() + ns.size(), e.node);
        if (r2.ec != std::errc() || r2.ptr != ns.data() + ns.size()) {
            throw ParseError("bad node '" + std::string(ns) + "'", line_no);
        }
        const std::size_t row_index = events.size();
        if (e.time < 0.0 || e.time > meta.horizon) {
            throw ParseError("row " + std::to_string(row_index) + ": time outside [0, T]", line_no);
        }
        if (e.node >= meta.num_nodes) {
            throw ParseError("row " + std::to_string(row_index) + ": node >= N", line_no);
        }
        if (!events.empty()) {
            const auto& prev = events.back();
            if (e.time < prev.time || (e.time == prev.time && e.node < prev.node)) {
                throw ParseError("row " + std::to_string(row_index) + ": rows not sorted by time",
                                 line_no);
            }
        }
        events.push_back(e);
    }
    return EventSequence::from_sorted(std::move(events), meta.num_nodes, meta.horizon);
}

EventSequence ingest_events(const std::filesystem::path& csv, std::optional<SequenceMeta> meta) {
    SequenceMeta m = meta.value_or(SequenceMeta{});
    if (m.horizon <= 0.0 || m.num_nodes == 0) {
        const auto side = read_meta(sidecar_path(csv));
        if (m.horizon <= 0.0) m.horizon = side.horizon;
        if (m.num_nodes == 0) m.num_nodes = side.num_nodes;
    }
    std::ifstream in(csv);
    if (!in) throw ParseError("cannot open " + csv.string());
    return read_events_csv(in, m);
}

json to_json(const ModelParams& params) {
    json alpha = json::array();
    for (std::size_t r = 0; r < params.alpha.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < params.alpha.cols(); ++c) row.push_back(params.alpha(r, c));
        alpha.push_back(row);
    }
    json edges = json::array();
    for (const auto& h : params.hyperedges) {
        edges.push_back({{"members", h.edge.members()}, {"weight", h.weight}});
    }
    return {{"N", params.num_nodes()}, {"mu", params.mu},       {"alpha", alpha},
            {"hyperedges", edges},     {"beta", params.beta},   {"delta", params.delta}};
}

std::vector<Hyperedge> hyperedges_from_json(const json& j) {
    std::vector<Hyperedge> out;
    for (const auto& e : j) {
        const auto& members = e.is_object() ? e.at("members") : e;
        out.emplace_back(members.get<std::vector<NodeId>>());
    }
    return out;
}

ModelParams params_from_json(const json& j) {
    try {
        ModelParams p;
        p.mu = j.at("mu").get<std::vector<double>>();
        const std::size_t n = p.mu.size();
        p.alpha = Matrix(n, n, 0.0);
        if (j.contains("alpha")) {
            const auto& a = j.at("alpha");
            if (a.size() != n) throw std::invalid_argument("alpha must have N rows");
            for (std::size_t r = 0; r < n; ++r) {
                if (a[r].size() != n) throw std::invalid_argument("alpha rows must have N entries");
                for (std::size_t c = 0; c < n; ++c) p.alpha(r, c) = a[r][c].get<double>();
            }
        }
        if (j.contains("hyperedges")) {
            for (const auto& e : j.at("hyperedges")) {
                p.hyperedges.push_back(
                    {Hyperedge(e.at("members").get<std::vector<NodeId>>()), e.value("weight", 0.0)});
            }
        }
        p.beta = j.value("beta", 1.0);
        p.delta = j.value("delta", 0.5);
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("params JSON: ") + e.what());
    }
}

json to_json(const FitResult& fit) {
    json j{{"params", to_json(fit.params)},
           {"trace", fit.trace},
           {"iteration_seconds", fit.iteration_seconds},
           {"iterations", fit.iterations},
           {"converged", fit.converged},
           {"log_likelihood", fit.log_likelihood},
           {"warnings", fit.warnings}};
    if (fit.cp) {
        json f = json::array();
        const auto& m = fit.cp->factors.factors;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            f.push_back(row);
        }
        j["cp"] = {{"rank", fit.cp->factors.rank()}, {"factors", f}, {"residual", fit.cp->residual},
                   {"warnings", fit.cp->warnings}};
    }
    return j;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace hth::io
