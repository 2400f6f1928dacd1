#include "hth/copula.hpp"

#include "hth/parallel.hpp"
#include "hth/random.hpp"
#include "hth/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hth {

PairedSeries pair_activity_series(const EventSequence& seq, NodeId a, NodeId b,
                                  double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
    if (a >= seq.num_nodes() || b >= seq.num_nodes()) {
        throw std::invalid_argument("pair_activity_series: node out of range");
    }
    const auto bins = static_cast<std::size_t>(std::ceil(seq.horizon() / bin_width - 1e-9));
    if (bins < 20) {
        throw std::invalid_argument("pair_activity_series: " + std::to_string(bins) +
                                    " bins is too few for tail estimation (need 20)");
    }
    PairedSeries out{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
    for (const auto& ev : seq.events()) {
        if (ev.node != a && ev.node != b) continue;
        const auto bin = std::min(bins - 1, static_cast<std::size_t>(ev.time / bin_width));
        if (ev.node == a) out.first[bin] += 1.0;
        if (ev.node == b) out.second[bin] += 1.0;
    }
    return out;
}

std::vector<double> pseudo_observations(const std::vector<double>& xs) {
    const std::size_t m = xs.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    std::vector<double> u(m);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && xs[order[j + 1]] == xs[order[i]]) ++j;
        // ranks are 1-based; ties share the average rank
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) u[order[k]] = rank / static_cast<double>(m + 1);
        i = j + 1;
    }
    return u;
}

TailStats tail_stats(const PairedSeries& series, double threshold) {
    const std::size_t m = series.first.size();
    if (series.second.size() != m) throw std::invalid_argument("tail_stats: unpaired series");
    if (m < 20) throw std::invalid_argument("tail_stats: need at least 20 samples");
    if (!(threshold > 0.5 && threshold < 1.0)) {
        throw std::invalid_argument("tail_stats: threshold must lie in (0.5, 1)");
    }
    TailStats out;
    out.threshold = threshold;

    auto all_tied = [](const std::vector<double>& xs) {
        return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
    };
    if (all_tied(series.first) || all_tied(series.second)) {
        out.degenerate_margin = true;
        out.empty_tail = true;
        return out;
    }

    const auto u = pseudo_observations(series.first);
    const auto v = pseudo_observations(series.second);
    std::vector<double> zu, zv;
    for (std::size_t i = 0; i < m; ++i) {
        if (u[i] > threshold && v[i] > threshold) {
            zu.push_back(stats::normal_quantile(u[i]));
            zv.push_back(stats::normal_quantile(v[i]));
        }
    }
    out.tail_pairs = zu.size();
    const double joint = static_cast<double>(zu.size()) / static_cast<double>(m);
    out.tau_upper = std::clamp(joint / (1.0 - threshold), 0.0, 1.0);

    if (zu.size() < 2) {
        out.empty_tail = true;
        return out;
    }
    const double mu = stats::mean(zu);
    const double mv = stats::mean(zv);
    double suv = 0.0, suu = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < zu.size(); ++i) {
        suv += (zu[i] - mu) * (zv[i] - mv);
        suu += (zu[i] - mu) * (zu[i] - mu);
        svv += (zv[i] - mv) * (zv[i] - mv);
    }
    if (suu > 0.0 && svv > 0.0) out.rho_probit = std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
    return out;
}

CopulaReport copula_validation(const CopulaConfig& cfg) {
    cfg.params.validate();
    if (cfg.params.hyperedges.empty()) {
        throw std::invalid_argument("copula_validation: params need a hyperedge");
    }
    if (cfg.replicates < 2) throw std::invalid_argument("copula_validation: need >= 2 replicates");
    const auto& members = cfg.params.hyperedges.front().edge.members();
    const double bin = cfg.bin_width > 0.0 ? cfg.bin_width : cfg.params.delta;

    ModelParams null_params = cfg.params;
    null_params.hyperedges.clear();

    CopulaReport report;
    report.node_a = members[0];
    report.node_b = members[1];
    report.replicates.resize(2 * cfg.replicates);
    parallel_for(report.replicates.size(), cfg.workers, [&](std::size_t k) {
        const bool with = k < cfg.replicates;
        auto& rep = report.replicates[k];
        rep.with_hyperedge = with;
        rep.seed = derive_seed(cfg.seed, k);
        const auto sim = simulate({with ? cfg.params : null_params, cfg.horizon, rep.seed,
                                   std::size_t{10'000'000}});
        rep.stats = tail_stats(pair_activity_series(sim.sequence, report.node_a, report.node_b, bin),
                               cfg.threshold);
    });

    std::vector<double> tau_h, tau_0, rho_h, rho_0;
    for (const auto& rep : report.replicates) {
        (rep.with_hyperedge ? tau_h : tau_0).push_back(rep.stats.tau_upper);
        (rep.with_hyperedge ? rho_h : rho_0).push_back(rep.stats.rho_probit);
    }
    report.tau_test = stats::welch_test(tau_h, tau_0);
    report.rho_test = stats::welch_test(rho_h, rho_0);
    return report;
}

}  // namespace hth
