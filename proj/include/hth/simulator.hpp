#pragma once

#include "hth/types.hpp"

#include <cstdint>
#include <vector>

namespace hth {

struct SimConfig {
    ModelParams params;
    double horizon{100.0};
    std::uint64_t seed{0};
    std::size_t event_cap{100000};
};

struct SimResult {
    EventSequence sequence;
    bool cap_hit{false};
    std::size_t candidates{0};  // proposals drawn, accepted or not
};

/// Ogata thinning. The dominating rate is the total intensity just after the
/// latest accepted or rejected candidate; it is exact because every
/// excitation term decays between jumps. When the cap is reached the run
/// stops, cap_hit is set and the returned horizon is the time of the last
/// event, so the sequence is a complete observation of [0, t_cap].
[[nodiscard]] SimResult simulate(const SimConfig& cfg);

/// Independent runs, order-preserving, executed on up to `workers` threads.
/// A failing run is rethrown as std::runtime_error naming its index.
[[nodiscard]] std::vector<SimResult> simulate_batch(const std::vector<SimConfig>& cfgs,
                                                    std::size_t workers = 1);

}  // namespace hth
