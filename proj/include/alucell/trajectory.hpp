#pragma once

#include <cstdint>
#include <vector>

#include "alucell/state.hpp"

namespace alucell {

// One simulated rollout: steps+1 states and the steps inputs that were
// actually applied (zero-order hold over each step of length h seconds).
struct Trajectory {
    std::vector<StateVec> states;
    std::vector<InputVec> inputs;
    double h = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t id = 0;

    long steps() const { return static_cast<long>(inputs.size()); }

    // Length bookkeeping plus finiteness of every entry.
    bool consistent() const;
};

}  // namespace alucell
