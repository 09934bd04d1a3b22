#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "alucell/state.hpp"

namespace alucell {

// Proportional controller acting on the sampling-box coordinates
// (x1, c_x2, c_x3, x4, x5, x6, x7, x8).  Each input channel holds a nominal
// value plus gain * (setpoint - tracked coordinate), clamped to its bounds.
// Channels with tracked < 0 are pure nominal (plus any perturbation).
struct ControllerConfig {
    std::array<double, 8> setpoints{};
    std::array<double, kInputDim> nominal{};
    std::array<double, kInputDim> gain{};
    std::array<int, kInputDim> tracked{};  // index into box coords, -1 = none
    std::array<double, kInputDim> lo{};
    std::array<double, kInputDim> hi{};

    // Alumina feed tracks c_x2, fluoride feed tracks c_x3, tapping tracks
    // metal mass; current and anode distance are held at nominal.  Setpoints
    // sit at the sampling-box midpoints.
    static ControllerConfig defaults();

    void validate() const;
};

// Amplitude-modulated pseudo-random binary perturbation: each channel is a
// piecewise-constant signal with hold times uniform in [hold_min, hold_max]
// steps and amplitudes uniform in [amplitude_lo, amplitude_hi].
struct AprbsConfig {
    std::array<double, kInputDim> amplitude_lo{};
    std::array<double, kInputDim> amplitude_hi{};
    long hold_min = 1;
    long hold_max = 1;
    std::uint64_t seed = 0;

    static AprbsConfig defaults();

    void validate() const;
};

struct AprbsSegment {
    long start = 0;
    long length = 0;
    double amplitude = 0.0;
};

struct AprbsSignal {
    // values[t][ch] is the perturbation applied at step t.
    std::vector<InputVec> values;
    // Per-channel segment list; every segment except possibly the last has
    // length in [hold_min, hold_max], the last is truncated to the horizon.
    std::array<std::vector<AprbsSegment>, kInputDim> segments;

    long steps() const { return static_cast<long>(values.size()); }
};

ControlInput proportional_control(const CellState& x,
                                  const ControllerConfig& cfg);

AprbsSignal aprbs_signal(const AprbsConfig& cfg, long steps);

// proportional_control plus the precomputed perturbation at step_index,
// re-clamped to bounds (which also floor the feed/tap channels at zero).
ControlInput stochastic_policy(const CellState& x, long step_index,
                               const ControllerConfig& ctrl,
                               const AprbsSignal& signal);

}  // namespace alucell
