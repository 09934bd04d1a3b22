#include "alucell/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alucell/errors.hpp"
#include "alucell/plant.hpp"
#include "alucell/rng.hpp"

namespace alucell {

ControllerConfig ControllerConfig::defaults() {
    ControllerConfig c;
    c.setpoints = {3260.0, 0.035, 0.11, 13750.0, 10075.0, 965.0, 820.0, 582.5};
    c.nominal = {0.02464, 140.0, 0.0004928, 0.012404, 5.0};
    c.gain = {2.5, 0.0, 0.05, -2.0e-5, 0.0};
    c.tracked = {1, -1, 2, 4, -1};
    c.lo = {0.0, 120.0, 0.0, 0.0, 4.0};
    c.hi = {0.08, 160.0, 0.005, 0.05, 6.0};
    return c;
}

void ControllerConfig::validate() const {
    for (int ch = 0; ch < kInputDim; ++ch) {
        if (!(lo[ch] <= hi[ch]))
            throw ConfigError("controller: bounds min > max on channel " +
                              std::to_string(ch));
        if (!std::isfinite(gain[ch]) || !std::isfinite(nominal[ch]))
            throw ConfigError("controller: nonfinite gain/nominal on channel " +
                              std::to_string(ch));
        if (tracked[ch] < -1 || tracked[ch] >= 8)
            throw ConfigError("controller: tracked index out of range");
    }
    for (double s : setpoints)
        if (!std::isfinite(s)) throw ConfigError("controller: nonfinite setpoint");
}

AprbsConfig AprbsConfig::defaults() {
    AprbsConfig a;
    a.amplitude_lo = {-0.01, -6.0, -2.0e-4, -4.0e-3, -0.4};
    a.amplitude_hi = {0.01, 6.0, 2.0e-4, 4.0e-3, 0.4};
    a.hold_min = 50;
    a.hold_max = 500;
    return a;
}

void AprbsConfig::validate() const {
    if (hold_min < 1) throw ConfigError("aprbs: hold_min must be >= 1");
    if (hold_max < hold_min) throw ConfigError("aprbs: hold_max < hold_min");
    for (int ch = 0; ch < kInputDim; ++ch) {
        if (!(amplitude_lo[ch] <= amplitude_hi[ch]))
            throw ConfigError("aprbs: empty amplitude interval on channel " +
                              std::to_string(ch));
        if (!std::isfinite(amplitude_lo[ch]) || !std::isfinite(amplitude_hi[ch]))
            throw ConfigError("aprbs: nonfinite amplitude bound");
    }
}

ControlInput proportional_control(const CellState& x,
                                  const ControllerConfig& cfg) {
    const std::array<double, 8> coords = box_coords(x);
    InputVec u{};
    for (int ch = 0; ch < kInputDim; ++ch) {
        double v = cfg.nominal[ch];
        if (cfg.tracked[ch] >= 0) {
            const int t = cfg.tracked[ch];
            v += cfg.gain[ch] * (cfg.setpoints[t] - coords[t]);
        }
        u[ch] = std::clamp(v, cfg.lo[ch], cfg.hi[ch]);
    }
    return ControlInput::from_array(u);
}

AprbsSignal aprbs_signal(const AprbsConfig& cfg, long steps) {
    if (steps < 1) throw UsageError("aprbs_signal: steps must be >= 1");
    cfg.validate();

    AprbsSignal sig;
    sig.values.assign(static_cast<std::size_t>(steps), InputVec{});
    Rng rng(cfg.seed);
    // Channel-major draw order, (hold, amplitude) pairs, so the sequence for
    // a given seed is part of the on-disk reproducibility contract.
    for (int ch = 0; ch < kInputDim; ++ch) {
        long t = 0;
        while (t < steps) {
            long hold = rng.uniform_int(cfg.hold_min, cfg.hold_max);
            const double amp =
                rng.uniform(cfg.amplitude_lo[ch], cfg.amplitude_hi[ch]);
            hold = std::min(hold, steps - t);
            sig.segments[ch].push_back({t, hold, amp});
            for (long s = t; s < t + hold; ++s) sig.values[s][ch] = amp;
            t += hold;
        }
    }
    return sig;
}

ControlInput stochastic_policy(const CellState& x, long step_index,
                               const ControllerConfig& ctrl,
                               const AprbsSignal& signal) {
    if (step_index < 0 || step_index >= signal.steps())
        throw UsageError("stochastic_policy: step index out of range");

    const InputVec base = proportional_control(x, ctrl).to_array();
    const InputVec& r = signal.values[static_cast<std::size_t>(step_index)];
    InputVec u{};
    for (int ch = 0; ch < kInputDim; ++ch)
        u[ch] = std::clamp(base[ch] + r[ch], ctrl.lo[ch], ctrl.hi[ch]);
    // Feed and tapping rates can never be negative whatever the bounds say.
    u[0] = std::max(u[0], 0.0);
    u[2] = std::max(u[2], 0.0);
    u[3] = std::max(u[3], 0.0);
    return ControlInput::from_array(u);
}

}  // namespace alucell
