#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "alucell/nn.hpp"
#include "alucell/state.hpp"
#include "alucell/trajectory.hpp"

namespace alucell {

// Anything that maps (state, input) in physical units to a state derivative
// in physical units per second.  Trained checkpoints adapt to this via
// checkpoint_model(); tests can plug in oracles.
using StepModel =
    std::function<StateVec(const StateVec& x, const InputVec& u)>;

struct Forecast {
    std::vector<StateVec> states;  // x_hat_0 .. x_hat_m (m <= n on divergence)
    std::optional<long> divergence_step;  // first step whose state went nonfinite

    long length() const { return static_cast<long>(states.size()) - 1; }
};

// Open-loop rollout x_hat_{k+1} = x_hat_k + h * f(x_hat_k, u_k), inputs
// replayed from the test trajectory.  On a nonfinite update the forecast is
// truncated and the divergence step recorded.
Forecast rolling_forecast(const StepModel& model, const StateVec& x0,
                          std::span<const InputVec> inputs, long n, double h);

// Wraps a checkpoint: standardizes [x; u], runs the network, maps the output
// back to physical units.
StepModel checkpoint_model(const Checkpoint& ck);

// Average normalized rolling-forecast MSE over steps 1..n (the shared
// initial state contributes nothing and is excluded).  stds are the
// training-set standard deviations of the eight state variables.
double an_rfmse(const Forecast& forecast, const Trajectory& truth,
                const std::array<double, kStateDim>& stds, long n);

struct BlowupResult {
    bool blown = false;
    std::optional<long> step;  // first step over threshold (or divergence)
};

// Blow-up iff the mean over states of |error|/std exceeds 3 at any step
// j in 1..n.  A forecast that diverged numerically before n counts as a
// blow-up at its divergence step.
BlowupResult detect_blowup(const Forecast& forecast, const Trajectory& truth,
                           const std::array<double, kStateDim>& stds, long n);

struct HorizonMetrics {
    long horizon = 0;
    std::optional<double> an_rfmse;  // absent when the forecast blew up
    bool blowup = false;
    std::optional<long> divergence_step;
};

struct TrajectoryMetrics {
    std::uint32_t trajectory_id = 0;
    std::vector<HorizonMetrics> horizons;
};

// One rolling forecast per test trajectory (to the largest horizon), then
// metrics per horizon; AN-RFMSE is reported only for forecasts that did not
// blow up at that horizon.
std::vector<TrajectoryMetrics> evaluate_model(
    const Checkpoint& ck, const std::vector<Trajectory>& test_set,
    std::span<const long> horizons);

}  // namespace alucell
