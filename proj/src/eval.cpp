#include "alucell/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "alucell/errors.hpp"

namespace alucell {

Forecast rolling_forecast(const StepModel& model, const StateVec& x0,
                          std::span<const InputVec> inputs, long n, double h) {
    if (n < 0) throw UsageError("rolling_forecast: negative horizon");
    if (static_cast<long>(inputs.size()) < n)
        throw UsageError("rolling_forecast: input sequence shorter than horizon");
    if (!(h > 0.0)) throw UsageError("rolling_forecast: h must be positive");

    Forecast fc;
    fc.states.reserve(static_cast<std::size_t>(n) + 1);
    fc.states.push_back(x0);

    StateVec x = x0;
    for (long k = 0; k < n; ++k) {
        const StateVec dx = model(x, inputs[static_cast<std::size_t>(k)]);
        StateVec next;
        bool finite = true;
        for (int i = 0; i < kStateDim; ++i) {
            next[i] = x[i] + h * dx[i];
            finite = finite && std::isfinite(next[i]);
        }
        if (!finite) {
            fc.divergence_step = k + 1;
            break;
        }
        fc.states.push_back(next);
        x = next;
    }
    return fc;
}

StepModel checkpoint_model(const Checkpoint& ck) {
    if (ck.spec.input_dim != kFeatureDim || ck.spec.output_dim != kStateDim)
        throw UsageError("checkpoint_model: architecture is not a cell model");
    // Copies keep the returned closure self-contained.
    const ArchitectureSpec spec = ck.spec;
    const ModelParams params = ck.params;
    const Normalizer nm = ck.norm;
    auto cache = std::make_shared<ForwardCache>();
    return [spec, params, nm, cache](const StateVec& x,
                                     const InputVec& u) -> StateVec {
        std::array<double, kFeatureDim> z;
        for (int i = 0; i < kStateDim; ++i)
            z[i] = (x[i] - nm.z_mean[i]) / nm.z_std[i];
        for (int i = 0; i < kInputDim; ++i)
            z[kStateDim + i] =
                (u[i] - nm.z_mean[kStateDim + i]) / nm.z_std[kStateDim + i];
        ForwardCache& c = *cache;
        forward(params, spec, std::span<const double>(z.data(), z.size()), c);
        StateVec out;
        for (int i = 0; i < kStateDim; ++i)
            out[i] = c.output[static_cast<std::size_t>(i)] * nm.y_std[i] +
                     nm.y_mean[i];
        return out;
    };
}

namespace {

void check_metric_args(const Forecast& forecast, const Trajectory& truth,
                       const std::array<double, kStateDim>& stds, long n) {
    if (n < 1) throw UsageError("metric horizon must be >= 1");
    if (forecast.length() < n)
        throw UsageError("forecast shorter than requested horizon");
    if (static_cast<long>(truth.states.size()) < n + 1)
        throw UsageError("truth trajectory shorter than requested horizon");
    for (double s : stds)
        if (!(s > 0.0)) throw ConfigError("metric stds must be positive");
}

}  // namespace

double an_rfmse(const Forecast& forecast, const Trajectory& truth,
                const std::array<double, kStateDim>& stds, long n) {
    check_metric_args(forecast, truth, stds, n);
    double acc = 0.0;
    for (int i = 0; i < kStateDim; ++i) {
        double state_acc = 0.0;
        for (long j = 1; j <= n; ++j) {
            const double e = (forecast.states[static_cast<std::size_t>(j)][i] -
                              truth.states[static_cast<std::size_t>(j)][i]) /
                             stds[i];
            state_acc += e * e;
        }
        acc += state_acc / static_cast<double>(n);
    }
    return acc / static_cast<double>(kStateDim);
}

BlowupResult detect_blowup(const Forecast& forecast, const Trajectory& truth,
                           const std::array<double, kStateDim>& stds, long n) {
    if (n < 1) throw UsageError("metric horizon must be >= 1");
    for (double s : stds)
        if (!(s > 0.0)) throw ConfigError("metric stds must be positive");
    if (static_cast<long>(truth.states.size()) < n + 1)
        throw UsageError("truth trajectory shorter than requested horizon");

    const long have = std::min(n, forecast.length());
    for (long j = 1; j <= have; ++j) {
        double mean_abs = 0.0;
        for (int i = 0; i < kStateDim; ++i) {
            mean_abs += std::abs(forecast.states[static_cast<std::size_t>(j)][i] -
                                 truth.states[static_cast<std::size_t>(j)][i]) /
                        stds[i];
        }
        mean_abs /= static_cast<double>(kStateDim);
        if (mean_abs > 3.0) return {true, j};
    }
    // Numerical divergence inside the horizon is a blow-up by definition.
    if (forecast.divergence_step && *forecast.divergence_step <= n)
        return {true, forecast.divergence_step};
    return {false, std::nullopt};
}

std::vector<TrajectoryMetrics> evaluate_model(
    const Checkpoint& ck, const std::vector<Trajectory>& test_set,
    std::span<const long> horizons) {
    if (test_set.empty()) throw UsageError("evaluate_model: empty test set");
    if (horizons.empty()) throw UsageError("evaluate_model: no horizons");

    const StepModel model = checkpoint_model(ck);
    const std::array<double, kStateDim> stds = ck.norm.state_stds();
    const long max_horizon = *std::max_element(horizons.begin(), horizons.end());

    std::vector<TrajectoryMetrics> out;
    out.reserve(test_set.size());
    for (const Trajectory& truth : test_set) {
        if (truth.steps() < max_horizon)
            throw UsageError("test trajectory shorter than largest horizon");
        const Forecast fc =
            rolling_forecast(model, truth.states.front(),
                             std::span<const InputVec>(truth.inputs.data(),
                                                       truth.inputs.size()),
                             max_horizon, truth.h);
        TrajectoryMetrics tm;
        tm.trajectory_id = truth.id;
        for (long n : horizons) {
            HorizonMetrics hm;
            hm.horizon = n;
            const BlowupResult blow = detect_blowup(fc, truth, stds, n);
            hm.blowup = blow.blown;
            if (fc.divergence_step && *fc.divergence_step <= n)
                hm.divergence_step = fc.divergence_step;
            if (!blow.blown && fc.length() >= n)
                hm.an_rfmse = an_rfmse(fc, truth, stds, n);
            tm.horizons.push_back(hm);
        }
        out.push_back(std::move(tm));
    }
    return out;
}

}  // namespace alucell
