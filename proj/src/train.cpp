#include "alucell/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "alucell/errors.hpp"
#include "alucell/io.hpp"
#include "alucell/rng.hpp"

namespace alucell {

namespace {

constexpr double kSparsityThreshold = 1e-3;

void adam_update_block(std::vector<double>& p, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v,
                       double lr, double b1, double b2, double eps,
                       double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (lambda < 0.0) throw ConfigError("train: lambda must be >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: bad learning rate");
}

AdamState AdamState::zeros_like(const ArchitectureSpec& spec) {
    AdamState s;
    s.m = ModelParams::zeros_like(spec);
    s.v = ModelParams::zeros_like(spec);
    return s;
}

void adam_step(ModelParams& params, const Gradients& grad, AdamState& state,
               const TrainConfig& cfg) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam_update_block(params.weights[l].a, grad.weights[l].a,
                          state.m.weights[l].a, state.v.weights[l].a,
                          cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
                          bc1, bc2);
        adam_update_block(params.biases[l], grad.biases[l], state.m.biases[l],
                          state.v.biases[l], cfg.learning_rate, cfg.beta1,
                          cfg.beta2, cfg.epsilon, bc1, bc2);
    }
}

Checkpoint train_model(const ArchitectureSpec& spec, const Dataset& dataset,
                       const TrainConfig& cfg, std::ostream* log) {
    spec.validate();
    cfg.validate();
    if (dataset.pairs.empty()) throw UsageError("train_model: empty dataset");
    if (spec.input_dim != kFeatureDim || spec.output_dim != kStateDim)
        throw ConfigError("train_model: architecture does not match the data");

    // Work in standardized space; the checkpoint keeps the statistics so
    // forecasting can map back to physical units.
    const Normalizer& nm = dataset.norm;
    std::vector<RegressionPair> data(dataset.pairs.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const RegressionPair& src = dataset.pairs[i];
        for (int d = 0; d < kFeatureDim; ++d)
            data[i].z[d] = (src.z[d] - nm.z_mean[d]) / nm.z_std[d];
        for (int d = 0; d < kStateDim; ++d)
            data[i].y[d] = (src.y[d] - nm.y_mean[d]) / nm.y_std[d];
    }

    ModelParams params = init_params(spec, derive_seed(cfg.seed, "init"));
    AdamState adam = AdamState::zeros_like(spec);
    Gradients grad = ModelParams::zeros_like(spec);

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    Checkpoint ck;
    ck.spec = spec;
    ck.norm = nm;
    ck.lambda = cfg.lambda;
    ck.seed = cfg.seed;
    ck.dataset_name = dataset.name;

    ForwardCache cache;
    const auto n = data.size();
    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own RNG so runs are reproducible everywhere.
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = shuffle_rng.below(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_sq_err = 0.0;
        std::size_t pos = 0;
        long batch_index = 0;
        while (pos < n) {
            const std::size_t batch_end =
                std::min(n, pos + static_cast<std::size_t>(cfg.batch_size));
            const double batch_n = static_cast<double>(batch_end - pos);

            grad.fill(0.0);
            double batch_sq_err = 0.0;
            for (std::size_t b = pos; b < batch_end; ++b) {
                const RegressionPair& ex = data[order[b]];
                forward(params, spec,
                        std::span<const double>(ex.z.data(), ex.z.size()),
                        cache);
                for (int d = 0; d < spec.output_dim; ++d) {
                    const double e = cache.output[static_cast<std::size_t>(d)] -
                                     ex.y[static_cast<std::size_t>(d)];
                    batch_sq_err += e * e;
                }
                backward(params, spec, cache,
                         std::span<const double>(ex.y.data(), ex.y.size()),
                         grad);
            }
            if (!std::isfinite(batch_sq_err))
                throw TrainingError("nonfinite loss at epoch " +
                                        std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index),
                                    epoch, batch_index);
            // Batch-mean MSE gradient; the L1 term is not averaged.
            for (auto& W : grad.weights)
                for (double& g : W.a) g /= batch_n;
            for (auto& b : grad.biases)
                for (double& g : b) g /= batch_n;
            add_l1_subgradient(params, cfg.lambda, grad);
            adam_step(params, grad, adam, cfg);

            epoch_sq_err += batch_sq_err;
            pos = batch_end;
            ++batch_index;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mse = epoch_sq_err / static_cast<double>(n);
        entry.l1 = cfg.lambda * l1_norm(params);
        entry.sparsity = sparsity(params, kSparsityThreshold);
        ck.history.push_back(entry);
        if (log) {
            (*log) << entry.epoch << ',' << format_double(entry.mse) << ','
                   << format_double(entry.l1) << ','
                   << format_double(entry.sparsity) << '\n';
        }
    }

    ck.params = std::move(params);
    return ck;
}

std::string to_string(ModelClass c) {
    switch (c) {
        case ModelClass::plain_dense: return "PlainDense";
        case ModelClass::plain_sparse: return "PlainSparse";
        case ModelClass::input_skip_dense: return "InputSkipDense";
        case ModelClass::input_skip_sparse: return "InputSkipSparse";
    }
    throw UsageError("bad model class");
}

ModelClass model_class_from_string(const std::string& s) {
    for (ModelClass c : kAllModelClasses)
        if (to_string(c) == s) return c;
    throw ConfigError("unknown model class: " + s);
}

Topology topology_of(ModelClass c) {
    return (c == ModelClass::plain_dense || c == ModelClass::plain_sparse)
               ? Topology::plain
               : Topology::input_skip;
}

double lambda_of(ModelClass c, double sparse_lambda) {
    return (c == ModelClass::plain_sparse || c == ModelClass::input_skip_sparse)
               ? sparse_lambda
               : 0.0;
}

std::vector<Checkpoint> train_class_ensemble(ModelClass cls,
                                             const Dataset& dataset, int n,
                                             std::uint64_t base_seed,
                                             const TrainConfig& base_cfg,
                                             const ArchitectureSpec& base_arch,
                                             double sparse_lambda) {
    if (n < 1) throw UsageError("train_class_ensemble: n must be >= 1");
    ArchitectureSpec spec = base_arch;
    spec.topology = topology_of(cls);

    std::vector<Checkpoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        TrainConfig cfg = base_cfg;
        cfg.lambda = lambda_of(cls, sparse_lambda);
        cfg.seed = base_seed + static_cast<std::uint64_t>(i);
        try {
            Checkpoint ck = train_model(spec, dataset, cfg);
            ck.model_class = to_string(cls);
            out.push_back(std::move(ck));
        } catch (const TrainingError& e) {
            throw TrainingError(to_string(cls) + " instance " +
                                    std::to_string(i) + ": " + e.what(),
                                e.epoch, e.batch);
        }
    }
    return out;
}

}  // namespace alucell
