#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "alucell/dataset.hpp"
#include "alucell/nn.hpp"

namespace alucell {

struct TrainConfig {
    int batch_size = 128;
    double lambda = 0.0;
    long epochs = 150;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    Gradients m;
    Gradients v;
    long t = 0;

    static AdamState zeros_like(const ArchitectureSpec& spec);
};

// Bias-corrected Adam update applied elementwise to weights and biases.
void adam_step(ModelParams& params, const Gradients& grad, AdamState& state,
               const TrainConfig& cfg);

// Mini-batch training on the standardized dataset.  Per-epoch seeded
// shuffle, final partial batch kept, gradient = mean squared-error backprop
// plus the L1 subgradient.  Writes one `epoch,loss_mse,loss_l1,sparsity`
// CSV line per epoch to `log` when given.
Checkpoint train_model(const ArchitectureSpec& spec, const Dataset& dataset,
                       const TrainConfig& cfg, std::ostream* log = nullptr);

enum class ModelClass {
    plain_dense,
    plain_sparse,
    input_skip_dense,
    input_skip_sparse,
};

inline constexpr ModelClass kAllModelClasses[] = {
    ModelClass::plain_dense, ModelClass::plain_sparse,
    ModelClass::input_skip_dense, ModelClass::input_skip_sparse};

std::string to_string(ModelClass c);
ModelClass model_class_from_string(const std::string& s);
Topology topology_of(ModelClass c);
// Dense classes train with lambda = 0, sparse ones with the configured
// sparse lambda (1e-4 by default).
double lambda_of(ModelClass c, double sparse_lambda);

// Trains n instances with seeds base_seed + i.  `base_arch` supplies the
// width/depth/activation; the topology comes from the class.
std::vector<Checkpoint> train_class_ensemble(ModelClass cls,
                                             const Dataset& dataset, int n,
                                             std::uint64_t base_seed,
                                             const TrainConfig& base_cfg,
                                             const ArchitectureSpec& base_arch,
                                             double sparse_lambda = 1e-4);

}  // namespace alucell
