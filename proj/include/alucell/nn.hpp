#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "alucell/dataset.hpp"

namespace alucell {

enum class Topology { plain, input_skip };

enum class Activation { tanh, relu };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Feedforward network shape.  Plain is a standard MLP.  InputSkip feeds the
// concatenation [z_{i-1}; z0] into every affine layer after the first, the
// output layer included; the output activation is always identity.
struct ArchitectureSpec {
    Topology topology = Topology::plain;
    int input_dim = kFeatureDim;
    int output_dim = kStateDim;
    int hidden_layers = 4;
    int hidden_width = 25;
    Activation activation = Activation::tanh;

    int layer_count() const { return hidden_layers + 1; }
    // Width of the vector feeding affine layer `i` (0-based; the last layer
    // is the output layer).
    int layer_input_dim(int i) const;
    int layer_output_dim(int i) const;

    void validate() const;
    bool operator==(const ArchitectureSpec&) const = default;
};

// Row-major dense matrix, just large enough for this engine.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Weights and biases; also reused as the gradient container (same shapes).
struct ModelParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static ModelParams zeros_like(const ArchitectureSpec& spec);
    void fill(double v);
    void check_shapes(const ArchitectureSpec& spec) const;
};

using Gradients = ModelParams;

// Uniform weights in +-1/sqrt(fan_in), zero biases, deterministic per seed
// (layer by layer, row-major draw order).
ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed);

// Activations recorded by forward() as needed for backward().
struct ForwardCache {
    std::vector<std::vector<double>> layer_inputs;  // input to each affine
    std::vector<std::vector<double>> hidden;        // post-activation, hidden only
    std::vector<double> output;
};

void forward(const ModelParams& params, const ArchitectureSpec& spec,
             std::span<const double> z0, ForwardCache& cache);

std::vector<double> forward(const ModelParams& params,
                            const ArchitectureSpec& spec,
                            std::span<const double> z0);

// Gradient of the per-example squared error ||y_hat - y_true||^2 with
// respect to every weight and bias, accumulated into `grad`.
void backward(const ModelParams& params, const ArchitectureSpec& spec,
              const ForwardCache& cache, std::span<const double> y_true,
              Gradients& grad);

// Mean over the batch of ||y_hat - y||^2 plus lambda * sum_j |W_j|
// (biases excluded from the penalty).
double loss(const ModelParams& params, const ArchitectureSpec& spec,
            std::span<const RegressionPair> batch, double lambda);

double l1_norm(const ModelParams& params);

// Adds lambda * sign(w) elementwise on weights (sign(0) = 0); biases get
// nothing.
void add_l1_subgradient(const ModelParams& params, double lambda,
                        Gradients& grad);

// Fraction of weight entries with |w| < threshold, biases excluded.
double sparsity(const ModelParams& params, double threshold);

struct EpochLog {
    long epoch = 0;
    double mse = 0.0;
    double l1 = 0.0;
    double sparsity = 0.0;
};

// Everything needed to reproduce a trained model's forecasts: architecture,
// parameters, the training normalization, and provenance.
struct Checkpoint {
    ArchitectureSpec spec;
    ModelParams params;
    Normalizer norm;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string model_class;
    std::string dataset_name;
    std::vector<EpochLog> history;

    void save(const std::filesystem::path& file) const;
    static Checkpoint load(const std::filesystem::path& file);
};

}  // namespace alucell
