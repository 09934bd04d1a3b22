#include "alucell/nn.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "alucell/errors.hpp"
#include "alucell/io.hpp"
#include "alucell/rng.hpp"

namespace alucell {

namespace {

using nlohmann::json;

double apply_act(Activation a, double v) {
    switch (a) {
        case Activation::tanh: return std::tanh(v);
        case Activation::relu: return v > 0.0 ? v : 0.0;
    }
    return v;
}

// Derivative expressed through the activation output (enough for tanh/relu
// and avoids caching pre-activations).
double act_grad_from_output(Activation a, double out) {
    switch (a) {
        case Activation::tanh: return 1.0 - out * out;
        case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

// y = W x + b
void affine(const Matrix& W, const std::vector<double>& b,
            std::span<const double> x, std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(W.rows), 0.0);
    for (int r = 0; r < W.rows; ++r) {
        const double* row = W.a.data() + static_cast<std::size_t>(r) * W.cols;
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = 0; c < W.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

}  // namespace

std::string to_string(Topology t) {
    return t == Topology::plain ? "plain" : "input_skip";
}
Topology topology_from_string(const std::string& s) {
    if (s == "plain") return Topology::plain;
    if (s == "input_skip") return Topology::input_skip;
    throw ConfigError("unknown topology: " + s);
}
std::string to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "relu";
}
Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation: " + s);
}

int ArchitectureSpec::layer_input_dim(int i) const {
    if (i == 0) return input_dim;
    const int carry = hidden_width;
    return topology == Topology::input_skip ? carry + input_dim : carry;
}

int ArchitectureSpec::layer_output_dim(int i) const {
    return i == hidden_layers ? output_dim : hidden_width;
}

void ArchitectureSpec::validate() const {
    if (input_dim < 1 || output_dim < 1 || hidden_width < 1 ||
        hidden_layers < 1)
        throw ConfigError("architecture: all dimensions must be positive");
}

ModelParams ModelParams::zeros_like(const ArchitectureSpec& spec) {
    spec.validate();
    ModelParams p;
    for (int i = 0; i < spec.layer_count(); ++i) {
        p.weights.emplace_back(spec.layer_output_dim(i), spec.layer_input_dim(i));
        p.biases.emplace_back(static_cast<std::size_t>(spec.layer_output_dim(i)),
                              0.0);
    }
    return p;
}

void ModelParams::fill(double v) {
    for (auto& W : weights) std::fill(W.a.begin(), W.a.end(), v);
    for (auto& b : biases) std::fill(b.begin(), b.end(), v);
}

void ModelParams::check_shapes(const ArchitectureSpec& spec) const {
    if (static_cast<int>(weights.size()) != spec.layer_count() ||
        biases.size() != weights.size())
        throw ConfigError("model params: wrong layer count");
    for (int i = 0; i < spec.layer_count(); ++i) {
        const auto& W = weights[static_cast<std::size_t>(i)];
        if (W.rows != spec.layer_output_dim(i) ||
            W.cols != spec.layer_input_dim(i) ||
            static_cast<int>(biases[static_cast<std::size_t>(i)].size()) !=
                W.rows)
            throw ConfigError("model params: shape mismatch at layer " +
                              std::to_string(i));
    }
}

ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros_like(spec);
    Rng rng(seed);
    for (auto& W : p.weights) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(W.cols));
        for (double& w : W.a) w = rng.uniform(-bound, bound);
    }
    return p;
}

void forward(const ModelParams& params, const ArchitectureSpec& spec,
             std::span<const double> z0, ForwardCache& cache) {
    params.check_shapes(spec);
    if (static_cast<int>(z0.size()) != spec.input_dim)
        throw UsageError("forward: input dimension mismatch");

    const int layers = spec.layer_count();
    cache.layer_inputs.resize(static_cast<std::size_t>(layers));
    cache.hidden.resize(static_cast<std::size_t>(spec.hidden_layers));

    std::vector<double> pre;
    for (int i = 0; i < layers; ++i) {
        auto& input = cache.layer_inputs[static_cast<std::size_t>(i)];
        if (i == 0) {
            input.assign(z0.begin(), z0.end());
        } else {
            const auto& prev = cache.hidden[static_cast<std::size_t>(i - 1)];
            input = prev;
            if (spec.topology == Topology::input_skip)
                input.insert(input.end(), z0.begin(), z0.end());
        }
        affine(params.weights[static_cast<std::size_t>(i)],
               params.biases[static_cast<std::size_t>(i)], input, pre);
        if (i == layers - 1) {
            cache.output = pre;  // identity output activation
        } else {
            auto& out = cache.hidden[static_cast<std::size_t>(i)];
            out.resize(pre.size());
            for (std::size_t j = 0; j < pre.size(); ++j)
                out[j] = apply_act(spec.activation, pre[j]);
        }
    }
    for (double v : cache.output)
        if (!std::isfinite(v)) throw DomainError("nonfinite network output");
}

std::vector<double> forward(const ModelParams& params,
                            const ArchitectureSpec& spec,
                            std::span<const double> z0) {
    ForwardCache cache;
    forward(params, spec, z0, cache);
    return cache.output;
}

void backward(const ModelParams& params, const ArchitectureSpec& spec,
              const ForwardCache& cache, std::span<const double> y_true,
              Gradients& grad) {
    if (static_cast<int>(y_true.size()) != spec.output_dim)
        throw UsageError("backward: target dimension mismatch");
    if (grad.weights.size() != params.weights.size())
        throw UsageError("backward: gradient container has wrong shape");

    const int layers = spec.layer_count();
    // d(loss)/d(pre-activation) of the current layer, starting from
    // d||y_hat - y||^2 / d y_hat = 2 (y_hat - y) with identity output.
    std::vector<double> delta(cache.output.size());
    for (std::size_t j = 0; j < delta.size(); ++j)
        delta[j] = 2.0 * (cache.output[j] - y_true[j]);

    std::vector<double> d_input;
    for (int i = layers - 1; i >= 0; --i) {
        const Matrix& W = params.weights[static_cast<std::size_t>(i)];
        Matrix& gW = grad.weights[static_cast<std::size_t>(i)];
        auto& gb = grad.biases[static_cast<std::size_t>(i)];
        const auto& input = cache.layer_inputs[static_cast<std::size_t>(i)];

        for (int r = 0; r < W.rows; ++r) {
            const double d = delta[static_cast<std::size_t>(r)];
            gb[static_cast<std::size_t>(r)] += d;
            double* grow = gW.a.data() + static_cast<std::size_t>(r) * W.cols;
            for (int c = 0; c < W.cols; ++c)
                grow[c] += d * input[static_cast<std::size_t>(c)];
        }
        if (i == 0) break;

        // Pull the delta back through W; only the leading block (the
        // previous hidden layer) continues backward -- the z0 columns end
        // at the data.
        d_input.assign(input.size(), 0.0);
        for (int r = 0; r < W.rows; ++r) {
            const double d = delta[static_cast<std::size_t>(r)];
            const double* row = W.a.data() + static_cast<std::size_t>(r) * W.cols;
            for (int c = 0; c < W.cols; ++c)
                d_input[static_cast<std::size_t>(c)] += d * row[c];
        }
        const auto& prev_out = cache.hidden[static_cast<std::size_t>(i - 1)];
        delta.assign(prev_out.size(), 0.0);
        for (std::size_t j = 0; j < prev_out.size(); ++j)
            delta[j] =
                d_input[j] * act_grad_from_output(spec.activation, prev_out[j]);
    }
}

double loss(const ModelParams& params, const ArchitectureSpec& spec,
            std::span<const RegressionPair> batch, double lambda) {
    if (batch.empty()) throw UsageError("loss: empty batch");
    double acc = 0.0;
    ForwardCache cache;
    for (const auto& p : batch) {
        forward(params, spec, std::span<const double>(p.z.data(), p.z.size()),
                cache);
        for (std::size_t j = 0; j < cache.output.size(); ++j) {
            const double e = cache.output[j] - p.y[j];
            acc += e * e;
        }
    }
    acc /= static_cast<double>(batch.size());
    if (lambda != 0.0) acc += lambda * l1_norm(params);
    return acc;
}

double l1_norm(const ModelParams& params) {
    double acc = 0.0;
    for (const auto& W : params.weights)
        for (double w : W.a) acc += std::abs(w);
    return acc;
}

void add_l1_subgradient(const ModelParams& params, double lambda,
                        Gradients& grad) {
    if (lambda == 0.0) return;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        const auto& src = params.weights[i].a;
        auto& dst = grad.weights[i].a;
        for (std::size_t j = 0; j < src.size(); ++j) {
            if (src[j] > 0.0)
                dst[j] += lambda;
            else if (src[j] < 0.0)
                dst[j] -= lambda;
        }
    }
}

double sparsity(const ModelParams& params, double threshold) {
    if (!(threshold > 0.0)) throw UsageError("sparsity: threshold must be > 0");
    std::size_t below = 0, total = 0;
    for (const auto& W : params.weights) {
        total += W.a.size();
        for (double w : W.a)
            if (std::abs(w) < threshold) ++below;
    }
    return total == 0 ? 0.0
                      : static_cast<double>(below) / static_cast<double>(total);
}

// ---------------------------------------------------------------- checkpoint

void Checkpoint::save(const std::filesystem::path& file) const {
    json j;
    j["version"] = 1;
    j["architecture"] = {{"topology", to_string(spec.topology)},
                         {"input_dim", spec.input_dim},
                         {"output_dim", spec.output_dim},
                         {"hidden_layers", spec.hidden_layers},
                         {"hidden_width", spec.hidden_width},
                         {"activation", to_string(spec.activation)}};
    json weights = json::array();
    json biases = json::array();
    for (const auto& W : params.weights)
        weights.push_back(
            {{"rows", W.rows}, {"cols", W.cols}, {"data", W.a}});
    for (const auto& b : params.biases) biases.push_back(b);
    j["weights"] = weights;
    j["biases"] = biases;
    j["normalization"] = {{"z_mean", norm.z_mean}, {"z_std", norm.z_std},
                          {"y_mean", norm.y_mean}, {"y_std", norm.y_std},
                          {"z_constant", norm.z_constant},
                          {"y_constant", norm.y_constant}};
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["model_class"] = model_class;
    j["dataset"] = dataset_name;
    json hist = json::array();
    for (const auto& e : history)
        hist.push_back({{"epoch", e.epoch},
                        {"mse", e.mse},
                        {"l1", e.l1},
                        {"sparsity", e.sparsity}});
    j["history"] = hist;
    write_file_atomic(file, j.dump() + "\n");
}

Checkpoint Checkpoint::load(const std::filesystem::path& file) {
    json j;
    try {
        j = json::parse(read_file(file));
    } catch (const json::exception& e) {
        throw IoError("bad checkpoint " + file.string() + ": " + e.what());
    }
    Checkpoint ck;
    try {
        if (j.at("version").get<int>() != 1)
            throw IoError("unsupported checkpoint version in " + file.string());
        const auto& a = j.at("architecture");
        ck.spec.topology = topology_from_string(a.at("topology"));
        ck.spec.input_dim = a.at("input_dim").get<int>();
        ck.spec.output_dim = a.at("output_dim").get<int>();
        ck.spec.hidden_layers = a.at("hidden_layers").get<int>();
        ck.spec.hidden_width = a.at("hidden_width").get<int>();
        ck.spec.activation = activation_from_string(a.at("activation"));
        for (const auto& w : j.at("weights")) {
            Matrix W(w.at("rows").get<int>(), w.at("cols").get<int>());
            W.a = w.at("data").get<std::vector<double>>();
            if (W.a.size() !=
                static_cast<std::size_t>(W.rows) * static_cast<std::size_t>(W.cols))
                throw IoError("weight blob size mismatch in " + file.string());
            ck.params.weights.push_back(std::move(W));
        }
        for (const auto& b : j.at("biases"))
            ck.params.biases.push_back(b.get<std::vector<double>>());
        const auto& n = j.at("normalization");
        ck.norm.z_mean = n.at("z_mean").get<std::array<double, kFeatureDim>>();
        ck.norm.z_std = n.at("z_std").get<std::array<double, kFeatureDim>>();
        ck.norm.y_mean = n.at("y_mean").get<std::array<double, kStateDim>>();
        ck.norm.y_std = n.at("y_std").get<std::array<double, kStateDim>>();
        ck.norm.z_constant =
            n.at("z_constant").get<std::array<bool, kFeatureDim>>();
        ck.norm.y_constant =
            n.at("y_constant").get<std::array<bool, kStateDim>>();
        ck.lambda = j.at("lambda").get<double>();
        ck.seed = j.at("seed").get<std::uint64_t>();
        ck.model_class = j.value("model_class", "");
        ck.dataset_name = j.value("dataset", "");
        for (const auto& e : j.at("history"))
            ck.history.push_back({e.at("epoch").get<long>(),
                                  e.at("mse").get<double>(),
                                  e.at("l1").get<double>(),
                                  e.at("sparsity").get<double>()});
    } catch (const json::exception& e) {
        throw IoError("bad checkpoint " + file.string() + ": " + e.what());
    }
    ck.params.check_shapes(ck.spec);
    return ck;
}

}  // namespace alucell
