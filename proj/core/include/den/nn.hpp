#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "den/matrix.hpp"

namespace den {

// Fully connected network: relu on hidden layers, identity on the output
// layer. weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct DenseNet {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<Vec> biases;

    std::size_t num_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t param_count() const;
};

// Weights drawn uniformly from +-1/sqrt(fan_in); biases start at zero.
DenseNet init_params(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

// Activations recorded during a forward pass; inputs[0] is the network input
// and inputs[l] the post-activation input to layer l.
struct ForwardCache {
    std::vector<Vec> inputs;
    std::vector<Vec> pre_activations;
};

Vec dense_forward(const DenseNet& net, const Vec& x, ForwardCache* cache = nullptr);

// Per-layer parameter gradients, same shapes as the network.
struct NetGrads {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;
};

NetGrads zero_grads(const DenseNet& net);
void accumulate(NetGrads& into, const NetGrads& from);
void scale(NetGrads& grads, double factor);

// Backpropagates `upstream` (d loss / d output) through the pass recorded in
// `cache`, accumulating parameter gradients into `grads`. Returns
// d loss / d input.
Vec dense_backward(const DenseNet& net, const ForwardCache& cache, const Vec& upstream,
                   NetGrads& grads);

struct AdamState {
    Vec m;
    Vec v;
    std::int64_t step = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    AdamState() = default;
    explicit AdamState(std::size_t n, double learning_rate = 0.001)
        : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

// One bias-corrected Adam update applied in place to `params`.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// Parameter (de)serialization in a fixed order: weights then bias, layer by
// layer. Used by the optimizer, checkpoints, and gradient checks.
Vec flatten(const DenseNet& net);
Vec flatten(const NetGrads& grads);
void unflatten(DenseNet& net, std::span<const double> flat);

}  // namespace den
