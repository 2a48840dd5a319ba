#include "den/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "den/rng.hpp"

namespace den {

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].data.size() + biases[l].size();
    return n;
}

DenseNet init_params(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw std::invalid_argument("init_params: need at least input and output dims");
    DenseNet net;
    net.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        Matrix w(layer_dims[l + 1], layer_dims[l]);
        double bound = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
        for (double& value : w.data) value = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(layer_dims[l + 1], 0.0);
    }
    return net;
}

Vec dense_forward(const DenseNet& net, const Vec& x, ForwardCache* cache) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("dense_forward: input width mismatch");
    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
    }
    Vec current = x;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        if (cache) cache->inputs.push_back(current);
        const Matrix& w = net.weights[l];
        Vec z(w.rows, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double acc = net.biases[l][i];
            for (std::size_t j = 0; j < w.cols; ++j) acc += w(i, j) * current[j];
            z[i] = acc;
        }
        if (cache) cache->pre_activations.push_back(z);
        bool last = (l + 1 == net.num_layers());
        if (!last)
            for (double& value : z) value = value > 0.0 ? value : 0.0;
        current = std::move(z);
    }
    return current;
}

NetGrads zero_grads(const DenseNet& net) {
    NetGrads grads;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        grads.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        grads.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return grads;
}

void accumulate(NetGrads& into, const NetGrads& from) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        for (std::size_t k = 0; k < into.weights[l].data.size(); ++k)
            into.weights[l].data[k] += from.weights[l].data[k];
        for (std::size_t k = 0; k < into.biases[l].size(); ++k)
            into.biases[l][k] += from.biases[l][k];
    }
}

void scale(NetGrads& grads, double factor) {
    for (auto& w : grads.weights)
        for (double& value : w.data) value *= factor;
    for (auto& b : grads.biases)
        for (double& value : b) value *= factor;
}

Vec dense_backward(const DenseNet& net, const ForwardCache& cache, const Vec& upstream,
                   NetGrads& grads) {
    if (upstream.size() != net.output_dim())
        throw std::invalid_argument("dense_backward: upstream width mismatch");
    Vec delta = upstream;
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        bool last = (l + 1 == net.num_layers());
        if (!last) {
            const Vec& z = cache.pre_activations[l];
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (z[i] <= 0.0) delta[i] = 0.0;
        }
        const Vec& input = cache.inputs[l];
        Matrix& dw = grads.weights[l];
        for (std::size_t i = 0; i < dw.rows; ++i) {
            grads.biases[l][i] += delta[i];
            for (std::size_t j = 0; j < dw.cols; ++j) dw(i, j) += delta[i] * input[j];
        }
        const Matrix& w = net.weights[l];
        Vec next(w.cols, 0.0);
        for (std::size_t j = 0; j < w.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w.rows; ++i) acc += w(i, j) * delta[i];
            next[j] = acc;
        }
        delta = std::move(next);
    }
    return delta;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    state.step += 1;
    double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / b1t;
        double v_hat = state.v[i] / b2t;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

Vec flatten(const DenseNet& net) {
    Vec flat;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        flat.insert(flat.end(), net.weights[l].data.begin(), net.weights[l].data.end());
        flat.insert(flat.end(), net.biases[l].begin(), net.biases[l].end());
    }
    return flat;
}

Vec flatten(const NetGrads& grads) {
    Vec flat;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        flat.insert(flat.end(), grads.weights[l].data.begin(), grads.weights[l].data.end());
        flat.insert(flat.end(), grads.biases[l].begin(), grads.biases[l].end());
    }
    return flat;
}

void unflatten(DenseNet& net, std::span<const double> flat) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        for (double& value : net.weights[l].data) value = flat[pos++];
        for (double& value : net.biases[l]) value = flat[pos++];
    }
    if (pos != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

}  // namespace den
