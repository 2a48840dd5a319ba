#include "den/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "den/metrics.hpp"

namespace den {

HeadGrads zero_grads(const ClassifierHead& head) {
    return {zero_grads(head.phi), zero_grads(head.psi)};
}

void accumulate(HeadGrads& into, const HeadGrads& from) {
    accumulate(into.phi, from.phi);
    accumulate(into.psi, from.psi);
}

void scale(HeadGrads& grads, double factor) {
    scale(grads.phi, factor);
    scale(grads.psi, factor);
}

Vec flatten(const ClassifierHead& head) {
    Vec flat = flatten(head.phi);
    Vec psi = flatten(head.psi);
    flat.insert(flat.end(), psi.begin(), psi.end());
    return flat;
}

Vec flatten(const HeadGrads& grads) {
    Vec flat = flatten(grads.phi);
    Vec psi = flatten(grads.psi);
    flat.insert(flat.end(), psi.begin(), psi.end());
    return flat;
}

void unflatten(ClassifierHead& head, std::span<const double> flat) {
    std::size_t phi_count = head.phi.param_count();
    unflatten(head.phi, flat.subspan(0, phi_count));
    unflatten(head.psi, flat.subspan(phi_count));
}

namespace {

Vec pooled_phi(const ClassifierHead& head, const std::vector<Vec>& phi_inputs,
               DeepSetsCache* cache) {
    if (phi_inputs.empty()) throw std::invalid_argument("classifier: no tuple inputs");
    if (cache) cache->phi_caches.assign(phi_inputs.size(), ForwardCache{});
    Vec pooled(head.phi.output_dim(), 0.0);
    for (std::size_t j = 0; j < phi_inputs.size(); ++j) {
        Vec latent = dense_forward(head.phi, phi_inputs[j],
                                   cache ? &cache->phi_caches[j] : nullptr);
        for (std::size_t k = 0; k < pooled.size(); ++k) pooled[k] += latent[k];
    }
    if (cache) cache->pooled = pooled;
    return pooled;
}

std::vector<Vec> pooled_phi_backward(const ClassifierHead& head, const DeepSetsCache& cache,
                                     const Vec& dpooled, HeadGrads& grads) {
    std::vector<Vec> dinputs(cache.phi_caches.size());
    for (std::size_t j = 0; j < cache.phi_caches.size(); ++j)
        dinputs[j] = dense_backward(head.phi, cache.phi_caches[j], dpooled, grads.phi);
    return dinputs;
}

}  // namespace

double deepsets_logit(const ClassifierHead& head, const std::vector<Vec>& phi_inputs,
                      DeepSetsCache* cache) {
    if (head.psi.output_dim() != 1)
        throw std::invalid_argument("deepsets_logit: psi must produce a scalar");
    Vec pooled = pooled_phi(head, phi_inputs, cache);
    Vec out = dense_forward(head.psi, pooled, cache ? &cache->psi_cache : nullptr);
    return out[0];
}

std::vector<Vec> deepsets_logit_backward(const ClassifierHead& head, const DeepSetsCache& cache,
                                         double dlogit, HeadGrads& grads) {
    Vec dpooled = dense_backward(head.psi, cache.psi_cache, Vec{dlogit}, grads.psi);
    return pooled_phi_backward(head, cache, dpooled, grads);
}

Vec penultimate_embed(const ClassifierHead& head, const std::vector<Vec>& phi_inputs,
                      DeepSetsCache* cache) {
    Vec current = pooled_phi(head, phi_inputs, cache);
    // Run psi's hidden layers only; with one layer the pooled vector passes
    // through unchanged.
    if (cache) {
        cache->psi_cache.inputs.clear();
        cache->psi_cache.pre_activations.clear();
    }
    for (std::size_t l = 0; l + 1 < head.psi.num_layers(); ++l) {
        if (cache) cache->psi_cache.inputs.push_back(current);
        const Matrix& w = head.psi.weights[l];
        Vec z(w.rows, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double acc = head.psi.biases[l][i];
            for (std::size_t j = 0; j < w.cols; ++j) acc += w(i, j) * current[j];
            z[i] = acc;
        }
        if (cache) cache->psi_cache.pre_activations.push_back(z);
        for (double& value : z) value = value > 0.0 ? value : 0.0;
        current = std::move(z);
    }
    return current;
}

std::vector<Vec> penultimate_embed_backward(const ClassifierHead& head,
                                            const DeepSetsCache& cache, const Vec& de,
                                            HeadGrads& grads) {
    Vec delta = de;
    for (std::size_t l = head.psi.num_layers() - 1; l-- > 0;) {
        const Vec& z = cache.psi_cache.pre_activations[l];
        for (std::size_t i = 0; i < delta.size(); ++i)
            if (z[i] <= 0.0) delta[i] = 0.0;
        const Vec& input = cache.psi_cache.inputs[l];
        Matrix& dw = grads.psi.weights[l];
        for (std::size_t i = 0; i < dw.rows; ++i) {
            grads.psi.biases[l][i] += delta[i];
            for (std::size_t j = 0; j < dw.cols; ++j) dw(i, j) += delta[i] * input[j];
        }
        const Matrix& w = head.psi.weights[l];
        Vec next(w.cols, 0.0);
        for (std::size_t j = 0; j < w.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w.rows; ++i) acc += w(i, j) * delta[i];
            next[j] = acc;
        }
        delta = std::move(next);
    }
    return pooled_phi_backward(head, cache, delta, grads);
}

Vec matching_scores(const Vec& e_query, const std::vector<Vec>& e_support,
                    const std::vector<int>& y_support, std::size_t num_classes) {
    if (e_support.size() != y_support.size())
        throw std::invalid_argument("matching_scores: support size mismatch");
    Vec scores(num_classes, 0.0);
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t i = 0; i < e_support.size(); ++i) {
        std::size_t k = static_cast<std::size_t>(y_support[i]);
        if (k >= num_classes)
            throw std::invalid_argument("matching_scores: label out of range");
        double dot = 0.0;
        for (std::size_t j = 0; j < e_query.size(); ++j) dot += e_query[j] * e_support[i][j];
        scores[k] += dot;
        ++counts[k];
    }
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (counts[k] == 0)
            throw EmptyClassError("matching_scores: class " + std::to_string(k) +
                                  " absent from support");
        scores[k] /= static_cast<double>(counts[k]);
    }
    return scores;
}

void matching_scores_backward(const Vec& e_query, const std::vector<Vec>& e_support,
                              const std::vector<int>& y_support, std::size_t num_classes,
                              const Vec& dscores, Vec& de_query, std::vector<Vec>& de_support) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int label : y_support) ++counts[static_cast<std::size_t>(label)];
    for (std::size_t i = 0; i < e_support.size(); ++i) {
        std::size_t k = static_cast<std::size_t>(y_support[i]);
        double weight = dscores[k] / static_cast<double>(counts[k]);
        for (std::size_t j = 0; j < e_query.size(); ++j) {
            de_query[j] += weight * e_support[i][j];
            de_support[i][j] += weight * e_query[j];
        }
    }
}

Vec softmax(const Vec& scores) {
    if (scores.empty()) throw std::invalid_argument("softmax: empty input");
    double hi = *std::max_element(scores.begin(), scores.end());
    Vec probs(scores.size());
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        probs[k] = std::exp(scores[k] - hi);
        total += probs[k];
    }
    for (double& p : probs) p /= total;
    return probs;
}

}  // namespace den
