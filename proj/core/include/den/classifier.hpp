#pragma once

#include <vector>

#include "den/matrix.hpp"
#include "den/nn.hpp"

namespace den {

// Permutation-invariant head: phi maps one per-tuple input to a latent
// vector, the latents are summed (no normalization), and psi reduces the
// pooled vector.
struct ClassifierHead {
    DenseNet phi;
    DenseNet psi;
};

struct HeadGrads {
    NetGrads phi;
    NetGrads psi;
};

HeadGrads zero_grads(const ClassifierHead& head);
void accumulate(HeadGrads& into, const HeadGrads& from);
void scale(HeadGrads& grads, double factor);

Vec flatten(const ClassifierHead& head);
Vec flatten(const HeadGrads& grads);
void unflatten(ClassifierHead& head, std::span<const double> flat);

struct DeepSetsCache {
    std::vector<ForwardCache> phi_caches;
    Vec pooled;
    ForwardCache psi_cache;
};

// Binary score: psi applied to the sum of phi over the per-tuple inputs.
// A positive value predicts class 1.
double deepsets_logit(const ClassifierHead& head, const std::vector<Vec>& phi_inputs,
                      DeepSetsCache* cache = nullptr);

// Returns d loss / d phi_inputs (one vector per tuple), accumulating
// parameter gradients into `grads`.
std::vector<Vec> deepsets_logit_backward(const ClassifierHead& head, const DeepSetsCache& cache,
                                         double dlogit, HeadGrads& grads);

// Pooled representation pushed through all psi layers except the final one,
// i.e. the input to psi's last linear layer. With a single-layer psi this is
// the pooled sum itself.
Vec penultimate_embed(const ClassifierHead& head, const std::vector<Vec>& phi_inputs,
                      DeepSetsCache* cache = nullptr);

std::vector<Vec> penultimate_embed_backward(const ClassifierHead& head,
                                            const DeepSetsCache& cache, const Vec& de,
                                            HeadGrads& grads);

// Class scores by matching: score[k] is the mean inner product between the
// query representation and the class-k support representations. Every class
// below num_classes must appear in y_support.
Vec matching_scores(const Vec& e_query, const std::vector<Vec>& e_support,
                    const std::vector<int>& y_support, std::size_t num_classes);

void matching_scores_backward(const Vec& e_query, const std::vector<Vec>& e_support,
                              const std::vector<int>& y_support, std::size_t num_classes,
                              const Vec& dscores, Vec& de_query, std::vector<Vec>& de_support);

// Numerically stable (max-shifted) softmax.
Vec softmax(const Vec& scores);

}  // namespace den
