#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "den/matrix.hpp"
#include "den/nn.hpp"

namespace den {

// Ordered tuple of 0-based column indices; repeated entries are allowed.
using IndexSet = std::vector<std::size_t>;

struct IndexSetPolicy {
    std::size_t r = 2;
    // Maximum number of tuples kept; defaults to d^2 regardless of r.
    std::optional<std::size_t> max_sets;
    std::uint64_t seed = 0;
};

// All d^r ordered tuples in lexicographic order when they fit under the cap,
// otherwise a seeded sample of distinct tuples (also returned sorted). Pure
// function of (d, policy), so every caller sharing a policy sees the same
// sets for a given dimension.
std::vector<IndexSet> enumerate_index_sets(std::size_t d, const IndexSetPolicy& policy);

// Trainable lookup table mapping labels to m-dimensional codes.
struct LabelEncoder {
    Matrix table;  // max_classes x m

    std::size_t max_classes() const { return table.rows; }
    std::size_t code_dim() const { return table.cols; }
    Vec encode(int label) const;
};

LabelEncoder init_label_encoder(std::size_t max_classes, std::size_t code_dim,
                                std::uint64_t seed);

// Per-row activations retained for the backward pass.
struct EmbedCache {
    std::vector<ForwardCache> row_caches;
};

// Conditional embedding for binary tasks: per-class means of h over the rows
// of Z (class 0 first, then class 1), followed by the positive-class
// fraction. Width is 2 * h.output_dim() + 1. Throws EmptyClassError when a
// class is absent.
Vec embed_conditional(const DenseNet& h, const Matrix& Z, const std::vector<int>& y,
                      EmbedCache* cache = nullptr);

// Backward of embed_conditional: accumulates into dh and returns
// d loss / d Z for this slice.
Matrix embed_conditional_backward(const DenseNet& h, const EmbedCache& cache,
                                  const std::vector<int>& y, const Vec& ds, NetGrads& dh);

// Joint embedding for multiclass tasks: mean over rows of h applied to the
// tuple values concatenated with the label code. Width is h.output_dim().
Vec embed_joint(const DenseNet& h, const LabelEncoder& v, const Matrix& Z,
                const std::vector<int>& y, EmbedCache* cache = nullptr);

// Backward of embed_joint: accumulates into dh and dv (same shape as the
// encoder table) and returns d loss / d Z for this slice.
Matrix embed_joint_backward(const DenseNet& h, const LabelEncoder& v, const EmbedCache& cache,
                            const std::vector<int>& y, const Vec& ds, NetGrads& dh, Matrix& dv);

std::size_t conditional_embed_width(const DenseNet& h);
std::size_t joint_embed_width(const DenseNet& h);

}  // namespace den
