#include "den/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "den/metrics.hpp"
#include "den/rng.hpp"

namespace den {

std::vector<IndexSet> enumerate_index_sets(std::size_t d, const IndexSetPolicy& policy) {
    if (d == 0) throw std::invalid_argument("enumerate_index_sets: zero dimension");
    if (policy.r == 0) throw std::invalid_argument("enumerate_index_sets: zero tuple length");
    std::size_t cap = policy.max_sets.value_or(d * d);
    if (cap == 0) throw std::invalid_argument("enumerate_index_sets: zero cap");

    // d^r, saturating at cap + 1 so oversized spaces never overflow.
    std::size_t total = 1;
    for (std::size_t i = 0; i < policy.r; ++i) {
        if (total > (cap + 1) / d + 1) {
            total = cap + 1;
            break;
        }
        total *= d;
    }

    std::vector<IndexSet> sets;
    if (total <= cap) {
        sets.reserve(total);
        IndexSet current(policy.r, 0);
        for (;;) {
            sets.push_back(current);
            std::size_t pos = policy.r;
            while (pos > 0) {
                --pos;
                if (++current[pos] < d) break;
                current[pos] = 0;
                if (pos == 0) return sets;
            }
        }
    }

    // Sample distinct tuples; encode each as base-d digits for the seen-set.
    Rng rng(derive_seed(policy.seed, "index-sets"));
    std::unordered_set<std::uint64_t> seen;
    sets.reserve(cap);
    while (sets.size() < cap) {
        IndexSet candidate(policy.r);
        std::uint64_t key = 0;
        for (std::size_t i = 0; i < policy.r; ++i) {
            candidate[i] = rng.index(d);
            key = key * static_cast<std::uint64_t>(d) + candidate[i];
        }
        if (seen.insert(key).second) sets.push_back(std::move(candidate));
    }
    std::sort(sets.begin(), sets.end());
    return sets;
}

Vec LabelEncoder::encode(int label) const {
    if (label < 0 || static_cast<std::size_t>(label) >= table.rows)
        throw std::invalid_argument("LabelEncoder: label out of range");
    return table.row(static_cast<std::size_t>(label));
}

LabelEncoder init_label_encoder(std::size_t max_classes, std::size_t code_dim,
                                std::uint64_t seed) {
    if (max_classes == 0 || code_dim == 0)
        throw std::invalid_argument("init_label_encoder: zero dimension");
    LabelEncoder encoder;
    encoder.table = Matrix(max_classes, code_dim);
    Rng rng(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(code_dim));
    for (double& value : encoder.table.data) value = rng.uniform(-bound, bound);
    return encoder;
}

Vec embed_conditional(const DenseNet& h, const Matrix& Z, const std::vector<int>& y,
                      EmbedCache* cache) {
    if (Z.rows != y.size())
        throw std::invalid_argument("embed_conditional: rows and labels differ in length");
    if (Z.rows == 0) throw std::invalid_argument("embed_conditional: empty input");
    std::size_t out = h.output_dim();
    Vec sums(2 * out, 0.0);
    std::size_t counts[2] = {0, 0};
    if (cache) cache->row_caches.assign(Z.rows, ForwardCache{});
    for (std::size_t i = 0; i < Z.rows; ++i) {
        int label = y[i];
        if (label != 0 && label != 1)
            throw std::invalid_argument("embed_conditional: labels must be 0 or 1");
        Vec hidden = dense_forward(h, Z.row(i), cache ? &cache->row_caches[i] : nullptr);
        std::size_t offset = label == 0 ? 0 : out;
        for (std::size_t k = 0; k < out; ++k) sums[offset + k] += hidden[k];
        ++counts[label];
    }
    if (counts[0] == 0) throw EmptyClassError("embed_conditional: no class-0 examples");
    if (counts[1] == 0) throw EmptyClassError("embed_conditional: no class-1 examples");
    Vec s(2 * out + 1);
    for (std::size_t k = 0; k < out; ++k) {
        s[k] = sums[k] / static_cast<double>(counts[0]);
        s[out + k] = sums[out + k] / static_cast<double>(counts[1]);
    }
    s[2 * out] = static_cast<double>(counts[1]) / static_cast<double>(Z.rows);
    return s;
}

Matrix embed_conditional_backward(const DenseNet& h, const EmbedCache& cache,
                                  const std::vector<int>& y, const Vec& ds, NetGrads& dh) {
    std::size_t n = y.size();
    std::size_t out = h.output_dim();
    if (ds.size() != 2 * out + 1)
        throw std::invalid_argument("embed_conditional_backward: upstream width mismatch");
    std::size_t counts[2] = {0, 0};
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    Matrix dZ(n, h.input_dim());
    // The label-fraction slot has zero gradient with respect to Z and h.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t label = static_cast<std::size_t>(y[i]);
        double inv = 1.0 / static_cast<double>(counts[label]);
        Vec upstream(out);
        for (std::size_t k = 0; k < out; ++k) upstream[k] = ds[label * out + k] * inv;
        Vec dx = dense_backward(h, cache.row_caches[i], upstream, dh);
        dZ.set_row(i, dx);
    }
    return dZ;
}

Vec embed_joint(const DenseNet& h, const LabelEncoder& v, const Matrix& Z,
                const std::vector<int>& y, EmbedCache* cache) {
    if (Z.rows != y.size())
        throw std::invalid_argument("embed_joint: rows and labels differ in length");
    if (Z.rows == 0) throw std::invalid_argument("embed_joint: empty input");
    std::size_t code_dim = v.code_dim();
    if (h.input_dim() != Z.cols + code_dim)
        throw std::invalid_argument("embed_joint: h input width mismatch");
    std::size_t out = h.output_dim();
    Vec s(out, 0.0);
    if (cache) cache->row_caches.assign(Z.rows, ForwardCache{});
    for (std::size_t i = 0; i < Z.rows; ++i) {
        Vec input = Z.row(i);
        Vec code = v.encode(y[i]);
        input.insert(input.end(), code.begin(), code.end());
        Vec hidden = dense_forward(h, input, cache ? &cache->row_caches[i] : nullptr);
        for (std::size_t k = 0; k < out; ++k) s[k] += hidden[k];
    }
    double inv = 1.0 / static_cast<double>(Z.rows);
    for (double& value : s) value *= inv;
    return s;
}

Matrix embed_joint_backward(const DenseNet& h, const LabelEncoder& v, const EmbedCache& cache,
                            const std::vector<int>& y, const Vec& ds, NetGrads& dh, Matrix& dv) {
    std::size_t n = y.size();
    std::size_t out = h.output_dim();
    if (ds.size() != out)
        throw std::invalid_argument("embed_joint_backward: upstream width mismatch");
    std::size_t code_dim = v.code_dim();
    std::size_t tuple_dim = h.input_dim() - code_dim;
    double inv = 1.0 / static_cast<double>(n);
    Vec upstream(out);
    for (std::size_t k = 0; k < out; ++k) upstream[k] = ds[k] * inv;
    Matrix dZ(n, tuple_dim);
    for (std::size_t i = 0; i < n; ++i) {
        Vec dx = dense_backward(h, cache.row_caches[i], upstream, dh);
        for (std::size_t j = 0; j < tuple_dim; ++j) dZ(i, j) = dx[j];
        std::size_t label = static_cast<std::size_t>(y[i]);
        for (std::size_t j = 0; j < code_dim; ++j) dv(label, j) += dx[tuple_dim + j];
    }
    return dZ;
}

std::size_t conditional_embed_width(const DenseNet& h) { return 2 * h.output_dim() + 1; }

std::size_t joint_embed_width(const DenseNet& h) { return h.output_dim(); }

}  // namespace den
