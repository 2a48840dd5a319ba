#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "den/matrix.hpp"

namespace den {

// Piecewise linear function on a fixed strictly increasing keypoint grid.
// Only `values` (the output at each keypoint) is trainable; inputs outside
// the keypoint range are clamped to the boundary values. An input equal to an
// interior keypoint belongs to the segment ending at that keypoint.
struct Plf {
    Vec keypoints;
    Vec values;
    bool monotonic = false;
};

// Uniform keypoints over [lo, hi] and an identity-shaped ramp rescaled to
// [0, 1]: values[l] = l / (K - 1). Deterministic; the seed is part of the
// calibration interface but unused by this initializer.
Plf plf_init(std::size_t num_keypoints, double lo, double hi, std::uint64_t seed = 0);

double plf_forward(const Plf& plf, double x);

// Accumulates d loss / d values into `dvalues` and returns d loss / d x.
double plf_backward(const Plf& plf, double x, double upstream, Vec& dvalues);

// Euclidean projection of `values` onto the nondecreasing cone
// (pool-adjacent-violators).
void plf_project_monotone(Plf& plf);

// Uniform keypoints spanning the observed min/max of one column. A constant
// column is widened by +-0.5 around its value; an empty column is an error.
Vec fit_keypoints_from_support(const Vec& column, std::size_t num_keypoints);

// One PLF per covariate column.
struct PlfBank {
    std::vector<Plf> columns;

    std::size_t width() const { return columns.size(); }
    std::size_t param_count() const;
};

PlfBank fit_bank(const Matrix& X, std::size_t num_keypoints, bool monotonic = false);

// Re-fits keypoints to new support data, keeping each column's trainable
// values untouched.
void refit_bank_keypoints(PlfBank& bank, const Matrix& X);

Matrix bank_forward(const PlfBank& bank, const Matrix& X);

using BankGrads = std::vector<Vec>;

BankGrads zero_grads(const PlfBank& bank);
void accumulate(BankGrads& into, const BankGrads& from);
void scale(BankGrads& grads, double factor);

// Backpropagates dZ (same shape as bank_forward output) through the bank,
// accumulating per-column value gradients; returns d loss / d X.
Matrix bank_backward(const PlfBank& bank, const Matrix& X, const Matrix& dZ, BankGrads& grads);

Vec flatten(const PlfBank& bank);
Vec flatten(const BankGrads& grads);
void unflatten(PlfBank& bank, std::span<const double> flat);

}  // namespace den
