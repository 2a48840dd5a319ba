#include "den/plf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace den {

Plf plf_init(std::size_t num_keypoints, double lo, double hi, std::uint64_t) {
    if (num_keypoints < 2) throw std::invalid_argument("plf_init: need at least 2 keypoints");
    if (!(lo < hi)) throw std::invalid_argument("plf_init: lo must be below hi");
    Plf plf;
    plf.keypoints.resize(num_keypoints);
    plf.values.resize(num_keypoints);
    double denom = static_cast<double>(num_keypoints - 1);
    for (std::size_t l = 0; l < num_keypoints; ++l) {
        double t = static_cast<double>(l) / denom;
        plf.keypoints[l] = lo + (hi - lo) * t;
        plf.values[l] = t;
    }
    plf.keypoints.back() = hi;
    return plf;
}

namespace {

// Segment index l with keypoints[l] < x <= keypoints[l+1]. Callers handle the
// clamp regions before asking.
std::size_t segment_of(const Vec& keypoints, double x) {
    auto it = std::lower_bound(keypoints.begin(), keypoints.end(), x);
    return static_cast<std::size_t>(it - keypoints.begin()) - 1;
}

}  // namespace

double plf_forward(const Plf& plf, double x) {
    const Vec& k = plf.keypoints;
    if (x <= k.front()) return plf.values.front();
    if (x >= k.back()) return plf.values.back();
    std::size_t l = segment_of(k, x);
    double w = (x - k[l]) / (k[l + 1] - k[l]);
    return (1.0 - w) * plf.values[l] + w * plf.values[l + 1];
}

double plf_backward(const Plf& plf, double x, double upstream, Vec& dvalues) {
    const Vec& k = plf.keypoints;
    if (x <= k.front()) {
        dvalues.front() += upstream;
        return 0.0;
    }
    if (x >= k.back()) {
        dvalues.back() += upstream;
        return 0.0;
    }
    std::size_t l = segment_of(k, x);
    double span = k[l + 1] - k[l];
    double w = (x - k[l]) / span;
    dvalues[l] += upstream * (1.0 - w);
    dvalues[l + 1] += upstream * w;
    return upstream * (plf.values[l + 1] - plf.values[l]) / span;
}

void plf_project_monotone(Plf& plf) {
    Vec& v = plf.values;
    // Pool-adjacent-violators with unit weights: merge blocks whose means
    // decrease, then write each block's mean back over its span.
    std::vector<double> mean;
    std::vector<std::size_t> count;
    mean.reserve(v.size());
    count.reserve(v.size());
    for (double value : v) {
        double block_mean = value;
        std::size_t block_count = 1;
        while (!mean.empty() && mean.back() > block_mean) {
            block_mean = (mean.back() * static_cast<double>(count.back()) +
                          block_mean * static_cast<double>(block_count)) /
                         static_cast<double>(count.back() + block_count);
            block_count += count.back();
            mean.pop_back();
            count.pop_back();
        }
        mean.push_back(block_mean);
        count.push_back(block_count);
    }
    std::size_t pos = 0;
    for (std::size_t b = 0; b < mean.size(); ++b)
        for (std::size_t i = 0; i < count[b]; ++i) v[pos++] = mean[b];
}

Vec fit_keypoints_from_support(const Vec& column, std::size_t num_keypoints) {
    if (column.empty())
        throw std::invalid_argument("fit_keypoints_from_support: empty column");
    if (num_keypoints < 2)
        throw std::invalid_argument("fit_keypoints_from_support: need at least 2 keypoints");
    auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
    double lo = *lo_it, hi = *hi_it;
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("fit_keypoints_from_support: non-finite values");
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Vec keypoints(num_keypoints);
    double denom = static_cast<double>(num_keypoints - 1);
    for (std::size_t l = 0; l < num_keypoints; ++l)
        keypoints[l] = lo + (hi - lo) * static_cast<double>(l) / denom;
    keypoints.back() = hi;
    return keypoints;
}

std::size_t PlfBank::param_count() const {
    std::size_t n = 0;
    for (const Plf& plf : columns) n += plf.values.size();
    return n;
}

PlfBank fit_bank(const Matrix& X, std::size_t num_keypoints, bool monotonic) {
    PlfBank bank;
    bank.columns.reserve(X.cols);
    for (std::size_t j = 0; j < X.cols; ++j) {
        Vec column(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) column[i] = X(i, j);
        Vec keypoints = fit_keypoints_from_support(column, num_keypoints);
        Plf plf = plf_init(num_keypoints, keypoints.front(), keypoints.back());
        plf.keypoints = std::move(keypoints);
        plf.monotonic = monotonic;
        bank.columns.push_back(std::move(plf));
    }
    return bank;
}

void refit_bank_keypoints(PlfBank& bank, const Matrix& X) {
    if (X.cols != bank.columns.size())
        throw std::invalid_argument("refit_bank_keypoints: column count mismatch");
    for (std::size_t j = 0; j < X.cols; ++j) {
        Vec column(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i) column[i] = X(i, j);
        bank.columns[j].keypoints =
            fit_keypoints_from_support(column, bank.columns[j].values.size());
    }
}

Matrix bank_forward(const PlfBank& bank, const Matrix& X) {
    if (X.cols != bank.columns.size())
        throw std::invalid_argument("bank_forward: column count mismatch");
    Matrix Z(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j)
            Z(i, j) = plf_forward(bank.columns[j], X(i, j));
    return Z;
}

BankGrads zero_grads(const PlfBank& bank) {
    BankGrads grads;
    grads.reserve(bank.columns.size());
    for (const Plf& plf : bank.columns) grads.emplace_back(plf.values.size(), 0.0);
    return grads;
}

void accumulate(BankGrads& into, const BankGrads& from) {
    for (std::size_t j = 0; j < into.size(); ++j)
        for (std::size_t l = 0; l < into[j].size(); ++l) into[j][l] += from[j][l];
}

void scale(BankGrads& grads, double factor) {
    for (Vec& column : grads)
        for (double& value : column) value *= factor;
}

Matrix bank_backward(const PlfBank& bank, const Matrix& X, const Matrix& dZ, BankGrads& grads) {
    if (!X.same_shape(dZ)) throw std::invalid_argument("bank_backward: shape mismatch");
    Matrix dX(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j)
            dX(i, j) = plf_backward(bank.columns[j], X(i, j), dZ(i, j), grads[j]);
    return dX;
}

Vec flatten(const PlfBank& bank) {
    Vec flat;
    for (const Plf& plf : bank.columns)
        flat.insert(flat.end(), plf.values.begin(), plf.values.end());
    return flat;
}

Vec flatten(const BankGrads& grads) {
    Vec flat;
    for (const Vec& column : grads) flat.insert(flat.end(), column.begin(), column.end());
    return flat;
}

void unflatten(PlfBank& bank, std::span<const double> flat) {
    std::size_t pos = 0;
    for (Plf& plf : bank.columns)
        for (double& value : plf.values) value = flat[pos++];
    if (pos != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

}  // namespace den
