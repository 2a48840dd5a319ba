#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "den/matrix.hpp"

namespace den::test {

// Central finite differences of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, Vec x, double eps = 1e-6) {
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + eps;
        double hi = f(x);
        x[i] = keep - eps;
        double lo = f(x);
        x[i] = keep;
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

// Worst relative disagreement, with a floor so near-zero pairs compare
// absolutely.
inline double max_grad_err(const Vec& analytic, const Vec& numeric, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

// Independent quadratic-time AUC: count concordant positive/negative pairs
// (ties half), then normalize the smaller side first exactly like the
// library does so results are bit-comparable.
inline double auc_bruteforce(const Vec& scores, const std::vector<int>& labels) {
    double concordant = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j])
                concordant += 1.0;
            else if (scores[i] == scores[j])
                concordant += 0.5;
        }
    }
    for (int label : labels) n_neg += label == 0 ? 1 : 0;
    double total = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    double smaller = std::min(concordant, total - concordant);
    double ratio = smaller / total;
    return concordant <= total - concordant ? ratio : 1.0 - ratio;
}

}  // namespace den::test
