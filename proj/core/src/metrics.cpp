#include "den/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace den {

double auc(const Vec& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: scores and labels differ in length");
    std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int label : labels) {
        if (label != 0 && label != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(label);
    }
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0) throw EmptyClassError("auc: no positive examples");
    if (n_neg == 0) throw EmptyClassError("auc: no negative examples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of average ranks over positives; average ranks make each tied
    // pair contribute exactly one half.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }

    double np = static_cast<double>(n_pos);
    double concordant = rank_sum_pos - np * (np + 1.0) / 2.0;  // half-integer, exact
    double total = np * static_cast<double>(n_neg);
    // Divide the smaller side so that the metric and its score-negated
    // counterpart round to values summing to exactly 1.
    double smaller = std::min(concordant, total - concordant);
    double ratio = smaller / total;
    return concordant <= total - concordant ? ratio : 1.0 - ratio;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual) {
    if (predicted.size() != actual.size())
        throw std::invalid_argument("accuracy: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == actual[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::pair<double, double> mean_stderr(const Vec& values) {
    if (values.empty()) throw std::invalid_argument("mean_stderr: empty input");
    double n = static_cast<double>(values.size());
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double value : values) ss += (value - mean) * (value - mean);
    double stddev = std::sqrt(ss / (n - 1.0));
    return {mean, stddev / std::sqrt(n)};
}

}  // namespace den
