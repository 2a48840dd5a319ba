#include "den/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace den {

double bce_loss(const Vec& logits, const std::vector<int>& labels, Vec* dlogits) {
    if (logits.size() != labels.size())
        throw std::invalid_argument("bce_loss: logits and labels differ in length");
    if (logits.empty()) throw std::invalid_argument("bce_loss: empty input");
    double n = static_cast<double>(logits.size());
    if (dlogits) dlogits->assign(logits.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        int label = labels[i];
        if (label != 0 && label != 1)
            throw std::invalid_argument("bce_loss: labels must be 0 or 1");
        double q = logits[i];
        total += std::max(q, 0.0) - q * static_cast<double>(label) +
                 std::log1p(std::exp(-std::abs(q)));
        if (dlogits) {
            double sigma = 1.0 / (1.0 + std::exp(-q));
            (*dlogits)[i] = (sigma - static_cast<double>(label)) / n;
        }
    }
    return total / n;
}

double softmax_ce_loss(const Matrix& scores, const std::vector<int>& labels, Matrix* dscores) {
    if (scores.rows != labels.size())
        throw std::invalid_argument("softmax_ce_loss: rows and labels differ in length");
    if (scores.rows == 0) throw std::invalid_argument("softmax_ce_loss: empty input");
    double n = static_cast<double>(scores.rows);
    if (dscores) *dscores = Matrix(scores.rows, scores.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.rows; ++i) {
        int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= scores.cols)
            throw std::invalid_argument("softmax_ce_loss: label out of range");
        double hi = scores(i, 0);
        for (std::size_t k = 1; k < scores.cols; ++k) hi = std::max(hi, scores(i, k));
        double sum_exp = 0.0;
        for (std::size_t k = 0; k < scores.cols; ++k) sum_exp += std::exp(scores(i, k) - hi);
        double log_z = hi + std::log(sum_exp);
        total += log_z - scores(i, static_cast<std::size_t>(label));
        if (dscores) {
            for (std::size_t k = 0; k < scores.cols; ++k) {
                double p = std::exp(scores(i, k) - log_z);
                (*dscores)(i, k) = (p - (static_cast<std::size_t>(label) == k ? 1.0 : 0.0)) / n;
            }
        }
    }
    return total / n;
}

}  // namespace den
