#pragma once

#include <vector>

#include "den/matrix.hpp"

namespace den {

// Mean binary cross-entropy from logits, computed in the overflow-safe form
// max(q, 0) - q*y + log(1 + exp(-|q|)). Optionally writes d loss / d logits.
double bce_loss(const Vec& logits, const std::vector<int>& labels, Vec* dlogits = nullptr);

// Mean softmax cross-entropy from per-row class scores. Optionally writes
// d loss / d scores.
double softmax_ce_loss(const Matrix& scores, const std::vector<int>& labels,
                       Matrix* dscores = nullptr);

}  // namespace den
