#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "den/matrix.hpp"

namespace den {

// One tabular classification task: numeric covariates X and integer labels in
// [0, num_classes).
struct Task {
    Matrix X;
    std::vector<int> y;
    std::size_t num_classes = 2;
    std::vector<std::string> column_names;
    std::string id;

    std::size_t size() const { return y.size(); }
    std::size_t dim() const { return X.cols; }
};

// Throws std::invalid_argument on shape/label/finite-value violations.
void validate_task(const Task& task);

struct SupportQuerySplit {
    std::vector<std::size_t> support;
    std::vector<std::size_t> query;
};

// Stratified split keeping class proportions (largest-remainder rounding) and
// guaranteeing at least one example of every class on each side. Throws
// EmptyClassError when a class has fewer than 2 examples.
SupportQuerySplit split_support_query(const std::vector<int>& y, std::size_t num_classes,
                                      double support_fraction, std::uint64_t seed);

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx);

}  // namespace den
