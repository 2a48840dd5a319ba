#pragma once

#include <utility>
#include <vector>

#include "den/matrix.hpp"

namespace den {

// Thrown when a metric or split needs examples of a class that is absent.
struct EmptyClassError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Mann-Whitney AUC with ties counted half. Labels must contain both classes.
// Computed from rank sums, normalized so that auc(scores) + auc(negated
// scores) is exactly 1.
double auc(const Vec& scores, const std::vector<int>& labels);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);

// Sample mean and standard error (sample stddev / sqrt(n)); stderr is 0 for a
// single value.
std::pair<double, double> mean_stderr(const Vec& values);

}  // namespace den
