#include "den/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "den/metrics.hpp"
#include "den/rng.hpp"

namespace den {

void validate_task(const Task& task) {
    if (task.X.rows != task.y.size())
        throw std::invalid_argument("task: covariate rows and labels differ in length");
    if (task.X.rows == 0) throw std::invalid_argument("task: empty");
    if (task.X.cols == 0) throw std::invalid_argument("task: no covariate columns");
    if (task.num_classes < 2) throw std::invalid_argument("task: need at least 2 classes");
    for (int label : task.y)
        if (label < 0 || static_cast<std::size_t>(label) >= task.num_classes)
            throw std::invalid_argument("task: label out of range");
    for (double value : task.X.data)
        if (!std::isfinite(value)) throw std::invalid_argument("task: non-finite covariate");
    if (!task.column_names.empty() && task.column_names.size() != task.X.cols)
        throw std::invalid_argument("task: column name count mismatch");
}

SupportQuerySplit split_support_query(const std::vector<int>& y, std::size_t num_classes,
                                      double support_fraction, std::uint64_t seed) {
    if (!(support_fraction > 0.0 && support_fraction < 1.0))
        throw std::invalid_argument("split_support_query: fraction must be in (0, 1)");
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes)
            throw std::invalid_argument("split_support_query: label out of range");
        members[static_cast<std::size_t>(y[i])].push_back(i);
    }
    for (std::size_t k = 0; k < num_classes; ++k)
        if (members[k].size() < 2)
            throw EmptyClassError("split_support_query: class " + std::to_string(k) +
                                  " needs at least 2 examples");

    // Largest-remainder apportionment of the support budget across classes,
    // then clamp so each class keeps at least one example on each side.
    std::vector<std::size_t> take(num_classes);
    std::vector<std::pair<double, std::size_t>> remainders;
    double exact_total = support_fraction * static_cast<double>(y.size());
    std::size_t budget = static_cast<std::size_t>(std::llround(exact_total));
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
        double exact = support_fraction * static_cast<double>(members[k].size());
        take[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += take[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; i < remainders.size() && assigned < budget; ++i) {
        ++take[remainders[i].second];
        ++assigned;
    }
    for (std::size_t k = 0; k < num_classes; ++k)
        take[k] = std::clamp<std::size_t>(take[k], 1, members[k].size() - 1);

    Rng rng(derive_seed(seed, "support-query-split"));
    SupportQuerySplit split;
    for (std::size_t k = 0; k < num_classes; ++k) {
        rng.shuffle(members[k]);
        for (std::size_t i = 0; i < members[k].size(); ++i)
            (i < take[k] ? split.support : split.query).push_back(members[k][i]);
    }
    std::sort(split.support.begin(), split.support.end());
    std::sort(split.query.begin(), split.query.end());
    return split;
}

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(y[i]);
    return out;
}

}  // namespace den
