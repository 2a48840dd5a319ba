#include "den/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "den/metrics.hpp"

namespace den {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

void check_scorer(const ScorerSpec& spec) {
    if (spec.count == 0) throw std::invalid_argument("scorer: zero columns");
    if (!(spec.strength_lo <= spec.strength_hi) || spec.strength_lo < 0.0)
        throw std::invalid_argument("scorer: bad strength range");
    if (!(spec.noise > 0.0)) throw std::invalid_argument("scorer: noise must be positive");
    if (!(spec.pi > 0.0 && spec.pi < 1.0))
        throw std::invalid_argument("scorer: pi must be in (0, 1)");
}

Task sample_scorer_rows(const ScorerSpec& spec, const Vec& strengths, std::size_t n,
                        std::uint64_t draw_seed, const std::string& id) {
    Task task;
    task.id = id;
    task.num_classes = 2;
    task.X = Matrix(n, spec.count);
    task.y.resize(n);
    Rng rng(draw_seed);
    for (std::size_t i = 0; i < n; ++i) {
        int label = rng.uniform() < spec.pi ? 1 : 0;
        task.y[i] = label;
        double sign = label == 1 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < spec.count; ++j)
            task.X(i, j) = sigmoid(strengths[j] * sign + spec.noise * rng.normal());
    }
    return task;
}

std::pair<double, double> folded_auc(const Vec& scores, const std::vector<int>& labels) {
    double full = auc(scores, labels);
    constexpr std::size_t kFolds = 10;
    if (labels.size() < 2 * kFolds)
        throw std::invalid_argument("bayes_auc_oracle: need at least 20 samples");
    Vec fold_values;
    std::size_t n = labels.size();
    for (std::size_t f = 0; f < kFolds; ++f) {
        std::size_t lo = f * n / kFolds, hi = (f + 1) * n / kFolds;
        Vec fold_scores(scores.begin() + static_cast<std::ptrdiff_t>(lo),
                        scores.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<int> fold_labels(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                                     labels.begin() + static_cast<std::ptrdiff_t>(hi));
        fold_values.push_back(auc(fold_scores, fold_labels));
    }
    return {full, mean_stderr(fold_values).second};
}

}  // namespace

Vec scorer_strengths(const ScorerSpec& spec, std::uint64_t seed) {
    check_scorer(spec);
    Rng rng(derive_seed(seed, "strengths"));
    Vec strengths(spec.count);
    for (double& a : strengths) a = rng.uniform(spec.strength_lo, spec.strength_hi);
    return strengths;
}

Task simulate_task_family(const ScorerSpec& spec, std::size_t n, std::uint64_t seed,
                          const std::string& id) {
    if (n == 0) throw std::invalid_argument("simulate_task_family: zero rows");
    Vec strengths = scorer_strengths(spec, seed);
    return sample_scorer_rows(spec, strengths, n, derive_seed(seed, "draws"), id);
}

Vec scorer_bayes_scores(const ScorerSpec& spec, const Vec& strengths, const Matrix& X) {
    check_scorer(spec);
    if (strengths.size() != X.cols)
        throw std::invalid_argument("scorer_bayes_scores: strength count mismatch");
    double inv_var = 1.0 / (spec.noise * spec.noise);
    double prior = std::log(spec.pi / (1.0 - spec.pi));
    Vec scores(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double acc = prior;
        for (std::size_t j = 0; j < X.cols; ++j)
            acc += 2.0 * strengths[j] * logit(X(i, j)) * inv_var;
        scores[i] = acc;
    }
    return scores;
}

double scorer_oracle_auc_closed_form(const ScorerSpec& spec, std::uint64_t seed) {
    Vec strengths = scorer_strengths(spec, seed);
    double sum_sq = 0.0;
    for (double a : strengths) sum_sq += a * a;
    return normal_cdf(std::sqrt(2.0 * sum_sq) / spec.noise);
}

OracleEstimate bayes_auc_oracle(const ScorerSpec& spec, std::uint64_t seed, std::size_t n_mc) {
    Vec strengths = scorer_strengths(spec, seed);
    Task mc = sample_scorer_rows(spec, strengths, n_mc, derive_seed(seed, "oracle-mc"),
                                 "oracle-mc");
    Vec scores = scorer_bayes_scores(spec, strengths, mc.X);
    auto [value, se] = folded_auc(scores, mc.y);
    return {value, se};
}

Task sample_subtask(const Task& task, Rng& rng) {
    std::size_t d = task.dim();
    std::size_t width = 1 + rng.index(d);
    std::vector<std::size_t> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    rng.shuffle(cols);
    cols.resize(width);
    std::sort(cols.begin(), cols.end());

    Task sub;
    sub.X = select_columns(task.X, cols);
    sub.y = task.y;
    sub.num_classes = task.num_classes;
    sub.id = task.id;
    if (!task.column_names.empty())
        for (std::size_t c : cols) sub.column_names.push_back(task.column_names[c]);
    return sub;
}

DistortionSpec identity_distortion(std::size_t d) { return DistortionSpec(d); }

DistortionSpec random_distortion(std::size_t d, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "distortion"));
    DistortionSpec spec(d);
    for (ColumnWarp& warp : spec) {
        warp.exponent = rng.uniform(0.25, 4.0);
        warp.scale = rng.uniform(0.5, 2.0);
        warp.shift = rng.uniform(-1.0, 1.0);
    }
    return spec;
}

Matrix apply_heterogeneity(const Matrix& X, const DistortionSpec& spec) {
    if (spec.size() != X.cols)
        throw std::invalid_argument("apply_heterogeneity: column count mismatch");
    for (const ColumnWarp& warp : spec) {
        if (!(warp.scale > 0.0) || !(warp.exponent > 0.0))
            throw std::invalid_argument("apply_heterogeneity: scale and exponent must be positive");
    }
    Matrix out(X.rows, X.cols);
    for (std::size_t j = 0; j < X.cols; ++j) {
        const ColumnWarp& warp = spec[j];
        bool identity_power = warp.exponent == 1.0;
        for (std::size_t i = 0; i < X.rows; ++i) {
            double x = X(i, j);
            if (!identity_power && x < 0.0)
                throw std::invalid_argument(
                    "apply_heterogeneity: negative input under a non-unit exponent");
            double powered = identity_power ? x : std::pow(x, warp.exponent);
            out(i, j) = warp.shift + warp.scale * powered;
        }
    }
    return out;
}

Task apply_heterogeneity(const Task& task, const DistortionSpec& spec) {
    Task out = task;
    out.X = apply_heterogeneity(task.X, spec);
    return out;
}

void validate_f_expansion(const FExpansionSpec& spec) {
    if (spec.family != "diagonal-gaussian")
        throw std::invalid_argument("f-expansion: unknown family " + spec.family);
    if (spec.r != 1)
        throw std::invalid_argument("f-expansion: only expansion order 1 is supported");
    if (spec.dim == 0) throw std::invalid_argument("f-expansion: zero dimension");
    if (spec.num_classes < 2) throw std::invalid_argument("f-expansion: need >= 2 classes");
    if (spec.priors.size() != spec.num_classes)
        throw std::invalid_argument("f-expansion: prior count mismatch");
    double total = 0.0;
    for (double p : spec.priors) {
        if (!(p > 0.0)) throw std::invalid_argument("f-expansion: priors must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("f-expansion: priors must sum to 1");
    if (spec.components.size() != spec.num_classes)
        throw std::invalid_argument("f-expansion: component class count mismatch");
    for (const auto& row : spec.components) {
        if (row.size() != spec.dim)
            throw std::invalid_argument("f-expansion: component column count mismatch");
        for (const GaussianComponent& g : row)
            if (!(g.sigma > 0.0))
                throw std::invalid_argument("f-expansion: sigma must be positive");
    }
}

FExpansionSpec random_f_expansion_spec(std::size_t dim, std::size_t num_classes,
                                       std::uint64_t seed) {
    FExpansionSpec spec;
    spec.dim = dim;
    spec.num_classes = num_classes;
    Rng rng(derive_seed(seed, "f-expansion-spec"));
    spec.priors.resize(num_classes);
    double total = 0.0;
    for (double& p : spec.priors) {
        p = rng.uniform(0.2, 1.0);
        total += p;
    }
    for (double& p : spec.priors) p /= total;
    spec.components.resize(num_classes);
    for (auto& row : spec.components) {
        row.resize(dim);
        for (GaussianComponent& g : row) {
            g.mu = rng.uniform(-2.0, 2.0);
            g.sigma = rng.uniform(0.5, 2.0);
        }
    }
    validate_f_expansion(spec);
    return spec;
}

Vec bayes_posterior_f_expansion(const FExpansionSpec& spec, const Vec& x) {
    validate_f_expansion(spec);
    if (x.size() != spec.dim)
        throw std::invalid_argument("bayes_posterior_f_expansion: input width mismatch");
    double prior_share = 1.0 / static_cast<double>(spec.dim);  // d^-r with r = 1
    // One additive term per index tuple (here: per column), then exp and
    // normalize, mirroring the sum-pool / reduce structure of the classifier.
    Vec totals(spec.num_classes, 0.0);
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        double log_prior = std::log(spec.priors[k]);
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const GaussianComponent& g = spec.components[k][j];
            double zscore = (x[j] - g.mu) / g.sigma;
            double log_density = -0.5 * zscore * zscore - std::log(g.sigma) -
                                 0.5 * std::log(2.0 * std::numbers::pi);
            totals[k] += log_density + prior_share * log_prior;
        }
    }
    double hi = *std::max_element(totals.begin(), totals.end());
    Vec posterior(spec.num_classes);
    double mass = 0.0;
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        posterior[k] = std::exp(totals[k] - hi);
        mass += posterior[k];
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::runtime_error("bayes_posterior_f_expansion: zero total density");
    for (double& p : posterior) p /= mass;
    return posterior;
}

Task sample_f_expansion_task(const FExpansionSpec& spec, std::size_t n, std::uint64_t seed,
                             const std::string& id) {
    validate_f_expansion(spec);
    if (n == 0) throw std::invalid_argument("sample_f_expansion_task: zero rows");
    Task task;
    task.id = id;
    task.num_classes = spec.num_classes;
    task.X = Matrix(n, spec.dim);
    task.y.resize(n);
    Rng rng(derive_seed(seed, "f-expansion-draws"));
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t k = 0;
        double cum = spec.priors[0];
        while (k + 1 < spec.num_classes && u >= cum) cum += spec.priors[++k];
        task.y[i] = static_cast<int>(k);
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const GaussianComponent& g = spec.components[k][j];
            task.X(i, j) = rng.normal(g.mu, g.sigma);
        }
    }
    return task;
}

OracleEstimate bayes_auc_oracle(const FExpansionSpec& spec, std::uint64_t seed,
                                std::size_t n_mc) {
    validate_f_expansion(spec);
    if (spec.num_classes != 2)
        throw std::invalid_argument("bayes_auc_oracle: AUC needs a binary spec");
    Task mc = sample_f_expansion_task(spec, n_mc, derive_seed(seed, "oracle-mc"), "oracle-mc");
    Vec scores(mc.size());
    for (std::size_t i = 0; i < mc.size(); ++i)
        scores[i] = bayes_posterior_f_expansion(spec, mc.X.row(i))[1];
    auto [value, se] = folded_auc(scores, mc.y);
    return {value, se};
}

}  // namespace den
