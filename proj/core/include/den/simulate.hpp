#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "den/matrix.hpp"
#include "den/rng.hpp"
#include "den/task.hpp"

namespace den {

// Binary task family: labels are Bernoulli(pi) and every covariate is a
// noisy sigmoid-squashed scorer, x = sigmoid(a * (2y - 1) + noise * N(0, 1)),
// with per-column strengths a drawn uniformly from [strength_lo, strength_hi]
// when the family is instantiated. The default strength range spans per-column
// discrimination from weak to near-perfect.
struct ScorerSpec {
    std::size_t count = 4;  // covariate columns
    double strength_lo = 0.18;
    double strength_hi = 1.65;
    double noise = 1.0;
    double pi = 0.5;
};

// Strengths are a pure function of (spec, seed) so data generation and the
// Bayes oracle agree on the same task instance.
Vec scorer_strengths(const ScorerSpec& spec, std::uint64_t seed);

Task simulate_task_family(const ScorerSpec& spec, std::size_t n, std::uint64_t seed,
                          const std::string& id);

// Exact Bayes discriminant for a scorer task: sum of 2 * a_j * logit(x_j) /
// noise^2 plus the prior log odds.
Vec scorer_bayes_scores(const ScorerSpec& spec, const Vec& strengths, const Matrix& X);

// Closed-form AUC of the Bayes discriminant: Phi(sqrt(2 * sum a_j^2) / noise).
double scorer_oracle_auc_closed_form(const ScorerSpec& spec, std::uint64_t seed);

struct OracleEstimate {
    double auc = 0.0;
    double stderr_value = 0.0;
};

// Monte Carlo estimate of the Bayes-oracle AUC with a 10-fold standard error.
// Draws come from a dedicated stream so they never collide with task data
// generated from the same seed.
OracleEstimate bayes_auc_oracle(const ScorerSpec& spec, std::uint64_t seed, std::size_t n_mc);

// Random sub-task: keeps the labels and a uniformly sized random subset of
// distinct columns (at least one).
Task sample_subtask(const Task& task, Rng& rng);

// Per-column monotone warp w(x) = shift + scale * x^exponent. Exponents other
// than 1 require nonnegative inputs; scale and exponent must stay positive so
// ranks (hence AUC) are preserved.
struct ColumnWarp {
    double exponent = 1.0;
    double scale = 1.0;
    double shift = 0.0;
};

using DistortionSpec = std::vector<ColumnWarp>;

DistortionSpec identity_distortion(std::size_t d);
DistortionSpec random_distortion(std::size_t d, std::uint64_t seed);

Matrix apply_heterogeneity(const Matrix& X, const DistortionSpec& spec);
Task apply_heterogeneity(const Task& task, const DistortionSpec& spec);

// Class-conditional diagonal-Gaussian generative model with known priors.
// Supports expansion order 1 (one column per tuple).
struct GaussianComponent {
    double mu = 0.0;
    double sigma = 1.0;
};

struct FExpansionSpec {
    std::size_t r = 1;
    std::size_t dim = 0;
    std::size_t num_classes = 2;
    Vec priors;
    std::vector<std::vector<GaussianComponent>> components;  // [class][column]
    std::string family = "diagonal-gaussian";
};

void validate_f_expansion(const FExpansionSpec& spec);

FExpansionSpec random_f_expansion_spec(std::size_t dim, std::size_t num_classes,
                                       std::uint64_t seed);

// Bayes posterior assembled the way the classifier head would represent it:
// one additive term per index tuple equal to the log tuple density plus
// d^-r times the log prior, summed over tuples and exponentiated, then
// normalized. Throws when the total mass vanishes.
Vec bayes_posterior_f_expansion(const FExpansionSpec& spec, const Vec& x);

Task sample_f_expansion_task(const FExpansionSpec& spec, std::size_t n, std::uint64_t seed,
                             const std::string& id);

OracleEstimate bayes_auc_oracle(const FExpansionSpec& spec, std::uint64_t seed,
                                std::size_t n_mc);

}  // namespace den
