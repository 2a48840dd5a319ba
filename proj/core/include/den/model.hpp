#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "den/classifier.hpp"
#include "den/embedding.hpp"
#include "den/matrix.hpp"
#include "den/nn.hpp"
#include "den/plf.hpp"

namespace den {

enum class Mode { binary, multiclass };

struct ModelConfig {
    Mode mode = Mode::binary;
    std::size_t keypoints = 10;   // calibration keypoints per column
    std::size_t hidden = 16;      // width of every hidden layer
    std::size_t depth = 2;        // weight layers in each of h, phi, psi
    std::size_t r = 2;            // tuple length
    std::optional<std::size_t> cap;  // max index sets; d^2 when unset
    std::size_t max_classes = 10;    // label-encoder rows (multiclass)
    std::size_t label_dim = 4;       // label-code width (multiclass)
    bool monotonic = false;
    bool use_plf = true;
};

// The calibration bank is task-specific state and is swapped per task; h, v
// and the head are shared across tasks.
struct DenModel {
    ModelConfig config;
    DenseNet h;
    std::optional<LabelEncoder> v;
    ClassifierHead head;
    PlfBank bank;
    std::string bank_task_id;
    std::uint64_t index_seed = 0;
};

DenModel make_model(const ModelConfig& config, std::uint64_t seed);

IndexSetPolicy index_policy(const DenModel& model);

// Fits (or refits) the model's calibration bank to a task's support
// covariates. A no-op when the transform is disabled.
void attach_task_bank(DenModel& model, const Matrix& support_X, const std::string& task_id);

// Gradients for everything an episode touches. `v` is empty in binary mode.
struct EpisodeGrads {
    BankGrads bank;
    NetGrads h;
    Matrix v;
    HeadGrads head;
};

EpisodeGrads zero_episode_grads(const DenModel& model);

// Mean episode loss (binary cross-entropy or softmax cross-entropy according
// to mode) with gradients for all blocks accumulated into `grads`. Support
// rows feed the distribution embeddings; query rows feed the loss.
double episode_loss_and_grads(const DenModel& model, const Matrix& support_X,
                              const std::vector<int>& support_y, const Matrix& query_X,
                              const std::vector<int>& query_y, std::size_t num_classes,
                              EpisodeGrads& grads);

// Inference-only forward passes for the model's current bank.
Vec den_logits(const DenModel& model, const Matrix& support_X,
               const std::vector<int>& support_y, const Matrix& query_X);
Matrix den_probs(const DenModel& model, const Matrix& support_X,
                 const std::vector<int>& support_y, const Matrix& query_X,
                 std::size_t num_classes);
std::vector<int> den_predict(const DenModel& model, const Matrix& support_X,
                             const std::vector<int>& support_y, const Matrix& query_X,
                             std::size_t num_classes);

// Parameters shared across tasks (h, label encoder, head) in a fixed order.
Vec flatten_shared(const DenModel& model);
Vec flatten_shared_grads(const DenModel& model, const EpisodeGrads& grads);
void unflatten_shared(DenModel& model, std::span<const double> flat);

struct ParamCounts {
    std::size_t transform;              // closed form: d * keypoints
    std::size_t embedding;              // closed form, weights only
    std::size_t classification;         // closed form, weights only
    std::size_t embedding_weights;      // counted from the built network
    std::size_t classification_weights; // counted from the built network
    std::size_t total_with_biases;      // every trainable value in the model
};

ParamCounts count_params(const DenModel& model, std::size_t d);

}  // namespace den
