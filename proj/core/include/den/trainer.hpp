#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "den/model.hpp"
#include "den/rng.hpp"
#include "den/task.hpp"

namespace den {

struct TrainConfig {
    std::size_t steps = 1000;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    std::size_t finetune_epochs = 10;
    std::uint64_t seed = 0;
    bool subtask_sampling = false;
};

struct StepRecord {
    std::size_t step = 0;
    std::string task_id;
    double loss = 0.0;
};

// Episodic pre-training over a collection of tasks. Each step samples one
// task and two disjoint batches of it: one feeds the distribution
// embeddings, the other the loss. A single optimizer step then updates the
// shared blocks and the sampled task's calibration bank together.
class Trainer {
  public:
    Trainer(DenModel model, std::vector<Task> tasks, const TrainConfig& config);

    double step();
    void run();

    const DenModel& model() const { return model_; }
    DenModel& model() { return model_; }
    const std::vector<StepRecord>& history() const { return history_; }
    const PlfBank& task_bank(std::size_t task_index) const { return banks_[task_index]; }

  private:
    DenModel model_;
    std::vector<Task> tasks_;
    TrainConfig config_;
    std::vector<PlfBank> banks_;
    std::vector<AdamState> bank_states_;
    AdamState shared_state_;
    Rng rng_;
    std::size_t steps_taken_ = 0;
    std::vector<StepRecord> history_;
};

DenModel pretrain(const ModelConfig& model_config, const std::vector<Task>& tasks,
                  const TrainConfig& config, std::vector<StepRecord>* history = nullptr);

// Adapts a pre-trained model to a new task: fits a fresh calibration bank on
// the support set, then trains only the bank's values. Each epoch splits the
// support set into two stratified halves whose embedding/loss roles alternate
// with epoch parity, and applies one optimizer step. The shared blocks are
// not touched.
void finetune(DenModel& model, const Matrix& support_X, const std::vector<int>& support_y,
              std::size_t num_classes, const TrainConfig& config, const std::string& task_id);

// Plain supervised baseline trained directly on the support set with
// full-batch gradient descent. An empty hidden_dims list gives a linear
// (logistic-regression) model initialized at zero; otherwise a randomly
// initialized multilayer net.
struct BaselineConfig {
    std::size_t steps = 500;
    double learning_rate = 0.1;
    std::vector<std::size_t> hidden_dims;
    std::uint64_t seed = 0;
};

DenseNet train_direct_baseline(const Matrix& X, const std::vector<int>& y,
                               std::size_t num_classes, const BaselineConfig& config);

// Scores for ranking/prediction: one logit per row in binary mode.
Vec baseline_binary_scores(const DenseNet& net, const Matrix& X);
Matrix baseline_class_scores(const DenseNet& net, const Matrix& X);

}  // namespace den
