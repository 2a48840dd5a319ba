#include "den/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "den/losses.hpp"
#include "den/metrics.hpp"

namespace den {

namespace {

constexpr std::size_t kBatchRetries = 20;

bool covers_all_classes(const std::vector<int>& labels, std::size_t num_classes) {
    std::vector<bool> seen(num_classes, false);
    for (int label : labels) seen[static_cast<std::size_t>(label)] = true;
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

void apply_monotonic_projection(PlfBank& bank) {
    for (Plf& plf : bank.columns)
        if (plf.monotonic) plf_project_monotone(plf);
}

}  // namespace

Trainer::Trainer(DenModel model, std::vector<Task> tasks, const TrainConfig& config)
    : model_(std::move(model)),
      tasks_(std::move(tasks)),
      config_(config),
      shared_state_(flatten_shared(model_).size(), config.learning_rate),
      rng_(derive_seed(config.seed, "episodes")) {
    if (tasks_.empty()) throw std::invalid_argument("Trainer: no tasks");
    if (config_.batch_size == 0) throw std::invalid_argument("Trainer: zero batch size");
    for (const Task& task : tasks_) {
        validate_task(task);
        if (model_.config.mode == Mode::binary && task.num_classes != 2)
            throw std::invalid_argument("Trainer: binary model given a non-binary task");
        if (task.num_classes > model_.config.max_classes &&
            model_.config.mode == Mode::multiclass)
            throw std::invalid_argument("Trainer: task exceeds label-encoder capacity");
        if (task.size() < 2) throw std::invalid_argument("Trainer: task too small to batch");
    }
    banks_.reserve(tasks_.size());
    bank_states_.reserve(tasks_.size());
    for (const Task& task : tasks_) {
        if (model_.config.use_plf) {
            banks_.push_back(
                fit_bank(task.X, model_.config.keypoints, model_.config.monotonic));
            bank_states_.emplace_back(flatten(banks_.back()).size(), config_.learning_rate);
        } else {
            banks_.emplace_back();
            bank_states_.emplace_back(0, config_.learning_rate);
        }
    }
}

double Trainer::step() {
    std::size_t t = rng_.index(tasks_.size());
    const Task& task = tasks_[t];
    std::size_t half = std::min(config_.batch_size, task.size() / 2);

    // Two disjoint batches; the embedding batch must contain every class.
    std::vector<std::size_t> order(task.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> support_idx, query_idx;
    bool ok = false;
    for (std::size_t attempt = 0; attempt < kBatchRetries && !ok; ++attempt) {
        rng_.shuffle(order);
        support_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
        query_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(half),
                         order.begin() + static_cast<std::ptrdiff_t>(2 * half));
        ok = covers_all_classes(select_labels(task.y, support_idx), task.num_classes);
    }
    if (!ok)
        throw EmptyClassError("Trainer: embedding batch missing a class for task " + task.id);

    Matrix support_X = select_rows(task.X, support_idx);
    Matrix query_X = select_rows(task.X, query_idx);
    std::vector<int> support_y = select_labels(task.y, support_idx);
    std::vector<int> query_y = select_labels(task.y, query_idx);

    // Optional sub-task sampling: train this episode on a random subset of
    // the task's columns (and the matching slice of its calibration bank).
    std::vector<std::size_t> cols(task.dim());
    std::iota(cols.begin(), cols.end(), 0);
    if (config_.subtask_sampling) {
        std::size_t width = 1 + rng_.index(task.dim());
        rng_.shuffle(cols);
        cols.resize(width);
        std::sort(cols.begin(), cols.end());
        support_X = select_columns(support_X, cols);
        query_X = select_columns(query_X, cols);
    }
    if (model_.config.use_plf) {
        model_.bank.columns.clear();
        for (std::size_t c : cols) model_.bank.columns.push_back(banks_[t].columns[c]);
    }
    model_.bank_task_id = task.id;

    EpisodeGrads grads = zero_episode_grads(model_);
    double loss = episode_loss_and_grads(model_, support_X, support_y, query_X, query_y,
                                         task.num_classes, grads);

    Vec shared = flatten_shared(model_);
    Vec shared_grads = flatten_shared_grads(model_, grads);
    adam_step(shared, shared_grads, shared_state_);
    unflatten_shared(model_, shared);

    if (model_.config.use_plf) {
        BankGrads full = zero_grads(banks_[t]);
        for (std::size_t i = 0; i < cols.size(); ++i) full[cols[i]] = grads.bank[i];
        Vec values = flatten(banks_[t]);
        adam_step(values, flatten(full), bank_states_[t]);
        unflatten(banks_[t], values);
        apply_monotonic_projection(banks_[t]);
    }

    history_.push_back({steps_taken_, task.id, loss});
    ++steps_taken_;
    return loss;
}

void Trainer::run() {
    for (std::size_t i = 0; i < config_.steps; ++i) step();
}

DenModel pretrain(const ModelConfig& model_config, const std::vector<Task>& tasks,
                  const TrainConfig& config, std::vector<StepRecord>* history) {
    DenModel model = make_model(model_config, derive_seed(config.seed, "model-init"));
    Trainer trainer(std::move(model), tasks, config);
    trainer.run();
    if (history) *history = trainer.history();
    return trainer.model();
}

void finetune(DenModel& model, const Matrix& support_X, const std::vector<int>& support_y,
              std::size_t num_classes, const TrainConfig& config, const std::string& task_id) {
    attach_task_bank(model, support_X, task_id);
    if (!model.config.use_plf || config.finetune_epochs == 0) return;

    AdamState state(flatten(model.bank).size(), config.learning_rate);
    Rng rng(derive_seed(config.seed, "finetune"));
    for (std::size_t epoch = 0; epoch < config.finetune_epochs; ++epoch) {
        SupportQuerySplit halves =
            split_support_query(support_y, num_classes, 0.5, rng.next_u64());
        const auto& embed_idx = epoch % 2 == 0 ? halves.support : halves.query;
        const auto& loss_idx = epoch % 2 == 0 ? halves.query : halves.support;

        EpisodeGrads grads = zero_episode_grads(model);
        episode_loss_and_grads(model, select_rows(support_X, embed_idx),
                               select_labels(support_y, embed_idx),
                               select_rows(support_X, loss_idx),
                               select_labels(support_y, loss_idx), num_classes, grads);

        Vec values = flatten(model.bank);
        adam_step(values, flatten(grads.bank), state);
        unflatten(model.bank, values);
        apply_monotonic_projection(model.bank);
    }
}

DenseNet train_direct_baseline(const Matrix& X, const std::vector<int>& y,
                               std::size_t num_classes, const BaselineConfig& config) {
    if (X.rows != y.size())
        throw std::invalid_argument("train_direct_baseline: rows and labels differ");
    if (num_classes < 2) throw std::invalid_argument("train_direct_baseline: need 2+ classes");
    std::size_t out_dim = num_classes == 2 ? 1 : num_classes;
    std::vector<std::size_t> dims;
    dims.push_back(X.cols);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(out_dim);

    DenseNet net = init_params(dims, config.seed);
    if (config.hidden_dims.empty()) {
        // Logistic regression starts at zero; its loss is convex so the
        // origin is a fine deterministic start.
        for (Matrix& w : net.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    }

    for (std::size_t step_i = 0; step_i < config.steps; ++step_i) {
        NetGrads grads = zero_grads(net);
        if (num_classes == 2) {
            Vec logits(X.rows);
            std::vector<ForwardCache> caches(X.rows);
            for (std::size_t i = 0; i < X.rows; ++i)
                logits[i] = dense_forward(net, X.row(i), &caches[i])[0];
            Vec dlogits;
            bce_loss(logits, y, &dlogits);
            for (std::size_t i = 0; i < X.rows; ++i)
                dense_backward(net, caches[i], Vec{dlogits[i]}, grads);
        } else {
            Matrix scores(X.rows, num_classes);
            std::vector<ForwardCache> caches(X.rows);
            for (std::size_t i = 0; i < X.rows; ++i)
                scores.set_row(i, dense_forward(net, X.row(i), &caches[i]));
            Matrix dscores;
            softmax_ce_loss(scores, y, &dscores);
            for (std::size_t i = 0; i < X.rows; ++i)
                dense_backward(net, caches[i], dscores.row(i), grads);
        }
        Vec params = flatten(net);
        Vec flat_grads = flatten(grads);
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] -= config.learning_rate * flat_grads[i];
        unflatten(net, params);
    }
    return net;
}

Vec baseline_binary_scores(const DenseNet& net, const Matrix& X) {
    if (net.output_dim() != 1)
        throw std::invalid_argument("baseline_binary_scores: net is not binary");
    Vec scores(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) scores[i] = dense_forward(net, X.row(i))[0];
    return scores;
}

Matrix baseline_class_scores(const DenseNet& net, const Matrix& X) {
    Matrix scores(X.rows, net.output_dim());
    for (std::size_t i = 0; i < X.rows; ++i) scores.set_row(i, dense_forward(net, X.row(i)));
    return scores;
}

}  // namespace den
