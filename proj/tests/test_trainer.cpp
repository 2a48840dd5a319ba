#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "den/metrics.hpp"
#include "den/model.hpp"
#include "den/rng.hpp"
#include "den/trainer.hpp"

using namespace den;

namespace {

// Linearly shifted class-conditional covariates; easy but not degenerate.
Task make_binary_task(std::size_t n, std::size_t d, double margin, std::uint64_t seed,
                      const std::string& id) {
    Rng rng(seed);
    Task task;
    task.id = id;
    task.num_classes = 2;
    task.X = Matrix(n, d);
    task.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int label = static_cast<int>(i % 2);
        task.y[i] = label;
        for (std::size_t j = 0; j < d; ++j)
            task.X(i, j) = (label == 1 ? margin : -margin) + rng.normal();
    }
    return task;
}

Task make_multiclass_task(std::size_t n, std::size_t d, std::size_t num_classes,
                          double spread, std::uint64_t seed, const std::string& id) {
    Rng rng(seed);
    Task task;
    task.id = id;
    task.num_classes = num_classes;
    task.X = Matrix(n, d);
    task.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int label = static_cast<int>(i % num_classes);
        task.y[i] = label;
        for (std::size_t j = 0; j < d; ++j)
            task.X(i, j) = spread * static_cast<double>(label) + 0.5 * rng.normal();
    }
    return task;
}

ModelConfig small_config() {
    ModelConfig config;
    config.keypoints = 4;
    config.hidden = 4;
    config.depth = 2;
    config.r = 2;
    return config;
}

bool values_sorted(const Plf& plf) {
    for (std::size_t i = 0; i + 1 < plf.values.size(); ++i)
        if (plf.values[i] > plf.values[i + 1]) return false;
    return true;
}

}  // namespace

TEST_CASE("trainer records one history row per step and moves shared params") {
    std::vector<Task> tasks = {make_binary_task(24, 3, 1.0, 5, "a"),
                               make_binary_task(30, 3, 0.8, 6, "b")};
    DenModel model = make_model(small_config(), 41);
    Vec before = flatten_shared(model);

    TrainConfig config;
    config.steps = 5;
    config.batch_size = 8;
    config.seed = 7;
    Trainer trainer(std::move(model), tasks, config);
    trainer.run();

    REQUIRE(trainer.history().size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const StepRecord& rec = trainer.history()[i];
        CHECK(rec.step == i);
        CHECK((rec.task_id == "a" || rec.task_id == "b"));
        CHECK(std::isfinite(rec.loss));
        CHECK(rec.loss > 0.0);
    }
    Vec after = flatten_shared(trainer.model());
    CHECK(before != after);
}

TEST_CASE("pre-training is bitwise deterministic in the seed") {
    std::vector<Task> tasks = {make_binary_task(24, 2, 1.0, 11, "a"),
                               make_binary_task(26, 2, 1.2, 12, "b")};
    TrainConfig config;
    config.steps = 8;
    config.batch_size = 8;
    config.seed = 99;

    std::vector<StepRecord> hist1, hist2;
    DenModel m1 = pretrain(small_config(), tasks, config, &hist1);
    DenModel m2 = pretrain(small_config(), tasks, config, &hist2);
    CHECK(flatten_shared(m1) == flatten_shared(m2));
    REQUIRE(hist1.size() == hist2.size());
    for (std::size_t i = 0; i < hist1.size(); ++i) {
        CHECK(hist1[i].task_id == hist2[i].task_id);
        CHECK(hist1[i].loss == hist2[i].loss);
    }

    config.seed = 100;
    DenModel m3 = pretrain(small_config(), tasks, config);
    CHECK(flatten_shared(m1) != flatten_shared(m3));
}

TEST_CASE("embedding batch that cannot cover every class raises after retries") {
    Task tiny;
    tiny.id = "tiny";
    tiny.num_classes = 2;
    tiny.X = Matrix(2, 2);
    tiny.X.data = {0.0, 1.0, 2.0, 3.0};
    tiny.y = {0, 1};

    TrainConfig config;
    config.batch_size = 1;  // one-row embedding batch can never hold both classes
    config.seed = 3;
    Trainer trainer(make_model(small_config(), 4), {tiny}, config);
    CHECK_THROWS_AS(trainer.step(), EmptyClassError);
}

TEST_CASE("pre-training loss trends downward on a separable family") {
    std::vector<Task> tasks;
    for (int t = 0; t < 3; ++t)
        tasks.push_back(
            make_binary_task(64, 2, 1.5, 200 + static_cast<std::uint64_t>(t), "t" + std::to_string(t)));

    TrainConfig config;
    config.steps = 200;
    config.batch_size = 16;
    config.seed = 17;
    std::vector<StepRecord> history;
    pretrain(small_config(), tasks, config, &history);

    auto mean_loss = [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += history[i].loss;
        return acc / static_cast<double>(hi - lo);
    };
    CHECK(mean_loss(180, 200) < mean_loss(0, 20));
}

TEST_CASE("fine-tuning trains the bank and leaves shared blocks untouched") {
    Task support = make_binary_task(40, 3, 1.0, 33, "ft");
    DenModel model = make_model(small_config(), 55);
    Vec shared_before = flatten_shared(model);

    TrainConfig config;
    config.finetune_epochs = 4;
    config.seed = 9;
    finetune(model, support.X, support.y, 2, config, "ft");

    CHECK(flatten_shared(model) == shared_before);  // bitwise frozen
    CHECK(model.bank_task_id == "ft");
    CHECK(model.bank.width() == 3);
    PlfBank fresh = fit_bank(support.X, model.config.keypoints, model.config.monotonic);
    CHECK(flatten(model.bank) != flatten(fresh));  // values actually moved
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(model.bank.columns[c].keypoints == fresh.columns[c].keypoints);
}

TEST_CASE("zero fine-tune epochs means a fresh identity-ramp bank only") {
    Task support = make_binary_task(20, 2, 1.0, 44, "ft0");
    DenModel model = make_model(small_config(), 56);
    Vec shared_before = flatten_shared(model);

    TrainConfig config;
    config.finetune_epochs = 0;
    finetune(model, support.X, support.y, 2, config, "ft0");

    CHECK(flatten_shared(model) == shared_before);
    PlfBank fresh = fit_bank(support.X, model.config.keypoints, model.config.monotonic);
    CHECK(flatten(model.bank) == flatten(fresh));
}

TEST_CASE("fine-tuning a model without calibration is a no-op beyond the task id") {
    Task support = make_binary_task(20, 2, 1.0, 45, "raw");
    ModelConfig config = small_config();
    config.use_plf = false;
    DenModel model = make_model(config, 57);
    Vec shared_before = flatten_shared(model);

    TrainConfig train;
    train.finetune_epochs = 6;
    finetune(model, support.X, support.y, 2, train, "raw");
    CHECK(model.bank.width() == 0);
    CHECK(model.bank_task_id == "raw");
    CHECK(flatten_shared(model) == shared_before);
}

TEST_CASE("fine-tuning is deterministic in the seed") {
    Task support = make_binary_task(36, 2, 1.0, 46, "det");
    DenModel base = make_model(small_config(), 58);

    TrainConfig config;
    config.finetune_epochs = 5;
    config.seed = 21;
    DenModel a = base;
    DenModel b = base;
    finetune(a, support.X, support.y, 2, config, "det");
    finetune(b, support.X, support.y, 2, config, "det");
    CHECK(flatten(a.bank) == flatten(b.bank));

    config.seed = 22;
    DenModel c = base;
    finetune(c, support.X, support.y, 2, config, "det");
    CHECK(flatten(a.bank) != flatten(c.bank));
}

TEST_CASE("monotonic banks stay sorted through training and fine-tuning") {
    ModelConfig model_config = small_config();
    model_config.monotonic = true;

    std::vector<Task> tasks = {make_binary_task(40, 2, 1.0, 61, "m0"),
                               make_binary_task(40, 2, 1.0, 62, "m1")};
    TrainConfig config;
    config.steps = 25;
    config.batch_size = 10;
    config.seed = 5;
    Trainer trainer(make_model(model_config, 63), tasks, config);
    trainer.run();
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (const Plf& plf : trainer.task_bank(t).columns) {
            CHECK(plf.monotonic);
            CHECK(values_sorted(plf));
        }

    DenModel model = make_model(model_config, 64);
    config.finetune_epochs = 6;
    finetune(model, tasks[0].X, tasks[0].y, 2, config, "m0");
    for (const Plf& plf : model.bank.columns) CHECK(values_sorted(plf));
}

TEST_CASE("sub-task sampling trains on column subsets and keeps banks full width") {
    std::vector<Task> tasks = {make_binary_task(48, 5, 1.0, 71, "wide")};
    TrainConfig config;
    config.steps = 20;
    config.batch_size = 12;
    config.seed = 13;
    config.subtask_sampling = true;

    Trainer trainer(make_model(small_config(), 72), tasks, config);
    trainer.run();
    CHECK(trainer.history().size() == 20);
    CHECK(trainer.task_bank(0).width() == 5);

    // Toggling the flag changes the episode stream.
    TrainConfig plain = config;
    plain.subtask_sampling = false;
    Trainer other(make_model(small_config(), 72), tasks, plain);
    other.run();
    bool any_diff = false;
    for (std::size_t i = 0; i < 20; ++i)
        if (trainer.history()[i].loss != other.history()[i].loss) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("multiclass pre-training updates the label codes") {
    std::vector<Task> tasks = {make_multiclass_task(45, 3, 3, 2.0, 81, "mc")};
    ModelConfig config = small_config();
    config.mode = Mode::multiclass;
    config.max_classes = 5;
    config.label_dim = 3;

    DenModel model = make_model(config, 82);
    Matrix codes_before = model.v->table;
    TrainConfig train;
    train.steps = 10;
    train.batch_size = 12;
    train.seed = 83;
    Trainer trainer(std::move(model), tasks, train);
    trainer.run();
    CHECK(trainer.model().v->table.data != codes_before.data);
}

TEST_CASE("zero-initialized linear baseline separates a margin problem") {
    Task task = make_binary_task(80, 3, 2.0, 91, "lin");
    BaselineConfig config;
    DenseNet net = train_direct_baseline(task.X, task.y, 2, config);
    REQUIRE(net.num_layers() == 1);
    Vec scores = baseline_binary_scores(net, task.X);
    CHECK(auc(scores, task.y) > 0.95);
}

TEST_CASE("mlp baseline fits a boundary the linear model cannot") {
    // XOR-style labels over two columns.
    Rng rng(92);
    Task task;
    task.id = "xor";
    task.num_classes = 2;
    task.X = Matrix(120, 2);
    task.y.resize(120);
    for (std::size_t i = 0; i < 120; ++i) {
        double a = rng.uniform(-1.0, 1.0);
        double b = rng.uniform(-1.0, 1.0);
        task.X(i, 0) = a;
        task.X(i, 1) = b;
        task.y[i] = (a > 0.0) != (b > 0.0) ? 1 : 0;
    }

    BaselineConfig linear;
    Vec linear_scores = baseline_binary_scores(train_direct_baseline(task.X, task.y, 2, linear), task.X);
    CHECK(auc(linear_scores, task.y) < 0.7);

    BaselineConfig mlp;
    mlp.hidden_dims = {16};
    mlp.seed = 93;
    Vec mlp_scores = baseline_binary_scores(train_direct_baseline(task.X, task.y, 2, mlp), task.X);
    CHECK(auc(mlp_scores, task.y) > 0.85);
}

TEST_CASE("multiclass baseline scores recover well-separated clusters") {
    Task task = make_multiclass_task(90, 2, 3, 3.0, 94, "clusters");
    BaselineConfig config;
    DenseNet net = train_direct_baseline(task.X, task.y, 3, config);
    REQUIRE(net.output_dim() == 3);
    Matrix scores = baseline_class_scores(net, task.X);
    std::vector<int> predicted(task.size());
    for (std::size_t i = 0; i < task.size(); ++i) {
        Vec row = scores.row(i);
        predicted[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    CHECK(accuracy(predicted, task.y) > 0.9);
}

TEST_CASE("trainer rejects malformed setups") {
    TrainConfig config;
    CHECK_THROWS_AS(Trainer(make_model(small_config(), 1), {}, config), std::invalid_argument);

    Task task = make_binary_task(10, 2, 1.0, 2, "z");
    TrainConfig zero_batch;
    zero_batch.batch_size = 0;
    CHECK_THROWS_AS(Trainer(make_model(small_config(), 1), {task}, zero_batch),
                    std::invalid_argument);

    Task triple = make_multiclass_task(12, 2, 3, 1.0, 3, "three");
    CHECK_THROWS_AS(Trainer(make_model(small_config(), 1), {triple}, config),
                    std::invalid_argument);
}
