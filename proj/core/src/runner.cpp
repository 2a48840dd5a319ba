#include "den/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "den/io.hpp"
#include "den/losses.hpp"
#include "den/metrics.hpp"
#include "den/model.hpp"
#include "den/simulate.hpp"
#include "den/task.hpp"
#include "den/trainer.hpp"

namespace den {

namespace {

using nlohmann::json;

json parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ManifestError("invalid JSON in " + path);
    if (!j.is_object()) throw ManifestError(path + ": manifest must be a JSON object");
    return j;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ManifestError("field '" + key + "': " + e.what());
    }
}

ModelConfig parse_model_config(const json& manifest, const CliOptions& options) {
    ModelConfig config;
    if (manifest.contains("model")) {
        const json& m = manifest.at("model");
        std::string mode = get_or<std::string>(m, "mode", "binary");
        if (mode == "multiclass")
            config.mode = Mode::multiclass;
        else if (mode == "binary")
            config.mode = Mode::binary;
        else
            throw ManifestError("model.mode must be 'binary' or 'multiclass'");
        config.keypoints = get_or<std::size_t>(m, "keypoints", config.keypoints);
        config.hidden = get_or<std::size_t>(m, "hidden", config.hidden);
        config.depth = get_or<std::size_t>(m, "depth", config.depth);
        config.r = get_or<std::size_t>(m, "r", config.r);
        if (m.contains("cap") && !m.at("cap").is_null())
            config.cap = m.at("cap").get<std::size_t>();
        config.max_classes = get_or<std::size_t>(m, "max_classes", config.max_classes);
        config.label_dim = get_or<std::size_t>(m, "label_dim", config.label_dim);
        config.monotonic = get_or<bool>(m, "monotonic", config.monotonic);
        config.use_plf = get_or<bool>(m, "use_plf", config.use_plf);
    }
    if (options.no_plf) config.use_plf = false;
    return config;
}

TrainConfig parse_train_config(const json& manifest, std::uint64_t seed) {
    TrainConfig config;
    config.seed = seed;
    if (manifest.contains("train")) {
        const json& t = manifest.at("train");
        config.steps = get_or<std::size_t>(t, "steps", config.steps);
        config.batch_size = get_or<std::size_t>(t, "batch_size", config.batch_size);
        config.learning_rate = get_or<double>(t, "learning_rate", config.learning_rate);
        config.finetune_epochs =
            get_or<std::size_t>(t, "finetune_epochs", config.finetune_epochs);
        config.subtask_sampling = get_or<bool>(t, "subtask_sampling", config.subtask_sampling);
    }
    return config;
}

struct SimulationConfig {
    std::size_t families = 1;
    std::size_t rows = 256;
    std::size_t columns = 4;
    std::optional<std::pair<std::size_t, std::size_t>> column_range;
    ScorerSpec spec;  // count is set per family
    bool distort = false;
    std::size_t n_mc = 0;
};

SimulationConfig parse_simulation(const json& j) {
    SimulationConfig sim;
    sim.families = get_or<std::size_t>(j, "families", sim.families);
    sim.rows = get_or<std::size_t>(j, "rows", sim.rows);
    sim.columns = get_or<std::size_t>(j, "columns", sim.columns);
    if (j.contains("column_range")) {
        auto range = j.at("column_range").get<std::vector<std::size_t>>();
        if (range.size() != 2 || range[0] == 0 || range[0] > range[1])
            throw ManifestError("simulation.column_range must be [lo, hi] with 0 < lo <= hi");
        sim.column_range = {range[0], range[1]};
    }
    if (j.contains("spec")) {
        const json& s = j.at("spec");
        sim.spec.strength_lo = get_or<double>(s, "strength_lo", sim.spec.strength_lo);
        sim.spec.strength_hi = get_or<double>(s, "strength_hi", sim.spec.strength_hi);
        sim.spec.noise = get_or<double>(s, "noise", sim.spec.noise);
        sim.spec.pi = get_or<double>(s, "pi", sim.spec.pi);
    }
    sim.distort = get_or<bool>(j, "distort", sim.distort);
    sim.n_mc = get_or<std::size_t>(j, "n_mc", sim.n_mc);
    if (sim.families == 0 || sim.rows == 0) throw ManifestError("simulation: empty config");
    return sim;
}

struct Family {
    Task task;        // covariates as the model sees them (possibly warped)
    Matrix raw_X;     // pre-warp covariates for the oracle
    ScorerSpec spec;
    std::uint64_t seed = 0;
};

std::vector<Family> generate_families(const SimulationConfig& sim, std::uint64_t seed) {
    Rng dims_rng(derive_seed(seed, "family-dims"));
    std::vector<Family> families;
    families.reserve(sim.families);
    for (std::size_t i = 0; i < sim.families; ++i) {
        Family family;
        family.seed = derive_seed(seed, "family-" + std::to_string(i));
        family.spec = sim.spec;
        family.spec.count =
            sim.column_range
                ? sim.column_range->first +
                      dims_rng.index(sim.column_range->second - sim.column_range->first + 1)
                : sim.columns;
        family.task =
            simulate_task_family(family.spec, sim.rows, family.seed, "sim-" + std::to_string(i));
        family.raw_X = family.task.X;
        if (sim.distort) {
            DistortionSpec warp = random_distortion(family.task.dim(), family.seed);
            family.task.X = apply_heterogeneity(family.task.X, warp);
        }
        families.push_back(std::move(family));
    }
    return families;
}

std::vector<Task> load_file_tasks(const json& list) {
    std::vector<Task> tasks;
    for (const json& entry : list) {
        std::string csv = entry.at("csv").get<std::string>();
        std::string manifest_path = entry.at("manifest").get<std::string>();
        std::string id = get_or<std::string>(entry, "id", csv);
        tasks.push_back(load_task_csv(csv, load_task_manifest(manifest_path), id));
    }
    if (tasks.empty()) throw ManifestError("tasks: empty list");
    return tasks;
}

std::filesystem::path out_path(const CliOptions& options, const std::string& name) {
    return std::filesystem::path(options.out_dir) / name;
}

void append_summaries(std::vector<MetricRow>& rows) {
    std::map<std::string, Vec> by_method;
    for (const MetricRow& row : rows)
        if (row.repeat != "summary" && row.repeat != "oracle")
            by_method[row.method].push_back(row.value);
    for (const auto& [method, values] : by_method) {
        auto [mean, se] = mean_stderr(values);
        rows.push_back({"all", "summary", method, mean, se});
    }
}

struct EvalPlan {
    std::size_t repeats = 1;
    std::optional<std::size_t> support_size;
    double support_fraction = 0.5;
    std::size_t n_mc = 0;
};

EvalPlan parse_eval_plan(const json& eval_spec) {
    EvalPlan plan;
    plan.repeats = get_or<std::size_t>(eval_spec, "repeats", plan.repeats);
    if (plan.repeats == 0) throw ManifestError("eval.repeats must be positive");
    if (eval_spec.contains("support_size") && eval_spec.contains("support_fraction"))
        throw ManifestError("eval: give support_size or support_fraction, not both");
    if (eval_spec.contains("support_size"))
        plan.support_size = eval_spec.at("support_size").get<std::size_t>();
    plan.support_fraction =
        get_or<double>(eval_spec, "support_fraction", plan.support_fraction);
    return plan;
}

double split_fraction(const EvalPlan& plan, std::size_t n) {
    if (!plan.support_size) return plan.support_fraction;
    if (*plan.support_size == 0 || *plan.support_size >= n)
        throw ManifestError("eval.support_size must be in (0, task size)");
    return static_cast<double>(*plan.support_size) / static_cast<double>(n);
}

// Evaluates one adapted model on one split. Binary tasks report ranking
// quality (AUC of the query scores); multiclass tasks report accuracy.
double eval_den(const DenModel& pretrained, const Task& task, const SupportQuerySplit& split,
                const TrainConfig& finetune_config, bool no_finetune,
                std::uint64_t finetune_seed) {
    DenModel model = pretrained;
    Matrix support_X = select_rows(task.X, split.support);
    std::vector<int> support_y = select_labels(task.y, split.support);
    Matrix query_X = select_rows(task.X, split.query);
    std::vector<int> query_y = select_labels(task.y, split.query);

    TrainConfig ft = finetune_config;
    ft.seed = finetune_seed;
    if (no_finetune) ft.finetune_epochs = 0;
    finetune(model, support_X, support_y, task.num_classes, ft, task.id);

    if (model.config.mode == Mode::binary)
        return auc(den_logits(model, support_X, support_y, query_X), query_y);
    return accuracy(den_predict(model, support_X, support_y, query_X, task.num_classes),
                    query_y);
}

double eval_baseline(const Task& task, const SupportQuerySplit& split,
                     const std::vector<std::size_t>& hidden_dims, std::uint64_t seed) {
    BaselineConfig config;
    config.hidden_dims = hidden_dims;
    config.seed = seed;
    Matrix support_X = select_rows(task.X, split.support);
    std::vector<int> support_y = select_labels(task.y, split.support);
    Matrix query_X = select_rows(task.X, split.query);
    std::vector<int> query_y = select_labels(task.y, split.query);
    DenseNet net = train_direct_baseline(support_X, support_y, task.num_classes, config);
    if (task.num_classes == 2) return auc(baseline_binary_scores(net, query_X), query_y);
    Matrix scores = baseline_class_scores(net, query_X);
    std::vector<int> predicted(scores.rows);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < scores.cols; ++k)
            if (scores(i, k) > scores(i, best)) best = k;
        predicted[i] = static_cast<int>(best);
    }
    return accuracy(predicted, query_y);
}

int run_pretrain(const json& manifest, const CliOptions& options, std::uint64_t seed) {
    ModelConfig model_config = parse_model_config(manifest, options);
    TrainConfig train_config = parse_train_config(manifest, seed);

    std::vector<Task> tasks;
    if (manifest.contains("tasks"))
        tasks = load_file_tasks(manifest.at("tasks"));
    else if (manifest.contains("simulation")) {
        for (Family& family :
             generate_families(parse_simulation(manifest.at("simulation")),
                               derive_seed(seed, "pretrain-families")))
            tasks.push_back(std::move(family.task));
    } else {
        throw ManifestError("pretrain: need 'tasks' or 'simulation'");
    }

    std::vector<StepRecord> history;
    DenModel model = pretrain(model_config, tasks, train_config, &history);
    save_checkpoint(out_path(options, "checkpoint.json").string(), model);
    write_history_csv(out_path(options, "loss_history.csv").string(), history);
    std::cout << "pretrained on " << tasks.size() << " tasks for " << train_config.steps
              << " steps; final loss " << format_double(history.back().loss) << "\n";
    return 0;
}

int run_finetune_eval(const json& manifest, const CliOptions& options, std::uint64_t seed) {
    if (!manifest.contains("checkpoint"))
        throw ManifestError("finetune-eval: missing 'checkpoint'");
    DenModel model = load_checkpoint(manifest.at("checkpoint").get<std::string>());
    if (options.no_plf) model.config.use_plf = false;
    TrainConfig finetune_config = parse_train_config(manifest, seed);
    if (!manifest.contains("eval")) throw ManifestError("finetune-eval: missing 'eval'");
    const json& eval_spec = manifest.at("eval");
    EvalPlan plan = parse_eval_plan(eval_spec);

    std::vector<Family> families;
    std::vector<Task> tasks;
    if (eval_spec.contains("tasks")) {
        tasks = load_file_tasks(eval_spec.at("tasks"));
    } else if (eval_spec.contains("simulation")) {
        SimulationConfig sim = parse_simulation(eval_spec.at("simulation"));
        plan.n_mc = sim.n_mc;
        families = generate_families(sim, derive_seed(seed, "eval-families"));
        for (const Family& family : families) tasks.push_back(family.task);
    } else {
        throw ManifestError("finetune-eval: eval needs 'tasks' or 'simulation'");
    }

    std::vector<MetricRow> rows;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const Task& task = tasks[t];
        const Family* family = t < families.size() ? &families[t] : nullptr;
        if (family && plan.n_mc > 0) {
            OracleEstimate oracle = bayes_auc_oracle(family->spec, family->seed, plan.n_mc);
            rows.push_back({task.id, "oracle", "oracle-mc", oracle.auc, oracle.stderr_value});
        }
        for (std::size_t rep = 0; rep < plan.repeats; ++rep) {
            std::string tag = task.id + "#" + std::to_string(rep);
            SupportQuerySplit split =
                split_support_query(task.y, task.num_classes, split_fraction(plan, task.size()),
                                    derive_seed(seed, "split-" + tag));
            rows.push_back({task.id, std::to_string(rep), "den",
                            eval_den(model, task, split, finetune_config, options.no_finetune,
                                     derive_seed(seed, "finetune-" + tag)),
                            0.0});
            if (family) {
                Vec oracle_scores = scorer_bayes_scores(
                    family->spec, scorer_strengths(family->spec, family->seed),
                    select_rows(family->raw_X, split.query));
                rows.push_back({task.id, std::to_string(rep), "oracle",
                                auc(oracle_scores, select_labels(task.y, split.query)), 0.0});
            }
            if (options.baselines) {
                rows.push_back({task.id, std::to_string(rep), "linear",
                                eval_baseline(task, split, {},
                                              derive_seed(seed, "linear-" + tag)),
                                0.0});
                rows.push_back({task.id, std::to_string(rep), "mlp",
                                eval_baseline(task, split, {16},
                                              derive_seed(seed, "mlp-" + tag)),
                                0.0});
            }
        }
    }
    append_summaries(rows);
    write_metrics_csv(out_path(options, "metrics.csv").string(), rows);
    std::cout << "evaluated " << tasks.size() << " tasks x " << plan.repeats << " repeats\n";
    return 0;
}

int run_simulate(const json& manifest, const CliOptions& options, std::uint64_t seed) {
    if (!manifest.contains("simulation")) throw ManifestError("simulate: missing 'simulation'");
    SimulationConfig sim = parse_simulation(manifest.at("simulation"));
    std::vector<Family> families = generate_families(sim, derive_seed(seed, "simulate"));

    json index;
    index["tasks"] = json::array();
    for (std::size_t i = 0; i < families.size(); ++i) {
        std::string stem = "task-" + std::to_string(i);
        std::string csv_name = stem + ".csv";
        std::string manifest_name = stem + ".manifest.json";
        save_task_csv(out_path(options, csv_name).string(), families[i].task);
        json task_manifest;
        task_manifest["label_column"] = "label";
        task_manifest["classes"] = {"0", "1"};
        write_text_file(out_path(options, manifest_name).string(), task_manifest.dump(2) + "\n");
        index["tasks"].push_back({{"csv", csv_name},
                                  {"manifest", manifest_name},
                                  {"id", families[i].task.id},
                                  {"columns", families[i].task.dim()}});
    }
    write_text_file(out_path(options, "tasks.json").string(), index.dump(2) + "\n");
    std::cout << "wrote " << families.size() << " simulated tasks\n";
    return 0;
}

int run_ablate(const json& manifest, const CliOptions& options, std::uint64_t seed) {
    std::string param = get_or<std::string>(manifest, "param", "r");
    if (param != "r") throw ManifestError("ablate: only 'r' sweeps are supported");
    if (!manifest.contains("values")) throw ManifestError("ablate: missing 'values'");
    std::vector<std::size_t> values = manifest.at("values").get<std::vector<std::size_t>>();
    if (values.empty()) throw ManifestError("ablate: empty 'values'");
    if (!manifest.contains("simulation"))
        throw ManifestError("ablate: missing 'simulation' (pre-training families)");
    if (!manifest.contains("eval")) throw ManifestError("ablate: missing 'eval'");

    SimulationConfig train_sim = parse_simulation(manifest.at("simulation"));
    const json& eval_spec = manifest.at("eval");
    EvalPlan plan = parse_eval_plan(eval_spec);
    if (!eval_spec.contains("simulation"))
        throw ManifestError("ablate: eval needs 'simulation'");
    SimulationConfig eval_sim = parse_simulation(eval_spec.at("simulation"));

    std::vector<Task> train_tasks;
    for (Family& family :
         generate_families(train_sim, derive_seed(seed, "pretrain-families")))
        train_tasks.push_back(std::move(family.task));
    std::vector<Family> eval_families =
        generate_families(eval_sim, derive_seed(seed, "eval-families"));

    ModelConfig base_config = parse_model_config(manifest, options);
    TrainConfig train_config = parse_train_config(manifest, seed);

    std::ostringstream out;
    out << "param,value,mean_auc,stderr\n";
    for (std::size_t value : values) {
        ModelConfig config = base_config;
        config.r = value;
        DenModel model = pretrain(config, train_tasks, train_config, nullptr);
        Vec scores;
        for (const Family& family : eval_families) {
            for (std::size_t rep = 0; rep < plan.repeats; ++rep) {
                std::string tag =
                    "r" + std::to_string(value) + "-" + family.task.id + "#" + std::to_string(rep);
                SupportQuerySplit split = split_support_query(
                    family.task.y, family.task.num_classes,
                    split_fraction(plan, family.task.size()), derive_seed(seed, "split-" + tag));
                scores.push_back(eval_den(model, family.task, split, train_config,
                                          options.no_finetune,
                                          derive_seed(seed, "finetune-" + tag)));
            }
        }
        auto [mean, se] = mean_stderr(scores);
        out << param << ',' << value << ',' << format_double(mean) << ',' << format_double(se)
            << '\n';
    }
    write_text_file(out_path(options, "ablation.csv").string(), out.str());
    std::cout << "swept " << param << " over " << values.size() << " values\n";
    return 0;
}

}  // namespace

int run_cli(const CliOptions& options) {
    try {
        json manifest = parse_manifest(options.manifest_path);
        std::uint64_t seed = options.seed_override
                                 ? *options.seed_override
                                 : get_or<std::uint64_t>(manifest, "seed", 0);
        std::string mode = get_or<std::string>(manifest, "mode", "");
        if (mode == "pretrain") return run_pretrain(manifest, options, seed);
        if (mode == "finetune-eval") return run_finetune_eval(manifest, options, seed);
        if (mode == "simulate") return run_simulate(manifest, options, seed);
        if (mode == "ablate") return run_ablate(manifest, options, seed);
        throw ManifestError("unknown mode '" + mode + "'");
    } catch (const ManifestError& e) {
        std::cerr << "manifest error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace den
