#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "den/model.hpp"
#include "den/task.hpp"
#include "den/trainer.hpp"

namespace den {

// Configuration and file-format problems the caller cannot recover from;
// the command-line tool reports these distinctly from runtime failures.
struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sidecar description of a task CSV: which column holds the label, the
// ordered class names (position = class index), and optionally which
// covariate columns to use (all non-label columns otherwise).
struct TaskManifest {
    std::string label_column;
    std::vector<std::string> classes;
    std::optional<std::vector<std::string>> columns;
};

TaskManifest load_task_manifest(const std::string& path);

// Loads a headered numeric CSV. Malformed cells are reported with their
// 1-based data row and column name.
Task load_task_csv(const std::string& csv_path, const TaskManifest& manifest,
                   const std::string& task_id = "");

void save_task_csv(const std::string& path, const Task& task,
                   const std::string& label_column = "label");

// Shortest round-trip decimal form.
std::string format_double(double value);

// Little-endian doubles in base64; the checkpoint payload encoding.
std::string encode_doubles(const Vec& values);
Vec decode_doubles(const std::string& text);

// Versioned JSON checkpoint: model configuration plus every trainable block.
// Writes are atomic (temp file + rename).
void save_checkpoint(const std::string& path, const DenModel& model);
DenModel load_checkpoint(const std::string& path);

struct MetricRow {
    std::string task_id;
    std::string repeat;  // repeat number, or "summary" for aggregates
    std::string method;
    double value = 0.0;
    double stderr_value = 0.0;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);

void write_history_csv(const std::string& path, const std::vector<StepRecord>& records);

// Whole-file helpers; writes go through a temp file and rename.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace den
