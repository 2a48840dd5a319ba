#include "den/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace den {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;
constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trimmed(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ManifestError("invalid JSON in " + path);
    return j;
}

json net_to_json(const DenseNet& net) {
    json j;
    j["dims"] = net.layer_dims;
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        j["weights"].push_back(encode_doubles(net.weights[l].data));
        j["biases"].push_back(encode_doubles(net.biases[l]));
    }
    return j;
}

DenseNet net_from_json(const json& j) {
    DenseNet net;
    net.layer_dims = j.at("dims").get<std::vector<std::size_t>>();
    if (net.layer_dims.size() < 2) throw ManifestError("checkpoint: bad layer dims");
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        Matrix w(net.layer_dims[l + 1], net.layer_dims[l]);
        w.data = decode_doubles(j.at("weights").at(l).get<std::string>());
        if (w.data.size() != w.rows * w.cols) throw ManifestError("checkpoint: weight size");
        net.weights.push_back(std::move(w));
        Vec b = decode_doubles(j.at("biases").at(l).get<std::string>());
        if (b.size() != net.layer_dims[l + 1]) throw ManifestError("checkpoint: bias size");
        net.biases.push_back(std::move(b));
    }
    return net;
}

}  // namespace

TaskManifest load_task_manifest(const std::string& path) {
    json j = parse_json_file(path);
    TaskManifest manifest;
    try {
        manifest.label_column = j.at("label_column").get<std::string>();
        manifest.classes = j.at("classes").get<std::vector<std::string>>();
        if (j.contains("columns"))
            manifest.columns = j.at("columns").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ManifestError(path + ": " + e.what());
    }
    if (manifest.classes.size() < 2)
        throw ManifestError(path + ": need at least 2 classes");
    return manifest;
}

Task load_task_csv(const std::string& csv_path, const TaskManifest& manifest,
                   const std::string& task_id) {
    std::ifstream in(csv_path);
    if (!in) throw ManifestError("cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw ManifestError(csv_path + ": empty file");
    std::vector<std::string> header = split_csv_line(line);
    for (std::string& name : header) name = trimmed(name);

    auto column_of = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ManifestError(csv_path + ": column '" + name + "' not in header");
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t label_idx = column_of(manifest.label_column);
    std::vector<std::size_t> covariate_idx;
    std::vector<std::string> covariate_names;
    if (manifest.columns) {
        for (const std::string& name : *manifest.columns) {
            covariate_idx.push_back(column_of(name));
            covariate_names.push_back(name);
        }
    } else {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (c != label_idx) {
                covariate_idx.push_back(c);
                covariate_names.push_back(header[c]);
            }
    }
    if (covariate_idx.empty()) throw ManifestError(csv_path + ": no covariate columns");

    std::vector<Vec> rows;
    std::vector<int> labels;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (trimmed(line).empty()) continue;
        ++data_row;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ManifestError(csv_path + " row " + std::to_string(data_row) +
                                ": expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size()));
        std::string label_text = trimmed(fields[label_idx]);
        auto cls = std::find(manifest.classes.begin(), manifest.classes.end(), label_text);
        if (cls == manifest.classes.end())
            throw ManifestError(csv_path + " row " + std::to_string(data_row) + " column '" +
                                manifest.label_column + "': unknown class '" + label_text + "'");
        labels.push_back(static_cast<int>(cls - manifest.classes.begin()));

        Vec row;
        row.reserve(covariate_idx.size());
        for (std::size_t k = 0; k < covariate_idx.size(); ++k) {
            std::string cell = trimmed(fields[covariate_idx[k]]);
            const char* begin = cell.data();
            const char* end = begin + cell.size();
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc{} || ptr != end)
                throw ManifestError(csv_path + " row " + std::to_string(data_row) +
                                    " column '" + covariate_names[k] + "': not a number: '" +
                                    cell + "'");
            row.push_back(value);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ManifestError(csv_path + ": no data rows");

    Task task;
    task.id = task_id.empty() ? csv_path : task_id;
    task.num_classes = manifest.classes.size();
    task.column_names = covariate_names;
    task.X = Matrix(rows.size(), covariate_idx.size());
    for (std::size_t i = 0; i < rows.size(); ++i) task.X.set_row(i, rows[i]);
    task.y = std::move(labels);
    validate_task(task);
    return task;
}

void save_task_csv(const std::string& path, const Task& task, const std::string& label_column) {
    std::ostringstream out;
    for (std::size_t j = 0; j < task.dim(); ++j) {
        out << (task.column_names.empty() ? "x" + std::to_string(j) : task.column_names[j]);
        out << ',';
    }
    out << label_column << '\n';
    for (std::size_t i = 0; i < task.size(); ++i) {
        for (std::size_t j = 0; j < task.dim(); ++j) out << format_double(task.X(i, j)) << ',';
        out << task.y[i] << '\n';
    }
    write_text_file(path, out.str());
}

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

std::string encode_doubles(const Vec& values) {
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * 8);
    for (double value : values) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        std::size_t have = std::min<std::size_t>(3, bytes.size() - i);
        if (have > 1) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (have > 2) chunk |= bytes[i + 2];
        out.push_back(kBase64Alphabet[(chunk >> 18) & 63]);
        out.push_back(kBase64Alphabet[(chunk >> 12) & 63]);
        out.push_back(have > 1 ? kBase64Alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(have > 2 ? kBase64Alphabet[chunk & 63] : '=');
    }
    return out;
}

Vec decode_doubles(const std::string& text) {
    if (text.size() % 4 != 0) throw ManifestError("base64: length not a multiple of 4");
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t chunk = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) throw ManifestError("base64: bad padding");
                ++pad;
                chunk <<= 6;
                continue;
            }
            int v = value_of(c);
            if (v < 0 || pad > 0) throw ManifestError("base64: bad character");
            chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        }
        bytes.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (pad < 2) bytes.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (pad < 1) bytes.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    if (bytes.size() % 8 != 0) throw ManifestError("base64: payload is not whole doubles");
    Vec values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
        values[i] = std::bit_cast<double>(bits);
    }
    return values;
}

void save_checkpoint(const std::string& path, const DenModel& model) {
    json j;
    j["format_version"] = kCheckpointVersion;
    json config;
    config["mode"] = model.config.mode == Mode::multiclass ? "multiclass" : "binary";
    config["keypoints"] = model.config.keypoints;
    config["hidden"] = model.config.hidden;
    config["depth"] = model.config.depth;
    config["r"] = model.config.r;
    if (model.config.cap)
        config["cap"] = *model.config.cap;
    else
        config["cap"] = nullptr;
    config["max_classes"] = model.config.max_classes;
    config["label_dim"] = model.config.label_dim;
    config["monotonic"] = model.config.monotonic;
    config["use_plf"] = model.config.use_plf;
    j["config"] = std::move(config);
    j["index_seed"] = model.index_seed;
    j["h"] = net_to_json(model.h);
    j["phi"] = net_to_json(model.head.phi);
    j["psi"] = net_to_json(model.head.psi);
    if (model.v) {
        j["v"] = {{"rows", model.v->table.rows},
                  {"cols", model.v->table.cols},
                  {"data", encode_doubles(model.v->table.data)}};
    } else {
        j["v"] = nullptr;
    }
    json bank;
    bank["task_id"] = model.bank_task_id;
    bank["columns"] = json::array();
    for (const Plf& plf : model.bank.columns)
        bank["columns"].push_back({{"keypoints", encode_doubles(plf.keypoints)},
                                   {"values", encode_doubles(plf.values)},
                                   {"monotonic", plf.monotonic}});
    j["bank"] = std::move(bank);
    write_text_file(path, j.dump(2) + "\n");
}

DenModel load_checkpoint(const std::string& path) {
    json j = parse_json_file(path);
    try {
        if (j.at("format_version").get<int>() != kCheckpointVersion)
            throw ManifestError(path + ": unsupported checkpoint format_version");
        const json& config = j.at("config");
        DenModel model;
        std::string mode = config.at("mode").get<std::string>();
        if (mode != "binary" && mode != "multiclass")
            throw ManifestError(path + ": unknown mode " + mode);
        model.config.mode = mode == "multiclass" ? Mode::multiclass : Mode::binary;
        model.config.keypoints = config.at("keypoints").get<std::size_t>();
        model.config.hidden = config.at("hidden").get<std::size_t>();
        model.config.depth = config.at("depth").get<std::size_t>();
        model.config.r = config.at("r").get<std::size_t>();
        if (!config.at("cap").is_null())
            model.config.cap = config.at("cap").get<std::size_t>();
        model.config.max_classes = config.at("max_classes").get<std::size_t>();
        model.config.label_dim = config.at("label_dim").get<std::size_t>();
        model.config.monotonic = config.at("monotonic").get<bool>();
        model.config.use_plf = config.at("use_plf").get<bool>();
        model.index_seed = j.at("index_seed").get<std::uint64_t>();
        model.h = net_from_json(j.at("h"));
        model.head.phi = net_from_json(j.at("phi"));
        model.head.psi = net_from_json(j.at("psi"));
        if (!j.at("v").is_null()) {
            LabelEncoder v;
            v.table = Matrix(j["v"].at("rows").get<std::size_t>(),
                             j["v"].at("cols").get<std::size_t>());
            v.table.data = decode_doubles(j["v"].at("data").get<std::string>());
            if (v.table.data.size() != v.table.rows * v.table.cols)
                throw ManifestError(path + ": label-encoder size mismatch");
            model.v = std::move(v);
        }
        const json& bank = j.at("bank");
        model.bank_task_id = bank.at("task_id").get<std::string>();
        for (const json& column : bank.at("columns")) {
            Plf plf;
            plf.keypoints = decode_doubles(column.at("keypoints").get<std::string>());
            plf.values = decode_doubles(column.at("values").get<std::string>());
            plf.monotonic = column.at("monotonic").get<bool>();
            if (plf.keypoints.size() != plf.values.size() || plf.keypoints.size() < 2)
                throw ManifestError(path + ": bad calibration column");
            model.bank.columns.push_back(std::move(plf));
        }
        return model;
    } catch (const json::exception& e) {
        throw ManifestError(path + ": " + e.what());
    }
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ostringstream out;
    out << "task_id,repeat,method,value,stderr\n";
    for (const MetricRow& row : rows)
        out << row.task_id << ',' << row.repeat << ',' << row.method << ','
            << format_double(row.value) << ',' << format_double(row.stderr_value) << '\n';
    write_text_file(path, out.str());
}

void write_history_csv(const std::string& path, const std::vector<StepRecord>& records) {
    std::ostringstream out;
    out << "step,task_id,loss\n";
    for (const StepRecord& record : records)
        out << record.step << ',' << record.task_id << ',' << format_double(record.loss)
            << '\n';
    write_text_file(path, out.str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path temp = target;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw ManifestError("cannot write " + temp.string());
        out << content;
        out.flush();
        if (!out) throw ManifestError("write failed for " + temp.string());
    }
    fs::rename(temp, target);
}

}  // namespace den
