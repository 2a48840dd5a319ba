#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"

#include "den/io.hpp"
#include "den/model.hpp"
#include "den/rng.hpp"

using namespace den;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("den-io-" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

bool message_mentions(const std::exception& e, const std::vector<std::string>& parts) {
    std::string what = e.what();
    for (const std::string& part : parts)
        if (what.find(part) == std::string::npos) return false;
    return true;
}

Task tiny_task() {
    Task task;
    task.id = "tiny";
    task.num_classes = 2;
    task.column_names = {"a", "b"};
    task.X = Matrix(4, 2);
    task.X.data = {0.125, -3.5, 1e-3, 2.25, -0.75, 6.0, 0.1, 0.2};
    task.y = {0, 1, 1, 0};
    return task;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        double value = rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0));
        CHECK(std::stod(format_double(value)) == value);
    }
}

TEST_CASE("base64 double payloads round-trip bitwise") {
    CHECK(encode_doubles({}).empty());
    CHECK(decode_doubles("").empty());

    Vec values = {0.0, -0.0, 1.0, -1.0, 1e-308, std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::quiet_NaN(), 3.141592653589793};
    Vec decoded = decode_doubles(encode_doubles(values));
    REQUIRE(decoded.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        CHECK(std::bit_cast<std::uint64_t>(decoded[i]) ==
              std::bit_cast<std::uint64_t>(values[i]));

    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Vec random(1 + rng.index(40));
        for (double& v : random) v = rng.normal();
        CHECK(decode_doubles(encode_doubles(random)) == random);
    }
}

TEST_CASE("base64 decoding rejects malformed payloads") {
    CHECK_THROWS_AS(decode_doubles("AAA"), ManifestError);        // not a multiple of 4
    CHECK_THROWS_AS(decode_doubles("AA!A"), ManifestError);       // bad character
    CHECK_THROWS_AS(decode_doubles("A==="), ManifestError);       // padding too long
    CHECK_THROWS_AS(decode_doubles("AB==AAAA"), ManifestError);   // padding mid-stream
    CHECK_THROWS_AS(decode_doubles("QUJD"), ManifestError);       // 3 bytes: not whole doubles
}

TEST_CASE("task CSV save and load round-trips bitwise") {
    TempDir dir("csv-roundtrip");
    Task task = tiny_task();
    save_task_csv(dir.file("task.csv"), task);

    TaskManifest manifest;
    manifest.label_column = "label";
    manifest.classes = {"0", "1"};
    Task loaded = load_task_csv(dir.file("task.csv"), manifest, "tiny");
    CHECK(loaded.X.data == task.X.data);
    CHECK(loaded.y == task.y);
    CHECK(loaded.column_names == task.column_names);
    CHECK(loaded.num_classes == 2);
    CHECK(loaded.id == "tiny");
}

TEST_CASE("task manifests parse classes in order and optional columns") {
    TempDir dir("manifest");
    write_text_file(dir.file("m.json"),
                    R"({"label_column":"y","classes":["cat","dog","bird"],"columns":["b","a"]})");
    TaskManifest manifest = load_task_manifest(dir.file("m.json"));
    CHECK(manifest.label_column == "y");
    REQUIRE(manifest.classes.size() == 3);
    CHECK(manifest.classes[0] == "cat");
    CHECK(manifest.classes[2] == "bird");
    REQUIRE(manifest.columns.has_value());
    CHECK((*manifest.columns)[0] == "b");

    write_text_file(dir.file("one-class.json"), R"({"label_column":"y","classes":["only"]})");
    CHECK_THROWS_AS(load_task_manifest(dir.file("one-class.json")), ManifestError);
    write_text_file(dir.file("missing-key.json"), R"({"classes":["a","b"]})");
    CHECK_THROWS_AS(load_task_manifest(dir.file("missing-key.json")), ManifestError);
    write_text_file(dir.file("broken.json"), "{nope");
    CHECK_THROWS_AS(load_task_manifest(dir.file("broken.json")), ManifestError);
    CHECK_THROWS_AS(load_task_manifest(dir.file("absent.json")), ManifestError);
}

TEST_CASE("manifest column selection reorders covariates") {
    TempDir dir("reorder");
    write_text_file(dir.file("t.csv"), "a,y,b\n1.5,pos,10\n2.5,neg,20\n");
    TaskManifest manifest;
    manifest.label_column = "y";
    manifest.classes = {"neg", "pos"};
    manifest.columns = {{"b", "a"}};
    Task task = load_task_csv(dir.file("t.csv"), manifest);
    REQUIRE(task.dim() == 2);
    CHECK(task.column_names[0] == "b");
    CHECK(task.X(0, 0) == 10.0);
    CHECK(task.X(0, 1) == 1.5);
    CHECK(task.y == std::vector<int>{1, 0});
}

TEST_CASE("CSV loader reports the offending row and column") {
    TempDir dir("csv-errors");
    TaskManifest manifest;
    manifest.label_column = "label";
    manifest.classes = {"0", "1"};

    write_text_file(dir.file("bad-cell.csv"), "a,b,label\n1,2,0\n1,oops,1\n");
    try {
        load_task_csv(dir.file("bad-cell.csv"), manifest);
        FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
        CHECK(message_mentions(e, {"row 2", "column 'b'", "not a number", "'oops'"}));
    }

    write_text_file(dir.file("bad-class.csv"), "a,b,label\n1,2,maybe\n");
    try {
        load_task_csv(dir.file("bad-class.csv"), manifest);
        FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
        CHECK(message_mentions(e, {"row 1", "unknown class 'maybe'"}));
    }

    write_text_file(dir.file("short-row.csv"), "a,b,label\n1,0\n");
    try {
        load_task_csv(dir.file("short-row.csv"), manifest);
        FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
        CHECK(message_mentions(e, {"row 1", "expected 3 fields, got 2"}));
    }

    write_text_file(dir.file("no-col.csv"), "a,label\n1,0\n");
    TaskManifest wants_b = manifest;
    wants_b.columns = {{"b"}};
    CHECK_THROWS_AS(load_task_csv(dir.file("no-col.csv"), wants_b), ManifestError);

    write_text_file(dir.file("empty.csv"), "");
    CHECK_THROWS_AS(load_task_csv(dir.file("empty.csv"), manifest), ManifestError);
    write_text_file(dir.file("header-only.csv"), "a,b,label\n");
    CHECK_THROWS_AS(load_task_csv(dir.file("header-only.csv"), manifest), ManifestError);
    CHECK_THROWS_AS(load_task_csv(dir.file("does-not-exist.csv"), manifest), ManifestError);
}

TEST_CASE("CSV loader skips blank lines and tolerates padding") {
    TempDir dir("csv-blank");
    write_text_file(dir.file("padded.csv"), "a , label\n 1.5 , 0\n\n  \n 2.5 , 1\n");
    TaskManifest manifest;
    manifest.label_column = "label";
    manifest.classes = {"0", "1"};
    Task task = load_task_csv(dir.file("padded.csv"), manifest);
    REQUIRE(task.size() == 2);
    CHECK(task.X(0, 0) == 1.5);
    CHECK(task.X(1, 0) == 2.5);
}

TEST_CASE("binary checkpoints round-trip every block bitwise") {
    TempDir dir("ckpt-binary");
    ModelConfig config;
    config.keypoints = 5;
    config.hidden = 6;
    config.depth = 3;
    config.r = 2;
    config.monotonic = true;
    DenModel model = make_model(config, 77);
    Matrix support(12, 3);
    Rng rng(78);
    for (double& value : support.data) value = rng.uniform(-2.0, 5.0);
    attach_task_bank(model, support, "ckpt-task");

    save_checkpoint(dir.file("model.json"), model);
    DenModel loaded = load_checkpoint(dir.file("model.json"));

    CHECK(flatten_shared(loaded) == flatten_shared(model));
    CHECK(loaded.index_seed == model.index_seed);
    CHECK(loaded.bank_task_id == "ckpt-task");
    CHECK_FALSE(loaded.v.has_value());
    CHECK_FALSE(loaded.config.cap.has_value());
    CHECK(loaded.config.keypoints == 5);
    CHECK(loaded.config.monotonic);
    CHECK(loaded.config.use_plf);
    CHECK(loaded.config.mode == Mode::binary);
    REQUIRE(loaded.bank.width() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(loaded.bank.columns[c].keypoints == model.bank.columns[c].keypoints);
        CHECK(loaded.bank.columns[c].values == model.bank.columns[c].values);
        CHECK(loaded.bank.columns[c].monotonic == model.bank.columns[c].monotonic);
    }
}

TEST_CASE("multiclass checkpoints keep the label codes and cap") {
    TempDir dir("ckpt-multi");
    ModelConfig config;
    config.mode = Mode::multiclass;
    config.max_classes = 7;
    config.label_dim = 3;
    config.cap = 12;
    DenModel model = make_model(config, 79);

    save_checkpoint(dir.file("model.json"), model);
    DenModel loaded = load_checkpoint(dir.file("model.json"));
    CHECK(loaded.config.mode == Mode::multiclass);
    REQUIRE(loaded.v.has_value());
    CHECK(loaded.v->table.data == model.v->table.data);
    CHECK(loaded.v->table.rows == 7);
    REQUIRE(loaded.config.cap.has_value());
    CHECK(*loaded.config.cap == 12);
    CHECK(loaded.bank.width() == 0);
}

TEST_CASE("checkpoint loading rejects foreign or damaged files") {
    TempDir dir("ckpt-bad");
    DenModel model = make_model(ModelConfig{}, 80);
    save_checkpoint(dir.file("model.json"), model);
    std::string good = read_text_file(dir.file("model.json"));

    std::string wrong_version = good;
    wrong_version.replace(wrong_version.find("\"format_version\": 1"),
                          std::string("\"format_version\": 1").size(),
                          "\"format_version\": 99");
    write_text_file(dir.file("version.json"), wrong_version);
    CHECK_THROWS_AS(load_checkpoint(dir.file("version.json")), ManifestError);

    write_text_file(dir.file("truncated.json"), good.substr(0, good.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir.file("truncated.json")), ManifestError);

    write_text_file(dir.file("not-a-model.json"), R"({"format_version":1})");
    CHECK_THROWS_AS(load_checkpoint(dir.file("not-a-model.json")), ManifestError);
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.json")), ManifestError);
}

TEST_CASE("metrics and history CSVs have the documented layouts") {
    TempDir dir("reports");
    std::vector<MetricRow> rows = {{"task-0", "0", "den", 0.75, 0.0},
                                   {"task-0", "summary", "den", 0.8125, 0.03125}};
    write_metrics_csv(dir.file("metrics.csv"), rows);
    CHECK(read_text_file(dir.file("metrics.csv")) ==
          "task_id,repeat,method,value,stderr\n"
          "task-0,0,den,0.75,0\n"
          "task-0,summary,den,0.8125,0.03125\n");

    std::vector<StepRecord> history = {{0, "a", 0.5}, {1, "b", 0.25}};
    write_history_csv(dir.file("history.csv"), history);
    CHECK(read_text_file(dir.file("history.csv")) ==
          "step,task_id,loss\n"
          "0,a,0.5\n"
          "1,b,0.25\n");
}

TEST_CASE("text writes create parents atomically and leave no temp files") {
    TempDir dir("atomic");
    std::string nested = (dir.path / "deep" / "deeper" / "out.txt").string();
    write_text_file(nested, "payload");
    CHECK(read_text_file(nested) == "payload");

    write_text_file(nested, "replaced");
    CHECK(read_text_file(nested) == "replaced");

    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& entry :
         fs::directory_iterator(dir.path / "deep" / "deeper"))
        ++entries;
    CHECK(entries == 1);  // no stray temp file

    CHECK_THROWS_AS(read_text_file(dir.file("nope.txt")), std::runtime_error);
}
