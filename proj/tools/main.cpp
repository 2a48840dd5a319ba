#include <cstdint>

#include "CLI11.hpp"

#include "den/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Distribution-embedding toolkit for few-shot tabular classification"};

    den::CliOptions options;
    std::uint64_t seed_value = 0;
    app.add_option("--manifest", options.manifest_path, "Run manifest (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the manifest seed");
    app.add_flag("--no-finetune", options.no_finetune,
                 "Skip per-task calibration training during evaluation");
    app.add_flag("--no-plf", options.no_plf, "Disable the calibration transform");
    app.add_flag("--baselines", options.baselines,
                 "Also evaluate direct linear and MLP baselines");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) options.seed_override = seed_value;
    return den::run_cli(options);
}
