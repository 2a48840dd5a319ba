#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace den {

struct CliOptions {
    std::string manifest_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool no_finetune = false;
    bool no_plf = false;
    bool baselines = false;
};

// Dispatches on the manifest's "mode" (pretrain, finetune-eval, simulate,
// ablate). Returns 0 on success, 1 on runtime failure, 2 on configuration
// errors.
int run_cli(const CliOptions& options);

}  // namespace den
