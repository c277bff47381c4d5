#pragma once

#include <filesystem>
#include <string>

#include "lld/model.hpp"
#include "lld/schedule.hpp"
#include "lld/training.hpp"

namespace lld {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` run description (# starts a comment). Unknown keys,
/// duplicate keys and malformed values are errors. Relative paths resolve
/// against the directory holding the file.
struct RunConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path checkpoint_dir = "checkpoints";
    std::filesystem::path output_dir = "outputs";
    ModelConfig model;
    ScheduleConfig schedule;
    TrainConfig train;
    std::string precision = "float32";

    torch::ScalarType dtype() const;
    /// Applies LLD_OUTPUT_DIR when set.
    void apply_environment();
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// The inverse of parse_run_config, with absolute paths.
std::string to_text(const RunConfig& config);

}  // namespace lld
