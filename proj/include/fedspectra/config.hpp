#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedspectra/data_synth.hpp"
#include "fedspectra/federation.hpp"

namespace fedspectra {

/// Everything a run needs, parsed from a `key = value` file.
struct RunConfig {
    std::string profile = "default";
    FederationConfig federation;
    SynthSpec synth;
    /// Load data from a dataset directory instead of generating it.
    std::string data_dir;
    std::string out_dir = "runs/latest";
    CheckpointPolicy checkpoints = CheckpointPolicy::All;

    /// Re-checks every embedded invariant; throws ConfigError.
    void validate() const;

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    /// Fully resolved `key = value` lines in canonical order.
    std::string to_text() const;
};

/// Keys accepted by RunConfig::set, in canonical order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and bad values
/// raise ConfigError carrying the 1-based line number.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override.
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace fedspectra
