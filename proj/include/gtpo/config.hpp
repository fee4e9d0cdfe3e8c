#pragma once

#include <string>
#include <vector>

#include "gtpo/trainer.hpp"

namespace gtpo {

/// Flat key set mirroring TrainConfig (plus the nested shaping/clip/limits
/// and policy knobs). Every key has a default; an empty file is valid;
/// unknown keys are rejected with a closest-match suggestion.
const std::vector<std::string>& config_keys();

/// Parse a JSON config file into a TrainConfig. Missing file or empty
/// content yields the defaults.
TrainConfig load_config_file(const std::string& path);
TrainConfig parse_config(const std::string& json_text);

/// Apply one "key=value" override.
void apply_override(TrainConfig& cfg, const std::string& key_equals_value);

/// Serialize the effective configuration (all keys, current values).
std::string dump_config(const TrainConfig& cfg);

std::string to_string(Algo algo);
std::string to_string(Scorer scorer);
std::string to_string(ContentScope scope);

}  // namespace gtpo
