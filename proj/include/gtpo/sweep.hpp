#pragma once

#include <string>
#include <vector>

#include "gtpo/trainer.hpp"

namespace gtpo {

/// One full training run per value, all sharing the base config's seed.
/// Recognized parameters: gamma, scorer, content_scope, max_turns, algo,
/// shaping (on/off), turn_level (on/off), components
/// (off/turn/turn_discount/full).
struct SweepRow {
  std::string value;
  MetricsRow final_metrics;
  double eval_accuracy = 0.0;
};

struct SweepTable {
  std::string parameter;
  std::vector<SweepRow> rows;
};

/// The canonical value lists used when none are given on the command line.
std::vector<std::string> default_sweep_values(const std::string& parameter);

/// Apply one parameter setting to a config copy; throws on unknown
/// parameters, listing the valid names.
TrainConfig apply_sweep_value(const TrainConfig& base, const std::string& parameter,
                              const std::string& value);

SweepTable sweep(const TrainConfig& base, const std::string& parameter,
                 const std::vector<std::string>& values, int eval_tasks = 200,
                 std::uint64_t eval_seed = 7, EmbeddingClient* embedder = nullptr);

std::string sweep_csv(const SweepTable& table);
std::string sweep_summary(const SweepTable& table);

}  // namespace gtpo
