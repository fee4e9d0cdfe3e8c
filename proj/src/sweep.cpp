#include "gtpo/sweep.hpp"

#include <sstream>
#include <stdexcept>

namespace gtpo {
namespace {

const char* kValidParameters =
    "gamma, scorer, content_scope, max_turns, algo, shaping, turn_level, components";

double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("sweep: bad " + what + " value '" + v + "'");
  }
}

int parse_int(const std::string& v, const std::string& what) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("sweep: bad " + what + " value '" + v + "'");
  }
}

}  // namespace

std::vector<std::string> default_sweep_values(const std::string& parameter) {
  if (parameter == "gamma") return {"0.5", "0.7", "0.9", "1.0"};
  if (parameter == "max_turns") return {"1", "2", "3"};
  if (parameter == "scorer") return {"ratcliff", "embedding", "none"};
  if (parameter == "content_scope")
    return {"ratcliff:code", "ratcliff:trajectory", "embedding:code"};
  if (parameter == "algo") return {"grpo", "gtpo"};
  if (parameter == "shaping") return {"off", "on"};
  if (parameter == "turn_level") return {"off", "on"};
  if (parameter == "components") return {"off", "turn", "turn_discount", "full"};
  throw std::invalid_argument("sweep: unknown parameter '" + parameter +
                              "'; valid parameters: " + kValidParameters);
}

TrainConfig apply_sweep_value(const TrainConfig& base, const std::string& parameter,
                              const std::string& value) {
  TrainConfig cfg = base;
  if (parameter == "gamma") {
    cfg.gamma = parse_double(value, "gamma");
  } else if (parameter == "max_turns") {
    cfg.limits.max_turns = static_cast<std::size_t>(parse_int(value, "max_turns"));
  } else if (parameter == "scorer") {
    if (value == "ratcliff") cfg.shaping.scorer = Scorer::ratcliff;
    else if (value == "embedding") cfg.shaping.scorer = Scorer::embedding;
    else if (value == "none") cfg.shaping.scorer = Scorer::none;
    else throw std::invalid_argument("sweep: bad scorer value '" + value + "'");
  } else if (parameter == "content_scope") {
    // scorer:scope pairs, mirroring the shaping-strategy ablation rows
    const auto colon = value.find(':');
    const std::string scorer = colon == std::string::npos ? "" : value.substr(0, colon);
    const std::string scope = colon == std::string::npos ? value : value.substr(colon + 1);
    if (scorer == "ratcliff") cfg.shaping.scorer = Scorer::ratcliff;
    else if (scorer == "embedding") cfg.shaping.scorer = Scorer::embedding;
    else if (!scorer.empty())
      throw std::invalid_argument("sweep: bad content_scope value '" + value + "'");
    if (scope == "code") cfg.shaping.content_scope = ContentScope::code_only;
    else if (scope == "trajectory") cfg.shaping.content_scope = ContentScope::full_trajectory;
    else throw std::invalid_argument("sweep: bad content_scope value '" + value + "'");
  } else if (parameter == "algo") {
    if (value == "grpo") cfg.algo = Algo::grpo;
    else if (value == "gtpo") cfg.algo = Algo::gtpo;
    else throw std::invalid_argument("sweep: bad algo value '" + value + "'");
  } else if (parameter == "shaping") {
    if (value == "on") cfg.shaping.scorer = base.shaping.scorer == Scorer::none
                                                ? Scorer::ratcliff
                                                : base.shaping.scorer;
    else if (value == "off") cfg.shaping.scorer = Scorer::none;
    else throw std::invalid_argument("sweep: bad shaping value '" + value + "'");
  } else if (parameter == "turn_level") {
    if (value == "on") cfg.algo = Algo::gtpo;
    else if (value == "off") cfg.algo = Algo::grpo;
    else throw std::invalid_argument("sweep: bad turn_level value '" + value + "'");
  } else if (parameter == "components") {
    if (value == "off") {
      cfg.algo = Algo::grpo;
      cfg.shaping.scorer = Scorer::none;
    } else if (value == "turn") {
      cfg.algo = Algo::gtpo;
      cfg.gamma = 1.0;  // discounting disabled
      cfg.shaping.scorer = Scorer::none;
    } else if (value == "turn_discount") {
      cfg.algo = Algo::gtpo;
      cfg.shaping.scorer = Scorer::none;
    } else if (value == "full") {
      cfg.algo = Algo::gtpo;
      cfg.shaping.scorer = base.shaping.scorer == Scorer::none ? Scorer::ratcliff
                                                               : base.shaping.scorer;
    } else {
      throw std::invalid_argument("sweep: bad components value '" + value + "'");
    }
  } else {
    throw std::invalid_argument("sweep: unknown parameter '" + parameter +
                                "'; valid parameters: " + kValidParameters);
  }
  return cfg;
}

SweepTable sweep(const TrainConfig& base, const std::string& parameter,
                 const std::vector<std::string>& values, int eval_tasks,
                 std::uint64_t eval_seed, EmbeddingClient* embedder) {
  SweepTable table;
  table.parameter = parameter;
  for (const std::string& value : values) {
    const TrainConfig cfg = apply_sweep_value(base, parameter, value);
    TrainResult result = train(cfg, {}, embedder);
    SweepRow row;
    row.value = value;
    row.final_metrics = result.metrics.back();
    row.eval_accuracy = evaluate(result.params, eval_tasks, eval_seed, cfg.limits);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "parameter,value," << metrics_csv_header() << ",eval_accuracy\n";
  for (const SweepRow& row : table.rows) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", row.eval_accuracy);
    out << table.parameter << ',' << row.value << ','
        << metrics_csv_row(row.final_metrics) << ',' << buf << '\n';
  }
  return out.str();
}

std::string sweep_summary(const SweepTable& table) {
  std::ostringstream out;
  out << "sweep over " << table.parameter << " (" << table.rows.size() << " runs)\n";
  for (const SweepRow& row : table.rows) {
    out << "  " << table.parameter << "=" << row.value
        << "  train_accuracy=" << row.final_metrics.train_accuracy
        << "  eval_accuracy=" << row.eval_accuracy
        << "  code_ratio=" << row.final_metrics.code_ratio << "\n";
  }
  return out.str();
}

}  // namespace gtpo
