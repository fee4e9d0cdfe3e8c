#include "gtpo/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace gtpo {

using nlohmann::json;

namespace {

// Ratcliff similarity over raw characters, for did-you-mean suggestions.
double key_similarity(const std::string& a, const std::string& b) {
  std::vector<TokenId> ta(a.begin(), a.end());
  std::vector<TokenId> tb(b.begin(), b.end());
  return ratcliff_similarity(ta, tb);
}

std::string suggest_key(const std::string& unknown) {
  double best = 0.0;
  std::string match;
  for (const std::string& key : config_keys()) {
    const double s = key_similarity(unknown, key);
    if (s > best) {
      best = s;
      match = key;
    }
  }
  return best >= 0.5 ? match : std::string();
}

[[noreturn]] void unknown_key(const std::string& key) {
  std::string msg = "unknown config key '" + key + "'";
  const std::string suggestion = suggest_key(key);
  if (!suggestion.empty()) msg += " (did you mean '" + suggestion + "'?)";
  throw std::invalid_argument(msg);
}

Algo parse_algo(const json& v) {
  const auto s = v.get<std::string>();
  if (s == "grpo") return Algo::grpo;
  if (s == "gtpo") return Algo::gtpo;
  throw std::invalid_argument("config: algo must be 'grpo' or 'gtpo', got '" + s + "'");
}

Scorer parse_scorer(const json& v) {
  const auto s = v.get<std::string>();
  if (s == "ratcliff") return Scorer::ratcliff;
  if (s == "embedding") return Scorer::embedding;
  if (s == "none") return Scorer::none;
  throw std::invalid_argument(
      "config: scorer must be 'ratcliff', 'embedding' or 'none', got '" + s + "'");
}

ContentScope parse_scope(const json& v) {
  const auto s = v.get<std::string>();
  if (s == "code" || s == "code_only") return ContentScope::code_only;
  if (s == "trajectory" || s == "full_trajectory") return ContentScope::full_trajectory;
  throw std::invalid_argument("config: content_scope must be 'code' or 'trajectory'");
}

void apply_key(TrainConfig& cfg, const std::string& key, const json& v) {
  try {
    if (key == "algo") cfg.algo = parse_algo(v);
    else if (key == "group_size") cfg.group_size = v.get<int>();
    else if (key == "prompts_per_step") cfg.prompts_per_step = v.get<int>();
    else if (key == "gamma") cfg.gamma = v.get<double>();
    else if (key == "alpha") cfg.shaping.alpha = v.get<double>();
    else if (key == "scorer") cfg.shaping.scorer = parse_scorer(v);
    else if (key == "content_scope") cfg.shaping.content_scope = parse_scope(v);
    else if (key == "eps_low") cfg.clip.eps_low = v.get<double>();
    else if (key == "eps_high") cfg.clip.eps_high = v.get<double>();
    else if (key == "max_turns") cfg.limits.max_turns = v.get<std::size_t>();
    else if (key == "max_tokens_per_turn") cfg.limits.max_tokens_per_turn = v.get<std::size_t>();
    else if (key == "context_window") cfg.policy.context = v.get<std::uint32_t>();
    else if (key == "feature_dim") cfg.policy.features = v.get<std::uint32_t>();
    else if (key == "learning_rate") cfg.learning_rate = v.get<double>();
    else if (key == "adam_beta1") cfg.adam_beta1 = v.get<double>();
    else if (key == "adam_beta2") cfg.adam_beta2 = v.get<double>();
    else if (key == "adam_eps") cfg.adam_eps = v.get<double>();
    else if (key == "steps") cfg.steps = v.get<int>();
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (key == "std_floor") cfg.std_floor = v.get<double>();
    else if (key == "degenerate_group_filter") cfg.degenerate_group_filter = v.get<bool>();
    else if (key == "rollout_temperature") cfg.rollout_temperature = v.get<double>();
    else if (key == "epochs_per_batch") cfg.epochs_per_batch = v.get<int>();
    else if (key == "checkpoint_every") cfg.checkpoint_every = v.get<int>();
    else if (key == "warm_start") cfg.warm_start = v.get<bool>();
    else if (key == "warm_start_examples") cfg.warm_start_examples = v.get<int>();
    else unknown_key(key);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

json value_as_json(const std::string& key, const std::string& value) {
  // String-typed keys pass through; everything else parses as JSON scalar.
  static const std::vector<std::string> string_keys = {"algo", "scorer",
                                                       "content_scope"};
  for (const auto& k : string_keys) {
    if (k == key) return json(value);
  }
  try {
    return json::parse(value);
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse value '" +
                                value + "'");
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "algo",          "group_size",      "prompts_per_step",
      "gamma",         "alpha",           "scorer",
      "content_scope", "eps_low",         "eps_high",
      "max_turns",     "max_tokens_per_turn", "context_window",
      "feature_dim",   "learning_rate",   "adam_beta1",
      "adam_beta2",    "adam_eps",        "steps",
      "seed",          "std_floor",       "degenerate_group_filter",
      "rollout_temperature", "epochs_per_batch", "checkpoint_every",
      "warm_start",    "warm_start_examples"};
  return keys;
}

TrainConfig parse_config(const std::string& json_text) {
  TrainConfig cfg;
  std::string trimmed = json_text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) return cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) apply_key(cfg, it.key(), it.value());
  return cfg;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_override(TrainConfig& cfg, const std::string& key_equals_value) {
  const auto eq = key_equals_value.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be key=value, got '" +
                                key_equals_value + "'");
  const std::string key = key_equals_value.substr(0, eq);
  const std::string value = key_equals_value.substr(eq + 1);
  bool known = false;
  for (const auto& k : config_keys()) {
    if (k == key) {
      known = true;
      break;
    }
  }
  if (!known) unknown_key(key);
  apply_key(cfg, key, value_as_json(key, value));
}

std::string to_string(Algo algo) { return algo == Algo::grpo ? "grpo" : "gtpo"; }

std::string to_string(Scorer scorer) {
  switch (scorer) {
    case Scorer::ratcliff: return "ratcliff";
    case Scorer::embedding: return "embedding";
    default: return "none";
  }
}

std::string to_string(ContentScope scope) {
  return scope == ContentScope::code_only ? "code" : "trajectory";
}

std::string dump_config(const TrainConfig& cfg) {
  json j;
  j["algo"] = to_string(cfg.algo);
  j["group_size"] = cfg.group_size;
  j["prompts_per_step"] = cfg.prompts_per_step;
  j["gamma"] = cfg.gamma;
  j["alpha"] = cfg.shaping.alpha;
  j["scorer"] = to_string(cfg.shaping.scorer);
  j["content_scope"] = to_string(cfg.shaping.content_scope);
  j["eps_low"] = cfg.clip.eps_low;
  j["eps_high"] = cfg.clip.eps_high;
  j["max_turns"] = cfg.limits.max_turns;
  j["max_tokens_per_turn"] = cfg.limits.max_tokens_per_turn;
  j["context_window"] = cfg.policy.context;
  j["feature_dim"] = cfg.policy.features;
  j["learning_rate"] = cfg.learning_rate;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["steps"] = cfg.steps;
  j["seed"] = cfg.seed;
  j["std_floor"] = cfg.std_floor;
  j["degenerate_group_filter"] = cfg.degenerate_group_filter;
  j["rollout_temperature"] = cfg.rollout_temperature;
  j["epochs_per_batch"] = cfg.epochs_per_batch;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["warm_start"] = cfg.warm_start;
  j["warm_start_examples"] = cfg.warm_start_examples;
  return j.dump(2);
}

}  // namespace gtpo
