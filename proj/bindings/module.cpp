#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gtpo/config.hpp"
#include "gtpo/log_io.hpp"
#include "gtpo/sweep.hpp"

namespace py = pybind11;
using namespace gtpo;

namespace {

TrainConfig config_from_dict(const py::dict& d) {
  TrainConfig cfg;
  for (auto item : d) {
    const std::string key = py::str(item.first);
    const std::string value = py::str(item.second);
    apply_override(cfg, key + "=" + value);
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_gtpo, m) {
  m.doc() = "Turn-level group policy optimization on a toy tool-use environment";

  py::class_<Turn>(m, "Turn")
      .def(py::init<>())
      .def_readwrite("reasoning", &Turn::reasoning)
      .def_readwrite("code", &Turn::code)
      .def_readwrite("feedback", &Turn::feedback)
      .def_readwrite("is_final", &Turn::is_final)
      .def_readwrite("format_valid", &Turn::format_valid)
      .def("policy_tokens", &Turn::policy_tokens);

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("prompt", &Trajectory::prompt)
      .def_readwrite("turns", &Trajectory::turns)
      .def_readwrite("answer", &Trajectory::answer)
      .def_readwrite("correct", &Trajectory::correct)
      .def_readwrite("old_logprobs", &Trajectory::old_logprobs)
      .def("policy_token_count", &Trajectory::policy_token_count)
      .def("policy_mask", &Trajectory::policy_mask)
      .def("flat_tokens", &Trajectory::flat_tokens)
      .def("has_code", &Trajectory::has_code)
      .def("format_clean", &Trajectory::format_clean);

  py::class_<Group>(m, "Group")
      .def(py::init<>())
      .def_readwrite("prompt_id", &Group::prompt_id)
      .def_readwrite("group_id", &Group::group_id)
      .def_readwrite("members", &Group::members);

  py::class_<Task>(m, "Task")
      .def_readonly("lhs", &Task::lhs)
      .def_readonly("op", &Task::op)
      .def_readonly("rhs", &Task::rhs)
      .def_readonly("ground_truth", &Task::ground_truth)
      .def_readonly("prompt", &Task::prompt);

  py::class_<FeatureSpec>(m, "FeatureSpec")
      .def(py::init<>())
      .def_readwrite("context", &FeatureSpec::context)
      .def_readwrite("features", &FeatureSpec::features)
      .def_readwrite("vocab", &FeatureSpec::vocab)
      .def("param_count", &FeatureSpec::param_count);

  py::class_<PolicyParams>(m, "PolicyParams")
      .def_static("zeros", &PolicyParams::zeros)
      .def_readwrite("spec", &PolicyParams::spec)
      .def_readwrite("theta", &PolicyParams::theta);

  py::class_<MetricsRow>(m, "MetricsRow")
      .def_readonly("step", &MetricsRow::step)
      .def_readonly("train_accuracy", &MetricsRow::train_accuracy)
      .def_readonly("code_ratio", &MetricsRow::code_ratio)
      .def_readonly("format_correctness", &MetricsRow::format_correctness)
      .def_readonly("mean_reward", &MetricsRow::mean_reward)
      .def_readonly("mean_turns", &MetricsRow::mean_turns)
      .def_readonly("clipped_fraction", &MetricsRow::clipped_fraction)
      .def_readonly("objective_value", &MetricsRow::objective_value);

  py::class_<LossReport>(m, "LossReport")
      .def_readonly("objective_value", &LossReport::objective_value)
      .def_readonly("per_token_contribution", &LossReport::per_token_contribution)
      .def_readonly("clipped_fraction", &LossReport::clipped_fraction)
      .def_readonly("token_count", &LossReport::token_count);

  // similarity and rewards
  m.def("ratcliff_similarity",
        [](const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
          return ratcliff_similarity(a, b);
        });
  m.def("sequence_reward", &sequence_reward);
  m.def("turn_reward_totals", [](const Trajectory& t) {
    std::vector<double> out;
    for (const TurnReward& r : turn_rewards(t)) out.push_back(r.total);
    return out;
  });
  m.def("concat_code", &concat_code);

  // advantages
  m.def("discounted_returns", [](const std::vector<double>& rewards, double gamma) {
    return discounted_returns(rewards, gamma).values;
  });
  m.def("grpo_group_advantages",
        [](const std::vector<double>& rewards, double std_floor) {
          return grpo_group_advantages(rewards, std_floor);
        },
        py::arg("rewards"), py::arg("std_floor") = kDefaultStdFloor);
  m.def("gtpo_group_advantages",
        [](const std::vector<std::vector<double>>& returns, double std_floor) {
          std::vector<ReturnVector> rv(returns.size());
          for (std::size_t i = 0; i < returns.size(); ++i) rv[i].values = returns[i];
          return gtpo_group_advantages(rv, std_floor).per_turn;
        },
        py::arg("returns"), py::arg("std_floor") = kDefaultStdFloor);

  // objective
  m.def("importance_ratios",
        [](const std::vector<double>& new_lp, const std::vector<double>& old_lp) {
          return importance_ratios(new_lp, old_lp);
        });
  m.def("clipped_surrogate",
        [](const std::vector<double>& ratios, const std::vector<double>& advantages,
           double eps_low, double eps_high, std::size_t token_count) {
          return clipped_surrogate(ratios, advantages, ClipConfig{eps_low, eps_high},
                                   token_count);
        },
        py::arg("ratios"), py::arg("advantages"), py::arg("eps_low") = 0.2,
        py::arg("eps_high") = 0.28, py::arg("token_count"));

  // environment
  m.def("gen_task",
        [](std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          return gen_task(rng);
        },
        py::arg("seed") = 0);
  m.def("execute_code", [](const std::vector<TokenId>& code) {
    return execute_code(code);
  });
  m.def("verify", [](std::optional<long long> answer, const Task& task) {
    return verify(answer, task);
  });
  m.def("rollout",
        [](const PolicyParams& params, const Task& task, std::uint64_t seed,
           double temperature, std::size_t max_turns, std::size_t max_tokens_per_turn) {
          std::mt19937_64 rng(seed);
          return rollout(params, task, RolloutLimits{max_turns, max_tokens_per_turn},
                         rng, temperature);
        },
        py::arg("params"), py::arg("task"), py::arg("seed") = 0,
        py::arg("temperature") = 1.0, py::arg("max_turns") = 3,
        py::arg("max_tokens_per_turn") = 32);
  m.def("oracle_policy", &oracle_policy);

  // policy
  m.def("logprob", [](const PolicyParams& p, const std::vector<TokenId>& ctx,
                      TokenId tok) { return logprob(p, ctx, tok); });
  m.def("sample_token",
        [](const PolicyParams& p, const std::vector<TokenId>& ctx, std::uint64_t seed,
           double temperature) {
          std::mt19937_64 rng(seed);
          const SampledToken s = sample_token(p, ctx, rng, temperature);
          return py::make_tuple(s.token, s.logprob);
        });
  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", [](const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    return py::make_tuple(ck.params, ck.step);
  });

  // vocabulary helpers
  m.def("decode", [](const std::vector<TokenId>& toks) { return vocab::decode(toks); });
  m.def("encode", &vocab::encode);

  // training
  m.def("train",
        [](const py::dict& config) {
          TrainConfig cfg = config_from_dict(config);
          TrainResult result = train(cfg);
          return py::make_tuple(result.params, result.metrics);
        },
        py::arg("config") = py::dict());
  m.def("evaluate",
        [](const PolicyParams& params, int n_tasks, std::uint64_t seed,
           std::size_t max_turns, std::size_t max_tokens_per_turn) {
          return evaluate(params, n_tasks, seed,
                          RolloutLimits{max_turns, max_tokens_per_turn});
        },
        py::arg("params"), py::arg("n_tasks") = 200, py::arg("seed") = 0,
        py::arg("max_turns") = 3, py::arg("max_tokens_per_turn") = 32);

  // log round trip
  m.def("write_log", [](const std::vector<Group>& groups) {
    return write_log(std::span<const Group>(groups));
  });
  m.def("read_log", [](const std::string& text) { return read_log(text); });

  // token constants
  py::dict tokens;
  tokens["plus"] = vocab::kPlus;
  tokens["minus"] = vocab::kMinus;
  tokens["times"] = vocab::kTimes;
  tokens["code_open"] = vocab::kCodeOpen;
  tokens["code_close"] = vocab::kCodeClose;
  tokens["answer"] = vocab::kAnswer;
  tokens["eos"] = vocab::kEos;
  tokens["bos"] = vocab::kBos;
  tokens["sep"] = vocab::kSep;
  tokens["equals"] = vocab::kEquals;
  tokens["err"] = vocab::kErr;
  m.attr("TOKENS") = tokens;
  m.attr("VOCAB_SIZE") = vocab::kSize;
}
