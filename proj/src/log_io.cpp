#include "gtpo/log_io.hpp"

#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gtpo {

using nlohmann::json;

namespace {

json turn_to_json(const Turn& t) {
  json j;
  j["reasoning"] = t.reasoning;
  j["code"] = t.code ? json(*t.code) : json(nullptr);
  j["feedback"] = t.feedback ? json(*t.feedback) : json(nullptr);
  j["is_final"] = t.is_final;
  j["format_valid"] = t.format_valid;
  return j;
}

json record_to_json(const Group& g, std::size_t sample_idx) {
  const Trajectory& traj = g.members[sample_idx];
  json j;
  j["prompt_id"] = g.prompt_id;
  j["group_id"] = g.group_id;
  j["sample_idx"] = sample_idx;
  j["prompt"] = traj.prompt;
  json turns = json::array();
  for (const Turn& t : traj.turns) turns.push_back(turn_to_json(t));
  j["turns"] = std::move(turns);
  j["answer"] = traj.answer ? json(*traj.answer) : json(nullptr);
  j["correct"] = traj.correct;
  if (traj.old_logprobs) j["old_logprobs"] = *traj.old_logprobs;
  return j;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& field,
                       const std::string& what) {
  throw std::runtime_error("trajectory log line " + std::to_string(line_no) +
                           ", field '" + field + "': " + what);
}

template <typename T>
T require(const json& j, const char* field, std::size_t line_no) {
  if (!j.contains(field)) fail(line_no, field, "missing");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    fail(line_no, field, e.what());
  }
}

Turn turn_from_json(const json& j, std::size_t line_no) {
  Turn t;
  t.reasoning = require<std::vector<TokenId>>(j, "reasoning", line_no);
  if (j.contains("code") && !j.at("code").is_null())
    t.code = require<std::vector<TokenId>>(j, "code", line_no);
  if (j.contains("feedback") && !j.at("feedback").is_null())
    t.feedback = require<std::vector<TokenId>>(j, "feedback", line_no);
  t.is_final = require<bool>(j, "is_final", line_no);
  t.format_valid = require<bool>(j, "format_valid", line_no);
  return t;
}

}  // namespace

void write_log(std::span<const Group> groups, std::ostream& out) {
  for (const Group& g : groups) {
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      out << record_to_json(g, i).dump() << '\n';
    }
  }
}

std::string write_log(std::span<const Group> groups) {
  std::ostringstream out;
  write_log(groups, out);
  return out.str();
}

std::vector<Group> read_log(std::istream& in) {
  std::vector<Group> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(line_no, "<record>", e.what());
    }
    const auto prompt_id = require<std::int64_t>(j, "prompt_id", line_no);
    const auto group_id = require<std::int64_t>(j, "group_id", line_no);
    require<std::size_t>(j, "sample_idx", line_no);

    Trajectory traj;
    traj.prompt = require<std::vector<TokenId>>(j, "prompt", line_no);
    if (!j.contains("turns") || !j.at("turns").is_array())
      fail(line_no, "turns", "missing or not an array");
    for (const json& tj : j.at("turns")) traj.turns.push_back(turn_from_json(tj, line_no));
    if (j.contains("answer") && !j.at("answer").is_null())
      traj.answer = require<long long>(j, "answer", line_no);
    traj.correct = require<bool>(j, "correct", line_no);
    if (j.contains("old_logprobs") && !j.at("old_logprobs").is_null()) {
      traj.old_logprobs = require<std::vector<double>>(j, "old_logprobs", line_no);
    }

    if (groups.empty() || groups.back().group_id != group_id) {
      groups.push_back(Group{prompt_id, group_id, {}});
    }
    groups.back().members.push_back(std::move(traj));
  }
  return groups;
}

std::vector<Group> read_log(const std::string& text) {
  std::istringstream in(text);
  return read_log(in);
}

}  // namespace gtpo
