#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gtpo/trajectory.hpp"

namespace gtpo {

/// One JSON record per trajectory, in group order. Floats round-trip at full
/// precision; read_log(write_log(x)) is the identity.
void write_log(std::span<const Group> groups, std::ostream& out);
std::string write_log(std::span<const Group> groups);

/// Parse a trajectory log, reassembling groups by group_id (consecutive
/// records). Malformed records throw with the line number and field name.
std::vector<Group> read_log(std::istream& in);
std::vector<Group> read_log(const std::string& text);

}  // namespace gtpo
