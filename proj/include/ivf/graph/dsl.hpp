#pragma once

#include <string>
#include <string_view>

#include "ivf/graph/dag.hpp"

namespace ivf::graph {

/// Parses the line-based graph language:
///
///     # comment
///     node <name> [role=<role>]
///     edge <from> -> <to> [suspect]
///
/// Errors (GraphError) carry the offending line number.
Dag parse_graph(std::string_view text);

Dag load_graph(const std::string& path);

/// Inverse of parse_graph; nodes in declaration order, then edges.
std::string format_graph(const Dag& g);

} // namespace ivf::graph
