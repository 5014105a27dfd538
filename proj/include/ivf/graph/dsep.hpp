#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivf/graph/dag.hpp"

namespace ivf::graph {

/// True iff every trail between a node of `a` and a node of `b` is blocked
/// given `cond`. Linear-time active-trail reachability (Bayes ball); the
/// node sets must be pairwise disjoint.
bool d_separated(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& cond);

bool d_separated(const Dag& g, const std::vector<std::string>& a, const std::vector<std::string>& b,
                 const std::vector<std::string>& cond);

/// Nodes reachable from `sources` along trails active given `cond`
/// (sources themselves included when not conditioned on).
std::vector<bool> active_reachable(const Dag& g, const NodeSet& sources, const NodeSet& cond);

/// An open trail from a node of `a` to a node of `b`, if one exists.
/// Used for verdict witnesses; shortest-first search over simple trails.
std::optional<Trail> find_open_trail(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& cond);

/// Blocking rule for the interior node trail.nodes[i] (0 < i < size-1).
bool blocks(const Dag& g, const Trail& trail, std::size_t i, const std::vector<bool>& in_cond);

} // namespace ivf::graph
