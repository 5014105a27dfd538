#pragma once

#include <map>
#include <string>
#include <vector>

#include "ivf/graph/dag.hpp"
#include "ivf/scm/scm.hpp"

namespace ivf::scm {

using Overrides = std::map<std::string, std::string>;

/// A graph/SCM pair. The graph always carries the suspect edges (flagged);
/// the SCM contains the suspect terms only when the threat is switched on.
struct Scenario {
    std::string name;
    std::string description;
    graph::Dag graph;
    ScmSpec spec;
    bool suspect_on = false;
    bool discrete = false;
    std::vector<std::string> tags;

    bool has_tag(const std::string& tag) const;
    /// Graph with suspect edges kept only if the threat is on.
    graph::Dag realized_graph() const;
    /// Columns exported by default (latent nodes removed).
    std::vector<std::string> observed() const;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    bool builtin = true;
};

/// Built-in scenarios followed by *.json files found in the directories of
/// IVF_SCENARIO_PATH (colon separated).
std::vector<CatalogEntry> catalog();

/// Overrides (all values are strings):
///   suspect=on|off, suspect_coef=<x>, discrete=true|false,
///   <from>-><to>=<coef>   coefficient of the linear term of <to> on <from>,
///   p_<node>=<p>          bernoulli / two-point probability,
///   sd_<node>=<sd>        gaussian sd of an exogenous node or of a noise term,
///   panel=a|b (d4), theta / p1 / p2 / pu (d5).
/// Throws ScmError for unknown names and invalid overrides.
Scenario scenario(const std::string& name, const Overrides& overrides = {});

/// Scenario from a JSON description {"description", "graph" (DSL text),
/// "scm" (see scm_json.hpp), "tags"}.
Scenario scenario_from_json(const std::string& name, const std::string& text, const Overrides& overrides = {});

} // namespace ivf::scm
