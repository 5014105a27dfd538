#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivf/graph/dag.hpp"
#include "json.hpp"

namespace ivf::graph {

/// Maximum number of suspect edges; clauses are evaluated on all 2^k subgraphs.
inline constexpr std::size_t kMaxSuspectEdges = 12;

struct Witness {
    std::string clause;
    // suspect edges present in the failing subgraph, "A -> B"
    std::vector<std::string> suspect_edges;
    std::optional<std::string> trail;
};

struct Verdict {
    bool qualified = true;
    std::vector<std::string> failed_conditions;
    std::vector<Witness> witnesses;
    std::vector<std::string> flags;

    void fail(Witness w);
};

/// Graphical IV conditions, once with every suspect edge present and once
/// with none.
struct IvVerdict {
    Verdict with_suspect;
    Verdict without_suspect;
};

IvVerdict check_iv_graphical(const Dag& g);

// Single-threat checks; the conditioning set is every control-role node.
Verdict check_apo(const Dag& g, NodeId u);
Verdict check_api(const Dag& g, NodeId u);

// Multi-threat checks with explicit threat v and controls c.
Verdict check_general_apo(const Dag& g, NodeId u, NodeId v, const NodeSet& c);
Verdict check_general_api(const Dag& g, NodeId u, NodeId v, const NodeSet& c);

/// With `general`, the NC assumption only has to hold in subgraphs where
/// the alternative path variable is separated from the IV (resp. outcome).
Verdict check_nco(const Dag& g, NodeId nc, NodeId u, bool general = false);
Verdict check_nci(const Dag& g, NodeId nc, NodeId u, bool general = false);

/// First latent/candidate node (declaration order) for which nc qualifies.
std::optional<NodeId> find_nco_proxy(const Dag& g, NodeId nc, bool general = false);
std::optional<NodeId> find_nci_proxy(const Dag& g, NodeId nc, bool general = false);

nlohmann::ordered_json to_json(const Verdict& v);
nlohmann::ordered_json to_json(const IvVerdict& v);

} // namespace ivf::graph
