#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ivf::graph {

using NodeId = std::size_t;
// Sorted, duplicate-free list of node ids.
using NodeSet = std::vector<NodeId>;

enum class Role { iv, treatment, outcome, control, latent, candidate, other };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct Node {
    std::string name;
    Role role = Role::other;
};

struct Edge {
    NodeId from = 0;
    NodeId to = 0;
    bool suspect = false; // hypothesized threat edge ("dashed arrow")
};

/// Directed acyclic graph with role-tagged nodes.
///
/// Immutable once constructed: the constructor validates unique names,
/// edge endpoints, acyclicity and role multiplicity, and throws GraphError
/// on violation. Every derived graph (surgery, suspect subsets) is a new value.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<Node> nodes, std::vector<Edge> edges);

    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    const std::string& name(NodeId id) const { return nodes_.at(id).name; }

    const std::vector<NodeId>& parents(NodeId id) const { return parents_.at(id); }
    const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }

    bool contains(std::string_view name) const;
    std::optional<NodeId> find(std::string_view name) const;
    /// Throws GraphError for an unknown name.
    NodeId id(std::string_view name) const;
    NodeSet ids(const std::vector<std::string>& names) const;

    /// Node carrying a unique role (iv, treatment, outcome), if assigned.
    std::optional<NodeId> role_node(Role role) const;
    NodeSet nodes_with_role(Role role) const;

    std::vector<std::size_t> suspect_edges() const;
    bool has_edge(NodeId from, NodeId to) const;

    /// Reflexive descendant closure of `id`.
    const std::vector<bool>& descendants(NodeId id) const { return descendants_.at(id); }
    std::vector<NodeId> topological_order() const { return topo_; }

    /// Same graph restricted to the edges for which keep[i] is true.
    Dag with_edges(const std::vector<bool>& keep) const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::vector<bool>> descendants_;
    std::vector<NodeId> topo_;
};

/// Accumulates nodes and edges by name before validating into a Dag.
class DagBuilder {
public:
    DagBuilder& node(std::string name, Role role = Role::other);
    DagBuilder& edge(const std::string& from, const std::string& to, bool suspect = false);
    /// Throws GraphError (cycle first, then dangling endpoints).
    Dag build() const;

private:
    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<bool> suspect_;
};

/// G with every edge entering `node` removed.
Dag remove_incoming(const Dag& g, NodeId node);
Dag remove_incoming(const Dag& g, std::string_view node);

/// Trail between two nodes; forward[i] is true when the i-th edge points
/// from nodes[i] to nodes[i+1].
struct Trail {
    std::vector<NodeId> nodes;
    std::vector<bool> forward;
};

std::string to_string(const Dag& g, const Trail& trail);

NodeSet make_set(std::vector<NodeId> ids);

} // namespace ivf::graph
