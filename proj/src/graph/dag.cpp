#include "ivf/graph/dag.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <set>

#include "ivf/error.hpp"

namespace ivf::graph {

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 7> kRoleNames{{
    {Role::iv, "iv"},
    {Role::treatment, "treatment"},
    {Role::outcome, "outcome"},
    {Role::control, "control"},
    {Role::latent, "latent"},
    {Role::candidate, "candidate"},
    {Role::other, "other"},
}};

// Kahn's algorithm; returns nullopt when a cycle exists.
std::optional<std::vector<NodeId>> kahn(std::size_t n, const std::vector<std::vector<NodeId>>& children) {
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& list : children)
        for (NodeId c : list) ++indegree[c];
    // min-heap keeps the order deterministic and declaration-ordered
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push(v);
    std::vector<NodeId> order;
    order.reserve(n);
    while (!ready.empty()) {
        NodeId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (NodeId c : children[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != n) return std::nullopt;
    return order;
}

} // namespace

std::string_view to_string(Role role) {
    for (const auto& [r, name] : kRoleNames)
        if (r == role) return name;
    return "other";
}

std::optional<Role> parse_role(std::string_view text) {
    for (const auto& [r, name] : kRoleNames)
        if (name == text) return r;
    return std::nullopt;
}

Dag::Dag(std::vector<Node> nodes, std::vector<Edge> edges) : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const std::size_t n = nodes_.size();
    for (NodeId i = 0; i < n; ++i) {
        if (nodes_[i].name.empty()) throw GraphError("empty node name");
        if (!index_.emplace(nodes_[i].name, i).second)
            throw GraphError("duplicate node '" + nodes_[i].name + "'");
    }
    for (Role unique : {Role::iv, Role::treatment, Role::outcome}) {
        auto count = std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& v) { return v.role == unique; });
        if (count > 1)
            throw GraphError("more than one node tagged role=" + std::string(to_string(unique)));
    }
    parents_.assign(n, {});
    children_.assign(n, {});
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const Edge& e : edges_) {
        if (e.from >= n || e.to >= n) throw GraphError("edge endpoint out of range");
        if (e.from == e.to) throw GraphError("cycle detected: self-loop on '" + nodes_[e.from].name + "'");
        if (!seen.emplace(e.from, e.to).second)
            throw GraphError("duplicate edge " + nodes_[e.from].name + " -> " + nodes_[e.to].name);
        parents_[e.to].push_back(e.from);
        children_[e.from].push_back(e.to);
    }
    auto order = kahn(n, children_);
    if (!order) throw GraphError("cycle detected");
    topo_ = std::move(*order);

    descendants_.assign(n, std::vector<bool>(n, false));
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        NodeId v = *it;
        descendants_[v][v] = true;
        for (NodeId c : children_[v])
            for (NodeId w = 0; w < n; ++w)
                if (descendants_[c][w]) descendants_[v][w] = true;
    }
}

bool Dag::contains(std::string_view name) const { return find(name).has_value(); }

std::optional<NodeId> Dag::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId Dag::id(std::string_view name) const {
    auto found = find(name);
    if (!found) throw GraphError("unknown node '" + std::string(name) + "'");
    return *found;
}

NodeSet Dag::ids(const std::vector<std::string>& names) const {
    NodeSet out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(id(n));
    return make_set(std::move(out));
}

std::optional<NodeId> Dag::role_node(Role role) const {
    for (NodeId i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == role) return i;
    return std::nullopt;
}

NodeSet Dag::nodes_with_role(Role role) const {
    NodeSet out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == role) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dag::suspect_edges() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (edges_[i].suspect) out.push_back(i);
    return out;
}

bool Dag::has_edge(NodeId from, NodeId to) const {
    const auto& c = children_.at(from);
    return std::find(c.begin(), c.end(), to) != c.end();
}

Dag Dag::with_edges(const std::vector<bool>& keep) const {
    std::vector<Edge> kept;
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (keep.at(i)) kept.push_back(edges_[i]);
    return Dag(nodes_, std::move(kept));
}

DagBuilder& DagBuilder::node(std::string name, Role role) {
    nodes_.push_back({std::move(name), role});
    return *this;
}

DagBuilder& DagBuilder::edge(const std::string& from, const std::string& to, bool suspect) {
    edges_.emplace_back(from, to);
    suspect_.push_back(suspect);
    return *this;
}

Dag DagBuilder::build() const {
    // Cycles are reported before dangling endpoints, so the edge list alone
    // is checked first over the union of declared and referenced names.
    std::unordered_map<std::string, NodeId> all;
    std::vector<std::string> names;
    auto intern = [&](const std::string& s) {
        auto [it, inserted] = all.emplace(s, names.size());
        if (inserted) names.push_back(s);
        return it->second;
    };
    for (const auto& v : nodes_) intern(v.name);
    std::vector<std::vector<NodeId>> children;
    for (const auto& [a, b] : edges_) {
        NodeId ia = intern(a), ib = intern(b);
        children.resize(names.size());
        children[ia].push_back(ib);
    }
    children.resize(names.size());
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (edges_[i].first == edges_[i].second)
            throw GraphError("cycle detected: self-loop on '" + edges_[i].first + "'");
    if (!kahn(names.size(), children)) throw GraphError("cycle detected");

    std::unordered_map<std::string, NodeId> declared;
    for (NodeId i = 0; i < nodes_.size(); ++i)
        if (!declared.emplace(nodes_[i].name, i).second)
            throw GraphError("duplicate node '" + nodes_[i].name + "'");
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto& [a, b] = edges_[i];
        auto ia = declared.find(a), ib = declared.find(b);
        if (ia == declared.end()) throw GraphError("dangling edge endpoint '" + a + "'");
        if (ib == declared.end()) throw GraphError("dangling edge endpoint '" + b + "'");
        edges.push_back({ia->second, ib->second, suspect_[i]});
    }
    return Dag(nodes_, std::move(edges));
}

Dag remove_incoming(const Dag& g, NodeId node) {
    if (node >= g.size()) throw GraphError("unknown node id");
    std::vector<bool> keep(g.edges().size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = g.edges()[i].to != node;
    return g.with_edges(keep);
}

Dag remove_incoming(const Dag& g, std::string_view node) { return remove_incoming(g, g.id(node)); }

std::string to_string(const Dag& g, const Trail& trail) {
    std::string out;
    for (std::size_t i = 0; i < trail.nodes.size(); ++i) {
        if (i > 0) out += trail.forward[i - 1] ? " -> " : " <- ";
        out += g.name(trail.nodes[i]);
    }
    return out;
}

NodeSet make_set(std::vector<NodeId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

} // namespace ivf::graph
