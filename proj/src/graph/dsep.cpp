#include "ivf/graph/dsep.hpp"

#include <array>
#include <deque>

#include "ivf/error.hpp"

namespace ivf::graph {

namespace {

void check_sets(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& cond) {
    std::vector<int> owner(g.size(), -1);
    int tag = 0;
    for (const NodeSet* set : {&a, &b, &cond}) {
        for (NodeId v : *set) {
            if (v >= g.size()) throw GraphError("unknown node id");
            if (owner[v] != -1 && owner[v] != tag)
                throw GraphError("node sets overlap at '" + g.name(v) + "'");
            owner[v] = tag;
        }
        ++tag;
    }
}

std::vector<bool> membership(std::size_t n, const NodeSet& set) {
    std::vector<bool> out(n, false);
    for (NodeId v : set) out[v] = true;
    return out;
}

} // namespace

std::vector<bool> active_reachable(const Dag& g, const NodeSet& sources, const NodeSet& cond) {
    const std::size_t n = g.size();
    const auto in_cond = membership(n, cond);
    // ancestors of the conditioning set (reflexive): colliders there are open
    std::vector<bool> cond_anc(n, false);
    for (NodeId v = 0; v < n; ++v)
        for (NodeId c : cond)
            if (g.descendants(v)[c]) {
                cond_anc[v] = true;
                break;
            }

    enum Dir : int { up = 0, down = 1 }; // up: arrived from a child; down: from a parent
    std::vector<std::array<bool, 2>> visited(n, {false, false});
    std::vector<bool> reach(n, false);
    std::deque<std::pair<NodeId, Dir>> queue;
    for (NodeId s : sources) queue.emplace_back(s, up);
    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = true;
        if (!in_cond[v]) reach[v] = true;
        if (dir == up) {
            if (in_cond[v]) continue;
            for (NodeId p : g.parents(v)) queue.emplace_back(p, up);
            for (NodeId c : g.children(v)) queue.emplace_back(c, down);
        } else {
            if (!in_cond[v])
                for (NodeId c : g.children(v)) queue.emplace_back(c, down);
            if (cond_anc[v])
                for (NodeId p : g.parents(v)) queue.emplace_back(p, up);
        }
    }
    return reach;
}

bool d_separated(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& cond) {
    check_sets(g, a, b, cond);
    if (a.empty() || b.empty()) return true;
    auto reach = active_reachable(g, a, cond);
    for (NodeId v : b)
        if (reach[v]) return false;
    return true;
}

bool d_separated(const Dag& g, const std::vector<std::string>& a, const std::vector<std::string>& b,
                 const std::vector<std::string>& cond) {
    return d_separated(g, g.ids(a), g.ids(b), g.ids(cond));
}

bool blocks(const Dag& g, const Trail& trail, std::size_t i, const std::vector<bool>& in_cond) {
    const NodeId v = trail.nodes[i];
    const bool collider = trail.forward[i - 1] && !trail.forward[i];
    if (!collider) return in_cond[v];
    const auto& desc = g.descendants(v);
    for (NodeId w = 0; w < g.size(); ++w)
        if (desc[w] && in_cond[w]) return false;
    return true;
}

std::optional<Trail> find_open_trail(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& cond) {
    check_sets(g, a, b, cond);
    const auto in_cond = membership(g.size(), cond);
    const auto in_b = membership(g.size(), b);
    std::deque<Trail> queue;
    for (NodeId s : a) queue.push_back(Trail{{s}, {}});
    while (!queue.empty()) {
        Trail t = std::move(queue.front());
        queue.pop_front();
        const NodeId last = t.nodes.back();
        auto extend = [&](NodeId next, bool forward) {
            for (NodeId v : t.nodes)
                if (v == next) return;
            Trail u = t;
            u.nodes.push_back(next);
            u.forward.push_back(forward);
            if (u.nodes.size() >= 3 && blocks(g, u, u.nodes.size() - 2, in_cond)) return;
            queue.push_back(std::move(u));
        };
        if (t.nodes.size() > 1 && in_b[last]) return t;
        for (NodeId c : g.children(last)) extend(c, true);
        for (NodeId p : g.parents(last)) extend(p, false);
    }
    return std::nullopt;
}

} // namespace ivf::graph
