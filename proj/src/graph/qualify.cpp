#include "ivf/graph/qualify.hpp"

#include <algorithm>

#include "ivf/error.hpp"
#include "ivf/graph/dsep.hpp"

namespace ivf::graph {

namespace {

// A d-separation statement; `surgery` evaluates it in the graph with the
// treatment's incoming edges removed. `negated` asks for d-connection.
struct Statement {
    bool surgery = false;
    NodeSet a, b, cond;
    bool negated = false;
};

// Clause holding in every suspect subgraph; with an antecedent it is an
// implication checked subgraph by subgraph.
struct Clause {
    std::string name;
    std::optional<Statement> antecedent;
    Statement consequent;
};

struct Roles {
    NodeId z, x, y;
    NodeSet controls;
};

Roles roles(const Dag& g) {
    auto z = g.role_node(Role::iv);
    auto x = g.role_node(Role::treatment);
    auto y = g.role_node(Role::outcome);
    if (!z || !x || !y) throw GraphError("graph needs nodes tagged role=iv, role=treatment and role=outcome");
    return {*z, *x, *y, g.nodes_with_role(Role::control)};
}

NodeSet join(NodeSet s, std::initializer_list<NodeId> extra) {
    s.insert(s.end(), extra);
    return make_set(std::move(s));
}

void check_node(const Dag& g, NodeId v) {
    if (v >= g.size()) throw GraphError("unknown node id");
}

struct Subgraph {
    Dag full;
    Dag cut; // treatment's incoming edges removed
    std::vector<std::string> suspects;
};

Subgraph subgraph(const Dag& g, NodeId x, std::size_t mask) {
    const auto suspect = g.suspect_edges();
    std::vector<bool> keep(g.edges().size(), true);
    std::vector<std::string> present;
    for (std::size_t j = 0; j < suspect.size(); ++j) {
        const Edge& e = g.edges()[suspect[j]];
        keep[suspect[j]] = (mask >> j) & 1U;
        if (keep[suspect[j]]) present.push_back(g.name(e.from) + " -> " + g.name(e.to));
    }
    Dag h = g.with_edges(keep);
    Dag cut = remove_incoming(h, x);
    return {std::move(h), std::move(cut), std::move(present)};
}

std::size_t subset_count(const Dag& g) {
    const auto k = g.suspect_edges().size();
    if (k > kMaxSuspectEdges)
        throw GraphError("too many suspect edges (" + std::to_string(k) + ", at most " +
                         std::to_string(kMaxSuspectEdges) + ")");
    return std::size_t{1} << k;
}

bool holds(const Subgraph& s, const Statement& st) {
    const Dag& h = st.surgery ? s.cut : s.full;
    return d_separated(h, st.a, st.b, st.cond) != st.negated;
}

Witness witness(const Subgraph& s, const Clause& c) {
    Witness w{c.name, s.suspects, std::nullopt};
    const Statement& st = c.consequent;
    if (!st.negated) {
        const Dag& h = st.surgery ? s.cut : s.full;
        if (auto t = find_open_trail(h, st.a, st.b, st.cond)) w.trail = to_string(h, *t);
    }
    return w;
}

Verdict evaluate(const Dag& g, NodeId x, const std::vector<Clause>& clauses) {
    Verdict out;
    std::vector<bool> failed(clauses.size(), false);
    const std::size_t count = subset_count(g);
    for (std::size_t mask = 0; mask < count; ++mask) {
        const Subgraph s = subgraph(g, x, mask);
        for (std::size_t i = 0; i < clauses.size(); ++i) {
            if (failed[i]) continue;
            const Clause& c = clauses[i];
            if (c.antecedent && !holds(s, *c.antecedent)) continue;
            if (holds(s, c.consequent)) continue;
            failed[i] = true;
            out.fail(witness(s, c));
        }
    }
    // report in clause order regardless of which subgraph found the failure
    std::vector<Witness> ordered;
    for (const Clause& c : clauses)
        for (const Witness& w : out.witnesses)
            if (w.clause == c.name) ordered.push_back(w);
    out.witnesses = std::move(ordered);
    out.failed_conditions.clear();
    for (const Witness& w : out.witnesses) out.failed_conditions.push_back(w.clause);
    out.flags.push_back("graphical-only");
    return out;
}

// u has no active trail to Z nor Y in any subgraph.
bool uninformative(const Dag& g, const Roles& r, NodeId u, const NodeSet& c) {
    const std::size_t count = subset_count(g);
    for (std::size_t mask = 0; mask < count; ++mask) {
        const Subgraph s = subgraph(g, r.x, mask);
        if (!d_separated(s.full, {u}, {r.z}, c) || !d_separated(s.full, {u}, {r.y}, c)) return false;
    }
    return true;
}

void add_flag(Verdict& v, const std::string& flag) {
    if (std::find(v.flags.begin(), v.flags.end(), flag) == v.flags.end()) v.flags.push_back(flag);
}

Verdict alternative_path(const Dag& g, NodeId u, bool outcome_side) {
    check_node(g, u);
    const Roles r = roles(g);
    const NodeSet& c = r.controls;
    std::vector<Clause> clauses;
    clauses.push_back({"latent-iv-validity", std::nullopt, {true, {r.z}, {r.y}, join(c, {u})}});
    Statement valid{true, {r.z}, {r.y}, c};
    if (outcome_side)
        clauses.push_back({"path-indication", valid, {false, {r.z}, {u}, c}});
    else
        clauses.push_back({"path-indication", valid, {false, {u}, {r.y}, join(c, {r.z})}});
    Verdict v = evaluate(g, r.x, clauses);
    if (uninformative(g, r, u, c)) add_flag(v, "uninformative");
    return v;
}

Verdict general_alternative_path(const Dag& g, NodeId u, NodeId v, const NodeSet& c, bool outcome_side) {
    check_node(g, u);
    check_node(g, v);
    if (u == v) throw GraphError("u and v must be distinct");
    const Roles r = roles(g);
    for (NodeId w : c)
        if (w >= g.size() || g.node(w).role != Role::control)
            throw GraphError("conditioning node '" + (w < g.size() ? g.name(w) : std::string("?")) +
                             "' is not tagged role=control");
    const NodeSet cv = join(c, {v});
    std::vector<Clause> clauses;
    clauses.push_back({"latent-iv-validity", std::nullopt, {true, {r.z}, {r.y}, join(c, {u, v})}});
    Statement valid_v{true, {r.z}, {r.y}, cv};
    if (outcome_side) {
        Statement zu_v{false, {r.z}, {u}, cv};
        clauses.push_back({"path-indication", valid_v, zu_v});
        clauses.push_back({"direct-iv-link", zu_v, {false, {r.z}, {u}, c}});
    } else {
        Statement uy_v{false, {u}, {r.y}, join(cv, {r.z})};
        clauses.push_back({"path-indication", valid_v, uy_v});
        clauses.push_back({"direct-outcome-link", uy_v, {false, {u}, {r.y}, join(c, {r.z})}});
    }
    clauses.push_back({"v-validity", Statement{true, {r.z}, {r.y}, c}, valid_v});
    Verdict out = evaluate(g, r.x, clauses);
    if (uninformative(g, r, u, c)) add_flag(out, "uninformative");
    return out;
}

void absorb(Verdict& into, const Verdict& proxy, const std::string& reason) {
    if (proxy.qualified) return;
    into.fail({reason, {}, std::nullopt});
    for (const Witness& w : proxy.witnesses) into.witnesses.push_back(w);
}

} // namespace

void Verdict::fail(Witness w) {
    qualified = false;
    if (std::find(failed_conditions.begin(), failed_conditions.end(), w.clause) == failed_conditions.end())
        failed_conditions.push_back(w.clause);
    witnesses.push_back(std::move(w));
}

IvVerdict check_iv_graphical(const Dag& g) {
    const Roles r = roles(g);
    const auto suspect = g.suspect_edges();
    auto run = [&](bool on) {
        std::vector<bool> keep(g.edges().size(), true);
        for (std::size_t i : suspect) keep[i] = on;
        const Dag h = g.with_edges(keep);
        std::vector<std::string> present;
        if (on)
            for (std::size_t i : suspect)
                present.push_back(g.name(g.edges()[i].from) + " -> " + g.name(g.edges()[i].to));
        const Dag cut = remove_incoming(h, r.x);
        Verdict v;
        if (!d_separated(cut, {r.z}, {r.y}, r.controls)) {
            Witness w{"iv-independence", present, std::nullopt};
            if (auto t = find_open_trail(cut, {r.z}, {r.y}, r.controls)) w.trail = to_string(cut, *t);
            v.fail(std::move(w));
        }
        if (d_separated(h, {r.z}, {r.x}, r.controls)) v.fail({"iv-relevance", present, std::nullopt});
        v.flags.push_back("graphical-only");
        return v;
    };
    return {run(true), run(false)};
}

Verdict check_apo(const Dag& g, NodeId u) { return alternative_path(g, u, true); }
Verdict check_api(const Dag& g, NodeId u) { return alternative_path(g, u, false); }

Verdict check_general_apo(const Dag& g, NodeId u, NodeId v, const NodeSet& c) {
    return general_alternative_path(g, u, v, c, true);
}

Verdict check_general_api(const Dag& g, NodeId u, NodeId v, const NodeSet& c) {
    return general_alternative_path(g, u, v, c, false);
}

Verdict check_nco(const Dag& g, NodeId nc, NodeId u, bool general) {
    check_node(g, nc);
    check_node(g, u);
    const Roles r = roles(g);
    const NodeSet& c = r.controls;
    std::vector<Clause> clauses;
    Statement assumption{false, {nc}, {r.z}, join(c, {u})};
    if (general)
        clauses.push_back({"nco-assumption", Statement{false, {r.z}, {u}, c}, assumption});
    else
        clauses.push_back({"nco-assumption", std::nullopt, assumption});
    clauses.push_back({"u-comparability", std::nullopt, {false, {nc}, {u}, c, true}});
    Verdict out = evaluate(g, r.x, clauses);
    absorb(out, check_apo(g, u), "u-not-apo");
    out.qualified = out.failed_conditions.empty();
    return out;
}

Verdict check_nci(const Dag& g, NodeId nc, NodeId u, bool general) {
    check_node(g, nc);
    check_node(g, u);
    const Roles r = roles(g);
    const NodeSet zc = join(r.controls, {r.z});
    std::vector<Clause> clauses;
    Statement assumption{false, {nc}, {r.y}, join(zc, {u})};
    if (general)
        clauses.push_back({"nci-assumption", Statement{false, {u}, {r.y}, zc}, assumption});
    else
        clauses.push_back({"nci-assumption", std::nullopt, assumption});
    clauses.push_back({"u-comparability", std::nullopt, {false, {nc}, {u}, zc, true}});
    Verdict out = evaluate(g, r.x, clauses);
    absorb(out, check_api(g, u), "u-not-api");
    out.qualified = out.failed_conditions.empty();
    return out;
}

namespace {

template <class Check>
std::optional<NodeId> find_proxy(const Dag& g, NodeId nc, Check check) {
    const Roles r = roles(g);
    for (NodeId u = 0; u < g.size(); ++u) {
        const Role role = g.node(u).role;
        if (u == nc || (role != Role::latent && role != Role::candidate)) continue;
        if (u == r.z || u == r.x || u == r.y) continue;
        if (check(u).qualified) return u;
    }
    return std::nullopt;
}

} // namespace

std::optional<NodeId> find_nco_proxy(const Dag& g, NodeId nc, bool general) {
    return find_proxy(g, nc, [&](NodeId u) { return check_nco(g, nc, u, general); });
}

std::optional<NodeId> find_nci_proxy(const Dag& g, NodeId nc, bool general) {
    return find_proxy(g, nc, [&](NodeId u) { return check_nci(g, nc, u, general); });
}

nlohmann::ordered_json to_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["qualified"] = v.qualified;
    j["failed_conditions"] = v.failed_conditions;
    auto ws = nlohmann::ordered_json::array();
    for (const Witness& w : v.witnesses) {
        nlohmann::ordered_json e;
        e["clause"] = w.clause;
        e["suspect_edges"] = w.suspect_edges;
        if (w.trail) e["trail"] = *w.trail;
        else e["trail"] = nullptr;
        ws.push_back(std::move(e));
    }
    j["witnesses"] = std::move(ws);
    j["flags"] = v.flags;
    return j;
}

nlohmann::ordered_json to_json(const IvVerdict& v) {
    nlohmann::ordered_json j;
    j["with_suspect"] = to_json(v.with_suspect);
    j["without_suspect"] = to_json(v.without_suspect);
    return j;
}

} // namespace ivf::graph
