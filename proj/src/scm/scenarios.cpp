#include "ivf/scm/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ivf/error.hpp"
#include "ivf/graph/dsl.hpp"
#include "ivf/scm/scm_json.hpp"

namespace ivf::scm {

namespace {

using graph::Role;

struct Params {
    bool suspect = false;
    double s = 0.5;
    bool discrete = false;
    std::string panel = "a";
    double theta = 0.0;
    double p1 = 0.5, p2 = 0.5, pu = 0.5;
    std::set<std::string> used;
};

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ScmError("invalid override " + key + "=" + v + ": not a number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ScmError("invalid override " + key + "=" + v + ": expected on/off");
}

Params parse_common(const Overrides& o) {
    Params p;
    for (const auto& [k, v] : o) {
        if (k == "suspect") {
            p.suspect = parse_bool(k, v);
        } else if (k == "suspect_coef") {
            p.s = parse_double(k, v);
        } else if (k == "discrete") {
            p.discrete = parse_bool(k, v);
        } else {
            continue;
        }
        p.used.insert(k);
    }
    return p;
}

// Collects nodes with roles; graph edges follow from equation inputs.
class Builder {
public:
    Builder& exo(const std::string& name, Distribution d, Role role = Role::latent) {
        nodes_.push_back({name, std::move(d)});
        roles_.push_back(role);
        return *this;
    }
    Builder& eq(const std::string& name, std::vector<Term> terms, double noise_sd = 1.0, Role role = Role::other) {
        Equation e;
        e.terms = std::move(terms);
        if (noise_sd > 0) e.noise = Distribution::gaussian(0.0, noise_sd);
        nodes_.push_back({name, std::move(e)});
        roles_.push_back(role);
        return *this;
    }
    // Z, X, Y and W in the shared IV skeleton; extra terms for Z and Y.
    Builder& core_x(std::vector<Term> x_extra = {}) {
        std::vector<Term> x{Term::linear("Z", 1.0), Term::linear("W", 1.0)};
        x.insert(x.end(), x_extra.begin(), x_extra.end());
        return eq("X", x, 1.0, Role::treatment);
    }
    Builder& core_y(std::vector<Term> y_extra = {}) {
        std::vector<Term> y{Term::linear("X", 1.0), Term::linear("W", 1.0)};
        y.insert(y.end(), y_extra.begin(), y_extra.end());
        return eq("Y", y, 1.0, Role::outcome);
    }
    std::vector<NodeSpec> nodes_;
    std::vector<Role> roles_;
};

Term lin(const std::string& v, double c) { return Term::linear(v, c); }
Term sus(const std::string& v, double c) { return Term::linear(v, c, true); }

Term make(TermKind k, std::vector<std::string> vars, double coef = 1.0) {
    Term t;
    t.kind = k;
    t.vars = std::move(vars);
    t.coef = coef;
    return t;
}

Distribution N01() { return Distribution::gaussian(0.0, 1.0); }

struct Built {
    Builder b;
    std::string description;
    std::vector<std::string> tags;
};

using Maker = std::function<Built(Params&, const Overrides&)>;

struct Entry {
    const char* name;
    const char* description;
    Maker make;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> list = {
        {"fig1a", "APO variable U1 confounds Z and Y (outcome independence); NCO NC1",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U1", N01());
             r.b.eq("Z", {sus("U1", p.s)}, 1.0, Role::iv).core_x().core_y({lin("U1", 1.0)});
             r.b.eq("NC1", {lin("U1", 1.0)}, 0.5, Role::candidate);
             return r;
         }},
        {"fig1b", "APO variable U2 on a Z -> U2 -> Y path (exclusion restriction); NCO NC2",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv);
             r.b.eq("U2", {sus("Z", p.s)}, 1.0, Role::latent).core_x().core_y({lin("U2", 1.0)});
             r.b.eq("NC2", {lin("U2", 1.0)}, 0.5, Role::candidate);
             return r;
         }},
        {"fig1c", "API variable U3 causes Z and possibly Y (outcome independence); NCI NC3",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U3", N01());
             r.b.eq("Z", {lin("U3", 1.0)}, 1.0, Role::iv).core_x().core_y({sus("U3", p.s)});
             r.b.eq("NC3", {lin("U3", 1.0)}, 0.5, Role::candidate);
             return r;
         }},
        {"fig1d", "API variable U4 caused by Z possibly affects Y (exclusion restriction); NCI NC4",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv);
             r.b.eq("U4", {lin("Z", 1.0)}, 1.0, Role::latent).core_x().core_y({sus("U4", p.s)});
             r.b.eq("NC4", {lin("U4", 1.0)}, 0.5, Role::candidate);
             return r;
         }},
        {"fig2a", "NCI affecting the API variable; unconditional NCI test applies",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv).exo("NC", N01(), Role::candidate);
             r.b.eq("U", {lin("Z", 1.0), lin("NC", 1.0)}, 1.0, Role::latent).core_x().core_y({sus("U", p.s)});
             return r;
         }},
        {"fig2b", "NCI causally affecting the IV",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("NC", N01(), Role::candidate).exo("U", N01());
             r.b.eq("Z", {lin("NC", 1.0), lin("U", 1.0)}, 1.0, Role::iv).core_x().core_y({sus("U", p.s)});
             return r;
         }},
        {"d1", "non-causal APO variable: NC is an NCO for U2 but not for U1",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U1", N01());
             r.b.eq("U2", {lin("U1", 1.0)}, 1.0, Role::latent);
             r.b.eq("Z", {sus("U2", p.s)}, 1.0, Role::iv).core_x().core_y({lin("U1", 1.0)});
             r.b.eq("NC", {lin("U2", 1.0)}, 0.5, Role::candidate);
             return r;
         }},
        {"d2", "heterogeneity: Z affects U only in group 1, U affects Y only in group 0",
         [](Params&, const Overrides&) {
             Built r;
             Term zu = make(TermKind::subgroup_switch, {"G", "Z"});
             zu.level = 1.0;
             Term uy = make(TermKind::subgroup_switch, {"G", "U"});
             uy.level = 0.0;
             r.b.exo("W", N01()).exo("G", Distribution::bernoulli(0.5)).exo("Z", N01(), Role::iv);
             r.b.eq("U", {zu}, 1.0, Role::latent).core_x().core_y({uy});
             r.b.eq("N", {lin("U", 1.0)}, 0.5, Role::candidate);
             r.tags.push_back("unfaithful");
             return r;
         }},
        {"d3", "multivariate U = (U1, U2): the proxy tracks U1 while U2 threatens Y",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U1", N01()).exo("U2", N01());
             r.b.eq("Z", {lin("U1", 1.0)}, 1.0, Role::iv).core_x().core_y({sus("U2", p.s)});
             r.b.eq("N", {lin("U1", 1.0)}, 0.5, Role::candidate);
             r.tags.push_back("unfaithful");
             return r;
         }},
        {"d4", "alternative path variable also affecting the treatment (panel=a: APO, panel=b: API)",
         [](Params& p, const Overrides& o) {
             Built r;
             if (auto it = o.find("panel"); it != o.end()) {
                 if (it->second != "a" && it->second != "b")
                     throw ScmError("invalid override panel=" + it->second + ": expected a or b");
                 p.panel = it->second;
                 p.used.insert("panel");
             }
             r.b.exo("W", N01()).exo("U", N01());
             if (p.panel == "a") {
                 r.b.eq("Z", {sus("U", p.s)}, 1.0, Role::iv).core_x({lin("U", 1.0)}).core_y({lin("U", 1.0)});
                 r.b.eq("NC", {lin("U", 1.0)}, 0.5, Role::candidate);
             } else {
                 r.b.eq("Z", {lin("U", 1.0)}, 1.0, Role::iv).core_x({lin("U", 1.0)}).core_y({sus("U", p.s)});
                 r.b.eq("N", {lin("U", 1.0)}, 0.5, Role::candidate);
             }
             return r;
         }},
        {"d5", "XOR counterexample: NC1 and NC2 are NCOs, the pair is not",
         [](Params& p, const Overrides& o) {
             Built r;
             for (const char* key : {"theta", "p1", "p2", "pu"})
                 if (auto it = o.find(key); it != o.end()) {
                     const double v = parse_double(key, it->second);
                     if (std::string(key) == "theta") p.theta = v;
                     else if (std::string(key) == "p1") p.p1 = v;
                     else if (std::string(key) == "p2") p.p2 = v;
                     else p.pu = v;
                     p.used.insert(key);
                 }
             // theta is the suspect coefficient here
             if (p.used.count("theta")) {
                 p.suspect = p.theta != 0.0;
                 p.s = p.theta;
             }
             r.b.exo("R1", Distribution::bernoulli(p.p1)).exo("R2", Distribution::bernoulli(p.p2));
             r.b.exo("U", Distribution::bernoulli(p.pu));
             r.b.eq("Z", {make(TermKind::xor_, {"R1", "R2"}), sus("U", p.s)}, p.discrete ? 0.0 : 1.0, Role::iv);
             r.b.eq("NC1", {make(TermKind::xor_, {"U", "R1"})}, 0.0, Role::candidate);
             r.b.eq("NC2", {make(TermKind::xor_, {"U", "R2"})}, 0.0, Role::candidate);
             r.tags.push_back("unfaithful");
             return r;
         }},
        {"d6", "multiple threats U and V",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U", N01()).exo("V", N01());
             r.b.eq("Z", {sus("U", p.s), sus("V", p.s)}, 1.0, Role::iv).core_x().core_y(
                 {lin("U", 1.0), lin("V", 1.0)});
             return r;
         }},
        {"d7", "U1 is a proxy of the actual threat V (direct IV link fails)",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U1", N01());
             r.b.eq("V", {lin("U1", 1.0)}, 1.0, Role::latent);
             r.b.eq("U2", {lin("V", 1.0)}, 1.0, Role::latent);
             r.b.eq("Z", {sus("V", p.s)}, 1.0, Role::iv).core_x().core_y({lin("V", 1.0)});
             return r;
         }},
        {"d8", "U affects the threat V; conditioning on V opens Z -> V <- U (path indication fails)",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv).exo("U", N01());
             r.b.eq("V", {sus("Z", p.s), lin("U", 1.0)}, 1.0, Role::latent).core_x().core_y({lin("V", 1.0)});
             return r;
         }},
        {"d9", "V is a collider of U and Y (V-validity fails)",
         [](Params&, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U", N01());
             r.b.eq("Z", {lin("U", 1.0)}, 1.0, Role::iv).core_x().core_y();
             r.b.eq("V", {lin("U", 1.0), lin("Y", 1.0)}, 1.0, Role::latent);
             return r;
         }},
        {"d10", "NCO that may affect the IV when the design is invalid",
         [](Params& p, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("U", N01());
             r.b.eq("NC", {lin("U", 1.0)}, 0.5, Role::candidate);
             r.b.eq("Z", {sus("U", p.s), sus("NC", p.s)}, 1.0, Role::iv).core_x().core_y({lin("U", 1.0)});
             return r;
         }},
        {"csrf", "valid randomized IV with a quadratic first stage; NC = Z^2 + noise is a valid NCI",
         [](Params&, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv).exo("C", N01(), Role::control);
             r.b.core_x({make(TermKind::square, {"Z"})}).core_y({lin("C", 1.0)});
             r.b.eq("NC", {make(TermKind::square, {"Z"})}, 1.0, Role::candidate);
             return r;
         }},
        {"csrf-interaction", "valid randomized IV whose first stage has a Z x C interaction",
         [](Params&, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("Z", N01(), Role::iv).exo("C", N01(), Role::control);
             r.b.core_x({make(TermKind::product, {"Z", "C"})}).core_y({lin("C", 1.0)});
             r.b.eq("NC", {make(TermKind::product, {"Z", "C"})}, 1.0, Role::candidate);
             return r;
         }},
        {"quad-nco", "IV depends on NC^2 only: invisible to linear NCO tests",
         [](Params&, const Overrides&) {
             Built r;
             r.b.exo("W", N01()).exo("C", N01(), Role::control).exo("NC", N01(), Role::candidate);
             r.b.eq("Z", {lin("C", 1.0), make(TermKind::square, {"NC"})}, 1.0, Role::iv);
             r.b.core_x().core_y({lin("C", 1.0)});
             return r;
         }},
    };
    return list;
}

// Term coefficients and distribution parameters named in the overrides.
void apply_overrides(std::vector<NodeSpec>& nodes, const Overrides& o, Params& p) {
    auto node_named = [&](const std::string& key, const std::string& name) -> NodeSpec& {
        for (auto& n : nodes)
            if (n.name == name) return n;
        throw ScmError("invalid override " + key + ": unknown node '" + name + "'");
    };
    for (const auto& [k, v] : o) {
        if (p.used.count(k)) continue;
        if (auto arrow = k.find("->"); arrow != std::string::npos) {
            const std::string from = k.substr(0, arrow), to = k.substr(arrow + 2);
            NodeSpec& n = node_named(k, to);
            auto* eq = std::get_if<Equation>(&n.def);
            bool found = false;
            if (eq)
                for (Term& t : eq->terms)
                    if (t.kind == TermKind::linear && t.vars[0] == from) {
                        t.coef = parse_double(k, v);
                        found = true;
                    }
            if (!found) throw ScmError("invalid override " + k + ": no linear term " + from + " -> " + to);
        } else if (k.rfind("p_", 0) == 0) {
            NodeSpec& n = node_named(k, k.substr(2));
            const double q = parse_double(k, v);
            Distribution* d = std::get_if<Distribution>(&n.def);
            if (!d)
                if (auto* eq = std::get_if<Equation>(&n.def); eq && eq->noise) d = &*eq->noise;
            if (!d) throw ScmError("invalid override " + k + ": node has no distribution");
            if (d->kind == Distribution::Kind::bernoulli) {
                d->p = q;
            } else if (d->kind == Distribution::Kind::discrete && d->support.size() == 2) {
                d->probs = {1.0 - q, q};
            } else {
                throw ScmError("invalid override " + k + ": not a two-point distribution");
            }
        } else if (k.rfind("sd_", 0) == 0) {
            NodeSpec& n = node_named(k, k.substr(3));
            const double sd = parse_double(k, v);
            Distribution* d = std::get_if<Distribution>(&n.def);
            if (!d)
                if (auto* eq = std::get_if<Equation>(&n.def); eq && eq->noise) d = &*eq->noise;
            if (!d || d->kind != Distribution::Kind::gaussian)
                throw ScmError("invalid override " + k + ": node has no gaussian distribution");
            d->sd = sd;
        } else {
            throw ScmError("invalid override '" + k + "'");
        }
    }
}

// Gaussian and uniform draws become two equally likely points with the
// same mean and spread.
void discretize(Distribution& d) {
    if (d.kind == Distribution::Kind::gaussian) {
        d = d.sd == 0.0 ? Distribution::discrete({d.mean}, {1.0})
                        : Distribution::discrete({d.mean - d.sd, d.mean + d.sd}, {0.5, 0.5});
    } else if (d.kind == Distribution::Kind::uniform) {
        d = Distribution::discrete({d.a, d.b}, {0.5, 0.5});
    }
}

Scenario assemble(const std::string& name, const std::string& description, std::vector<NodeSpec> nodes,
                  const std::vector<Role>& roles, std::vector<std::string> tags, const Params& p) {
    if (p.discrete)
        for (auto& n : nodes) {
            if (auto* d = std::get_if<Distribution>(&n.def)) discretize(*d);
            if (auto* eq = std::get_if<Equation>(&n.def); eq && eq->noise) discretize(*eq->noise);
        }
    graph::DagBuilder gb;
    for (std::size_t i = 0; i < nodes.size(); ++i) gb.node(nodes[i].name, roles[i]);
    for (const auto& n : nodes)
        if (const auto* eq = std::get_if<Equation>(&n.def)) {
            std::set<std::pair<std::string, bool>> edges;
            for (const Term& t : eq->terms)
                for (const auto& v : t.vars) edges.insert({v, t.suspect});
            std::set<std::string> done;
            for (const auto& [v, suspect] : edges) {
                if (done.count(v)) continue;
                // an input reached by both a suspect and a firm term is a firm edge
                const bool firm = edges.count({v, false}) > 0;
                gb.edge(v, n.name, !firm && suspect);
                done.insert(v);
            }
        }
    Scenario s;
    s.name = name;
    s.description = description;
    s.graph = gb.build();
    s.suspect_on = p.suspect;
    s.discrete = p.discrete;
    s.tags = std::move(tags);
    if (!p.suspect)
        for (auto& n : nodes)
            if (auto* eq = std::get_if<Equation>(&n.def))
                eq->terms.erase(std::remove_if(eq->terms.begin(), eq->terms.end(),
                                               [](const Term& t) { return t.suspect; }),
                                eq->terms.end());
    ScmSpec spec(std::move(nodes));
    for (std::size_t i = 0; i < roles.size(); ++i) {
        const std::string& nm = spec.node(i).name;
        switch (roles[i]) {
        case Role::iv: spec.iv = nm; break;
        case Role::treatment: spec.treatment = nm; break;
        case Role::outcome: spec.outcome = nm; break;
        case Role::control: spec.controls.push_back(nm); break;
        case Role::latent: spec.latents.push_back(nm); break;
        default: break;
        }
    }
    s.spec = std::move(spec);
    return s;
}

std::vector<std::filesystem::path> scenario_dirs() {
    std::vector<std::filesystem::path> out;
    const char* env = std::getenv("IVF_SCENARIO_PATH");
    if (!env) return out;
    std::stringstream ss(env);
    std::string part;
    while (std::getline(ss, part, ':'))
        if (!part.empty()) out.emplace_back(part);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

bool Scenario::has_tag(const std::string& tag) const {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

graph::Dag Scenario::realized_graph() const {
    std::vector<bool> keep(graph.edges().size(), true);
    if (!suspect_on)
        for (std::size_t i : graph.suspect_edges()) keep[i] = false;
    return graph.with_edges(keep);
}

std::vector<std::string> Scenario::observed() const {
    std::vector<std::string> out;
    for (const auto& n : spec.nodes())
        if (std::find(spec.latents.begin(), spec.latents.end(), n.name) == spec.latents.end())
            out.push_back(n.name);
    return out;
}

std::vector<CatalogEntry> catalog() {
    std::vector<CatalogEntry> out;
    for (const auto& e : entries()) out.push_back({e.name, e.description, true});
    std::set<std::string> seen;
    for (const auto& e : out) seen.insert(e.name);
    for (const auto& dir : scenario_dirs()) {
        std::error_code ec;
        if (!std::filesystem::is_directory(dir, ec)) continue;
        std::vector<std::filesystem::path> files;
        for (const auto& f : std::filesystem::directory_iterator(dir, ec))
            if (f.path().extension() == ".json") files.push_back(f.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string name = f.stem().string();
            if (!seen.insert(name).second) continue;
            std::string description;
            try {
                auto j = nlohmann::json::parse(read_file(f));
                description = j.value("description", "");
            } catch (const std::exception&) {
                description = "(unreadable)";
            }
            out.push_back({name, description, false});
        }
    }
    return out;
}

Scenario scenario(const std::string& name, const Overrides& overrides) {
    for (const auto& e : entries()) {
        if (name != e.name) continue;
        Params p = parse_common(overrides);
        Built b = e.make(p, overrides);
        apply_overrides(b.b.nodes_, overrides, p);
        return assemble(e.name, e.description, std::move(b.b.nodes_), b.b.roles_, std::move(b.tags), p);
    }
    for (const auto& dir : scenario_dirs()) {
        const auto path = dir / (name + ".json");
        std::error_code ec;
        if (std::filesystem::is_regular_file(path, ec)) return scenario_from_json(name, read_file(path), overrides);
    }
    throw ScmError("unknown scenario '" + name + "'");
}

Scenario scenario_from_json(const std::string& name, const std::string& text, const Overrides& overrides) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ScmError("scenario '" + name + "': " + e.what());
    }
    if (!j.contains("graph") || !j.contains("scm")) throw ScmError("scenario '" + name + "' needs 'graph' and 'scm'");
    const graph::Dag g = graph::parse_graph(j.at("graph").get<std::string>());
    ScmSpec base = scm_from_json(j.at("scm"));
    Params p = parse_common(overrides);
    // user scenarios describe the threat as present; suspect terms follow the flag
    if (!overrides.count("suspect")) p.suspect = true;
    std::vector<NodeSpec> nodes = base.nodes();
    if (p.used.count("suspect_coef"))
        for (auto& n : nodes)
            if (auto* eq = std::get_if<Equation>(&n.def))
                for (Term& t : eq->terms)
                    if (t.suspect) t.coef = p.s;
    apply_overrides(nodes, overrides, p);
    std::vector<Role> roles;
    for (const auto& n : nodes) {
        auto id = g.find(n.name);
        if (!id) throw ScmError("scenario '" + name + "': node '" + n.name + "' missing from graph");
        roles.push_back(g.node(*id).role);
    }
    std::vector<std::string> tags;
    if (j.contains("tags")) tags = j.at("tags").get<std::vector<std::string>>();
    Scenario s = assemble(name, j.value("description", ""), std::move(nodes), roles, std::move(tags), p);
    // the declared graph is authoritative; it must cover the equations' edges
    for (const auto& e : s.graph.edges()) {
        auto a = g.find(s.graph.name(e.from)), b = g.find(s.graph.name(e.to));
        if (!a || !b || !g.has_edge(*a, *b))
            throw ScmError("scenario '" + name + "': equation edge " + s.graph.name(e.from) + " -> " +
                           s.graph.name(e.to) + " missing from graph");
    }
    s.graph = g;
    return s;
}

} // namespace ivf::scm
