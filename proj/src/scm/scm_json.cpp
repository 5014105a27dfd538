#include "ivf/scm/scm_json.hpp"

#include "ivf/error.hpp"

namespace ivf::scm {

namespace {

constexpr std::pair<TermKind, const char*> kTermNames[] = {
    {TermKind::linear, "linear"},       {TermKind::xor_, "xor"},
    {TermKind::product, "product"},     {TermKind::square, "square"},
    {TermKind::threshold, "threshold"}, {TermKind::subgroup_switch, "subgroup_switch"},
};

TermKind parse_term_kind(const std::string& s) {
    for (const auto& [k, name] : kTermNames)
        if (s == name) return k;
    throw ScmError("unknown term kind '" + s + "'");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ScmError(std::string("bad value for '") + key + "'");
    }
}

} // namespace

std::string to_string(TermKind kind) {
    for (const auto& [k, name] : kTermNames)
        if (k == kind) return name;
    return "linear";
}

nlohmann::ordered_json to_json(const Distribution& d) {
    nlohmann::ordered_json j;
    switch (d.kind) {
    case Distribution::Kind::bernoulli:
        j["kind"] = "bernoulli";
        j["p"] = d.p;
        break;
    case Distribution::Kind::gaussian:
        j["kind"] = "gaussian";
        j["mean"] = d.mean;
        j["sd"] = d.sd;
        break;
    case Distribution::Kind::uniform:
        j["kind"] = "uniform";
        j["a"] = d.a;
        j["b"] = d.b;
        break;
    case Distribution::Kind::discrete:
        j["kind"] = "discrete";
        j["support"] = d.support;
        j["probs"] = d.probs;
        break;
    }
    return j;
}

Distribution distribution_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ScmError("distribution must be an object");
    const std::string kind = get_or<std::string>(j, "kind", "");
    if (kind == "bernoulli") return Distribution::bernoulli(get_or(j, "p", 0.5));
    if (kind == "gaussian") return Distribution::gaussian(get_or(j, "mean", 0.0), get_or(j, "sd", 1.0));
    if (kind == "uniform") return Distribution::uniform(get_or(j, "a", 0.0), get_or(j, "b", 1.0));
    if (kind == "discrete")
        return Distribution::discrete(get_or(j, "support", std::vector<double>{}),
                                      get_or(j, "probs", std::vector<double>{}));
    throw ScmError("unknown distribution kind '" + kind + "'");
}

nlohmann::ordered_json to_json(const ScmSpec& spec) {
    nlohmann::ordered_json j;
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : spec.nodes()) {
        nlohmann::ordered_json e;
        e["name"] = n.name;
        if (const auto* d = std::get_if<Distribution>(&n.def)) {
            e["dist"] = to_json(*d);
        } else if (const auto* c = std::get_if<Constant>(&n.def)) {
            e["constant"] = c->value;
        } else {
            const auto& eq = std::get<Equation>(n.def);
            nlohmann::ordered_json q;
            q["intercept"] = eq.intercept;
            auto terms = nlohmann::ordered_json::array();
            for (const Term& t : eq.terms) {
                nlohmann::ordered_json tj;
                tj["kind"] = to_string(t.kind);
                tj["vars"] = t.vars;
                tj["coef"] = t.coef;
                if (t.kind == TermKind::threshold) tj["cut"] = t.cut;
                if (t.kind == TermKind::subgroup_switch) tj["level"] = t.level;
                if (t.suspect) tj["suspect"] = true;
                terms.push_back(std::move(tj));
            }
            q["terms"] = std::move(terms);
            if (eq.noise) q["noise"] = to_json(*eq.noise);
            e["equation"] = std::move(q);
        }
        nodes.push_back(std::move(e));
    }
    j["nodes"] = std::move(nodes);
    nlohmann::ordered_json roles;
    roles["iv"] = spec.iv;
    roles["treatment"] = spec.treatment;
    roles["outcome"] = spec.outcome;
    roles["controls"] = spec.controls;
    j["roles"] = std::move(roles);
    j["latents"] = spec.latents;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : spec.params) params[k] = v;
    j["params"] = std::move(params);
    return j;
}

ScmSpec scm_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array())
        throw ScmError("scm description needs a 'nodes' array");
    std::vector<NodeSpec> nodes;
    for (const auto& e : j.at("nodes")) {
        NodeSpec n;
        n.name = get_or<std::string>(e, "name", "");
        const int kinds = e.contains("dist") + e.contains("equation") + e.contains("constant");
        if (kinds != 1) throw ScmError("node '" + n.name + "' needs exactly one of dist, equation, constant");
        if (e.contains("dist")) {
            n.def = distribution_from_json(e.at("dist"));
        } else if (e.contains("constant")) {
            n.def = Constant{get_or(e, "constant", 0.0)};
        } else {
            const auto& q = e.at("equation");
            Equation eq;
            eq.intercept = get_or(q, "intercept", 0.0);
            if (q.contains("terms"))
                for (const auto& tj : q.at("terms")) {
                    Term t;
                    t.kind = parse_term_kind(get_or<std::string>(tj, "kind", "linear"));
                    t.vars = get_or(tj, "vars", std::vector<std::string>{});
                    t.coef = get_or(tj, "coef", 1.0);
                    t.cut = get_or(tj, "cut", 0.0);
                    t.level = get_or(tj, "level", 1.0);
                    t.suspect = get_or(tj, "suspect", false);
                    eq.terms.push_back(std::move(t));
                }
            if (q.contains("noise") && !q.at("noise").is_null()) eq.noise = distribution_from_json(q.at("noise"));
            n.def = std::move(eq);
        }
        nodes.push_back(std::move(n));
    }
    ScmSpec spec(std::move(nodes));
    if (j.contains("roles")) {
        const auto& r = j.at("roles");
        spec.iv = get_or<std::string>(r, "iv", "");
        spec.treatment = get_or<std::string>(r, "treatment", "");
        spec.outcome = get_or<std::string>(r, "outcome", "");
        spec.controls = get_or(r, "controls", std::vector<std::string>{});
        for (const auto* name : {&spec.iv, &spec.treatment, &spec.outcome})
            if (!name->empty()) spec.index(*name);
        for (const auto& c : spec.controls) spec.index(c);
    }
    spec.latents = get_or(j, "latents", std::vector<std::string>{});
    for (const auto& l : spec.latents) spec.index(l);
    if (j.contains("params"))
        for (const auto& [k, v] : j.at("params").items()) spec.params[k] = v.get<double>();
    return spec;
}

} // namespace ivf::scm
