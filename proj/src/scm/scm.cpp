#include "ivf/scm/scm.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <thread>
#include <unordered_map>

#include "ivf/error.hpp"
#include "ivf/scm/rng.hpp"

namespace ivf::scm {

Distribution Distribution::bernoulli(double p) {
    Distribution d;
    d.kind = Kind::bernoulli;
    d.p = p;
    return d;
}

Distribution Distribution::gaussian(double mean, double sd) {
    Distribution d;
    d.kind = Kind::gaussian;
    d.mean = mean;
    d.sd = sd;
    return d;
}

Distribution Distribution::uniform(double a, double b) {
    Distribution d;
    d.kind = Kind::uniform;
    d.a = a;
    d.b = b;
    return d;
}

Distribution Distribution::discrete(std::vector<double> support, std::vector<double> probs) {
    Distribution d;
    d.kind = Kind::discrete;
    d.support = std::move(support);
    d.probs = std::move(probs);
    return d;
}

std::vector<std::pair<double, double>> Distribution::atoms() const {
    switch (kind) {
    case Kind::bernoulli:
        return {{0.0, 1.0 - p}, {1.0, p}};
    case Kind::discrete: {
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < support.size(); ++i) out.emplace_back(support[i], probs[i]);
        return out;
    }
    default:
        throw ScmError("continuous distribution has no finite support");
    }
}

void Distribution::validate(const std::string& where) const {
    auto bad = [&](const std::string& msg) { throw ScmError(where + ": " + msg); };
    switch (kind) {
    case Kind::bernoulli:
        if (!(p >= 0.0 && p <= 1.0)) bad("bernoulli probability outside [0,1]");
        break;
    case Kind::gaussian:
        if (!(sd >= 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) bad("gaussian needs finite mean and sd >= 0");
        break;
    case Kind::uniform:
        if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b)) bad("uniform needs finite a <= b");
        break;
    case Kind::discrete: {
        if (support.empty() || support.size() != probs.size()) bad("discrete support and probs must match");
        double total = 0.0;
        for (double q : probs) {
            if (!(q >= 0.0 && q <= 1.0)) bad("discrete probability outside [0,1]");
            total += q;
        }
        if (std::abs(total - 1.0) > 1e-12) bad("discrete probabilities must sum to 1");
        break;
    }
    }
}

Term Term::linear(std::string v, double coef, bool suspect) {
    Term t;
    t.kind = TermKind::linear;
    t.vars = {std::move(v)};
    t.coef = coef;
    t.suspect = suspect;
    return t;
}

namespace {

std::size_t arity(TermKind k) {
    switch (k) {
    case TermKind::linear:
    case TermKind::square:
    case TermKind::threshold:
        return 1;
    default:
        return 2;
    }
}

double draw(const Distribution& d, Stream& s) {
    switch (d.kind) {
    case Distribution::Kind::bernoulli:
        return s.uniform() < d.p ? 1.0 : 0.0;
    case Distribution::Kind::gaussian:
        return d.mean + d.sd * s.normal();
    case Distribution::Kind::uniform:
        return d.a + (d.b - d.a) * s.uniform();
    case Distribution::Kind::discrete: {
        const double u = s.uniform();
        double cum = 0.0;
        for (std::size_t i = 0; i < d.probs.size(); ++i) {
            cum += d.probs[i];
            if (u < cum) return d.support[i];
        }
        return d.support.back();
    }
    }
    return 0.0;
}

double term_value(const Term& t, const std::vector<double>& in) {
    switch (t.kind) {
    case TermKind::linear:
        return t.coef * in[0];
    case TermKind::xor_:
        return t.coef * ((std::lround(in[0]) != 0) != (std::lround(in[1]) != 0) ? 1.0 : 0.0);
    case TermKind::product:
        return t.coef * in[0] * in[1];
    case TermKind::square:
        return t.coef * in[0] * in[0];
    case TermKind::threshold:
        return in[0] > t.cut ? t.coef : 0.0;
    case TermKind::subgroup_switch:
        return in[0] == t.level ? t.coef * in[1] : 0.0;
    }
    return 0.0;
}

} // namespace

ScmSpec::ScmSpec(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) { validate(); }

std::optional<std::size_t> ScmSpec::find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return i;
    return std::nullopt;
}

std::size_t ScmSpec::index(const std::string& name) const {
    auto i = find(name);
    if (!i) throw ScmError("unknown node '" + name + "'");
    return *i;
}

std::vector<std::size_t> ScmSpec::inputs(std::size_t i) const {
    std::vector<std::size_t> out;
    if (const auto* eq = std::get_if<Equation>(&nodes_.at(i).def))
        for (const Term& t : eq->terms)
            for (const auto& v : t.vars) out.push_back(index(v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void ScmSpec::set(std::size_t i, NodeSpec node) {
    nodes_.at(i) = std::move(node);
    validate();
}

bool ScmSpec::finite() const {
    for (const auto& n : nodes_) {
        if (const auto* d = std::get_if<Distribution>(&n.def); d && !d->finite()) return false;
        if (const auto* eq = std::get_if<Equation>(&n.def); eq && eq->noise && !eq->noise->finite()) return false;
    }
    return true;
}

void ScmSpec::validate() {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name.empty()) throw ScmError("empty node name");
        if (!seen.emplace(nodes_[i].name, i).second) throw ScmError("duplicate node '" + nodes_[i].name + "'");
    }
    const std::size_t n = nodes_.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = nodes_[i];
        if (const auto* d = std::get_if<Distribution>(&node.def)) d->validate(node.name);
        if (const auto* c = std::get_if<Constant>(&node.def); c && !std::isfinite(c->value))
            throw ScmError(node.name + ": constant must be finite");
        if (const auto* eq = std::get_if<Equation>(&node.def)) {
            if (eq->noise) eq->noise->validate(node.name + " noise");
            for (const Term& t : eq->terms) {
                if (t.vars.size() != arity(t.kind))
                    throw ScmError(node.name + ": term has " + std::to_string(t.vars.size()) + " inputs, expected " +
                                   std::to_string(arity(t.kind)));
                if (!std::isfinite(t.coef)) throw ScmError(node.name + ": non-finite coefficient");
                for (const auto& v : t.vars)
                    if (!seen.count(v)) throw ScmError(node.name + ": unknown input '" + v + "'");
            }
            for (std::size_t p : inputs(i)) {
                if (p == i) throw ScmError("cycle detected at '" + node.name + "'");
                children[p].push_back(i);
                ++indegree[i];
            }
        }
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    order_.clear();
    while (!ready.empty()) {
        std::size_t v = ready.top();
        ready.pop();
        order_.push_back(v);
        for (std::size_t c : children[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order_.size() != n) throw ScmError("cycle detected in structural equations");
    term_inputs_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
        if (const auto* eq = std::get_if<Equation>(&nodes_[i].def))
            for (const Term& t : eq->terms) {
                std::vector<std::size_t> idx;
                for (const auto& v : t.vars) idx.push_back(seen.at(v));
                term_inputs_[i].push_back(std::move(idx));
            }
    for (const auto* role : {&iv, &treatment, &outcome})
        if (!role->empty() && !seen.count(*role)) throw ScmError("role refers to unknown node '" + *role + "'");
}

std::vector<double> evaluate(const ScmSpec& spec, const std::vector<double>& exo) {
    std::vector<double> val(spec.size(), 0.0);
    std::vector<double> in;
    for (std::size_t i : spec.order()) {
        const auto& def = spec.node(i).def;
        if (std::holds_alternative<Distribution>(def)) {
            val[i] = exo[i];
        } else if (const auto* c = std::get_if<Constant>(&def)) {
            val[i] = c->value;
        } else {
            const auto& eq = std::get<Equation>(def);
            double v = eq.intercept;
            const auto& idx = spec.term_inputs(i);
            for (std::size_t j = 0; j < eq.terms.size(); ++j) {
                in.clear();
                for (std::size_t p : idx[j]) in.push_back(val[p]);
                v += term_value(eq.terms[j], in);
            }
            if (eq.noise) v += exo[i];
            val[i] = v;
        }
    }
    return val;
}

Dataset sample(const ScmSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads) {
    if (n == 0) throw ScmError("sample size must be at least 1");
    const std::size_t k = spec.size();
    std::vector<std::vector<double>> cols(k, std::vector<double>(n));
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> exo(k, 0.0);
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t i = 0; i < k; ++i) {
                const auto& def = spec.node(i).def;
                if (const auto* d = std::get_if<Distribution>(&def)) {
                    Stream s(seed, r, static_cast<std::uint32_t>(i), 0);
                    exo[i] = draw(*d, s);
                } else if (const auto* eq = std::get_if<Equation>(&def); eq && eq->noise) {
                    Stream s(seed, r, static_cast<std::uint32_t>(i), 1);
                    exo[i] = draw(*eq->noise, s);
                }
            }
            auto val = evaluate(spec, exo);
            for (std::size_t i = 0; i < k; ++i) cols[i][r] = val[i];
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2 * threads) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
        for (auto& t : pool) t.join();
    }
    Dataset out;
    for (std::size_t i = 0; i < k; ++i) out.add_column(spec.node(i).name, std::move(cols[i]));
    return out;
}

ScmSpec intervene(const ScmSpec& spec, const std::map<std::string, double>& assignments) {
    ScmSpec out = spec;
    for (const auto& [name, value] : assignments) out.set(out.index(name), NodeSpec{name, Constant{value}});
    return out;
}

} // namespace ivf::scm
