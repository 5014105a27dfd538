#include "ivf/scm/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ivf/error.hpp"

namespace ivf::scm {

namespace {

// Values equal in exact arithmetic can differ in the last bits after
// floating-point evaluation; cells are keyed on a 1e-9 grid.
double snap(double v) {
    const double r = std::round(v * 1e9) / 1e9;
    return r == 0.0 ? 0.0 : r;
}

std::vector<std::size_t> positions(const JointPmf& pmf, const std::vector<std::string>& vars) {
    std::vector<std::size_t> out;
    for (const auto& v : vars) out.push_back(pmf.index(v));
    return out;
}

std::vector<double> project(const std::vector<double>& key, const std::vector<std::size_t>& pos) {
    std::vector<double> out;
    out.reserve(pos.size());
    for (std::size_t p : pos) out.push_back(key[p]);
    return out;
}

} // namespace

Rational exact(double v) {
    if (!std::isfinite(v)) throw ScmError("non-finite probability");
    int exp = 0;
    double m = std::frexp(v, &exp);
    // 53-bit integer mantissa
    const auto mant = static_cast<long long>(std::ldexp(m, 53));
    exp -= 53;
    Rational r = mant;
    if (exp >= 0) {
        r *= Rational(boost::multiprecision::cpp_int(1) << exp);
    } else {
        r /= Rational(boost::multiprecision::cpp_int(1) << -exp);
    }
    return r;
}

JointPmf::JointPmf(std::vector<std::string> vars, Table table) : vars_(std::move(vars)), table_(std::move(table)) {
    std::set<std::string> seen(vars_.begin(), vars_.end());
    if (seen.size() != vars_.size()) throw ScmError("duplicate variable in pmf");
    for (const auto& [k, p] : table_) {
        if (k.size() != vars_.size()) throw ScmError("pmf tuple has wrong arity");
        if (p < 0) throw ScmError("negative probability");
    }
}

std::size_t JointPmf::index(const std::string& var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) throw ScmError("unknown variable '" + var + "'");
    return static_cast<std::size_t>(it - vars_.begin());
}

JointPmf JointPmf::marginal(const std::vector<std::string>& vars) const {
    const auto pos = positions(*this, vars);
    Table out;
    for (const auto& [k, p] : table_) out[project(k, pos)] += p;
    return JointPmf(vars, std::move(out));
}

Rational JointPmf::probability(const std::map<std::string, double>& assignment) const {
    std::vector<std::pair<std::size_t, double>> want;
    for (const auto& [name, v] : assignment) want.emplace_back(index(name), snap(v));
    Rational total = 0;
    for (const auto& [k, p] : table_) {
        bool match = true;
        for (const auto& [i, v] : want)
            if (k[i] != v) match = false;
        if (match) total += p;
    }
    return total;
}

Rational JointPmf::total() const {
    Rational t = 0;
    for (const auto& [k, p] : table_) t += p;
    return t;
}

namespace detail {

std::vector<ExoSlot> exo_slots(const ScmSpec& spec, std::size_t cap) {
    std::vector<ExoSlot> slots;
    double count = 1.0;
    auto add = [&](std::size_t node, const Distribution& d, const std::string& what) {
        if (!d.finite()) throw ScmError("continuous " + what + " '" + spec.node(node).name + "' has no exact joint");
        ExoSlot s{node, {}, {}};
        if (d.kind == Distribution::Kind::bernoulli) {
            s.values = {0.0, 1.0};
            const Rational p = exact(d.p);
            s.probs = {Rational(1) - p, p};
        } else {
            Rational total = 0;
            for (std::size_t i = 0; i < d.support.size(); ++i) {
                s.values.push_back(d.support[i]);
                s.probs.push_back(exact(d.probs[i]));
                total += s.probs.back();
            }
            for (auto& p : s.probs) p /= total;
        }
        count *= static_cast<double>(s.values.size());
        if (count > static_cast<double>(cap))
            throw ScmError("exogenous state space exceeds the cap of " + std::to_string(cap) + " states");
        slots.push_back(std::move(s));
    };
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto& def = spec.node(i).def;
        if (const auto* d = std::get_if<Distribution>(&def)) add(i, *d, "node");
        else if (const auto* eq = std::get_if<Equation>(&def); eq && eq->noise) add(i, *eq->noise, "noise of");
    }
    return slots;
}

} // namespace detail

JointPmf exact_joint(const ScmSpec& spec, std::size_t cap) {
    std::vector<std::string> names;
    for (const auto& n : spec.nodes()) names.push_back(n.name);
    JointPmf::Table table;
    for_each_state(spec, cap, [&](const std::vector<double>& exo, const Rational& p) {
        auto val = evaluate(spec, exo);
        for (double& v : val) v = snap(v);
        table[val] += p;
    });
    return JointPmf(std::move(names), std::move(table));
}

bool ci_oracle(const JointPmf& pmf, const std::vector<std::string>& a, const std::vector<std::string>& b,
               const std::vector<std::string>& cond) {
    std::set<std::string> seen;
    for (const auto* set : {&a, &b, &cond})
        for (const auto& v : *set) {
            pmf.index(v);
            if (!seen.insert(v).second) throw ScmError("variable sets overlap at '" + v + "'");
        }
    if (a.empty() || b.empty()) return true;
    std::vector<std::string> all = a;
    all.insert(all.end(), b.begin(), b.end());
    all.insert(all.end(), cond.begin(), cond.end());
    const JointPmf m = pmf.marginal(all);
    const std::size_t na = a.size(), nb = b.size();
    // cell -> (a-values -> P(a,c)), (b-values -> P(b,c)), P(c)
    struct Cell {
        std::map<std::vector<double>, Rational> pa, pb;
        Rational pc = 0;
    };
    std::map<std::vector<double>, Cell> cells;
    for (const auto& [k, p] : m.table()) {
        std::vector<double> ka(k.begin(), k.begin() + na);
        std::vector<double> kb(k.begin() + na, k.begin() + na + nb);
        std::vector<double> kc(k.begin() + na + nb, k.end());
        Cell& c = cells[kc];
        c.pa[ka] += p;
        c.pb[kb] += p;
        c.pc += p;
    }
    for (const auto& [kc, c] : cells) {
        if (c.pc == 0) continue;
        for (const auto& [ka, pa] : c.pa)
            for (const auto& [kb, pb] : c.pb) {
                std::vector<double> key = ka;
                key.insert(key.end(), kb.begin(), kb.end());
                key.insert(key.end(), kc.begin(), kc.end());
                auto it = m.table().find(key);
                const Rational pabc = it == m.table().end() ? Rational(0) : it->second;
                if (pabc * c.pc != pa * pb) return false;
            }
    }
    return true;
}

bool po_independence_oracle(const ScmSpec& spec, const std::vector<std::string>& cond, std::size_t cap) {
    if (spec.iv.empty() || spec.treatment.empty() || spec.outcome.empty())
        throw ScmError("potential-outcome oracle needs iv, treatment and outcome roles");
    const std::size_t zi = spec.index(spec.iv), xi = spec.index(spec.treatment), yi = spec.index(spec.outcome);
    std::vector<std::size_t> ci;
    for (const auto& c : cond) ci.push_back(spec.index(c));

    std::set<double> xs;
    for_each_state(spec, cap, [&](const std::vector<double>& exo, const Rational&) {
        xs.insert(snap(evaluate(spec, exo)[xi]));
    });
    std::vector<ScmSpec> worlds;
    for (double x : xs) worlds.push_back(intervene(spec, {{spec.treatment, x}}));

    std::vector<JointPmf::Table> tables(worlds.size());
    for_each_state(spec, cap, [&](const std::vector<double>& exo, const Rational& p) {
        const auto obs = evaluate(spec, exo);
        std::vector<double> key{snap(obs[zi])};
        for (std::size_t c : ci) key.push_back(snap(obs[c]));
        key.push_back(0.0);
        for (std::size_t w = 0; w < worlds.size(); ++w) {
            key.back() = snap(evaluate(worlds[w], exo)[yi]);
            tables[w][key] += p;
        }
    });
    std::vector<std::string> names{"__z"};
    for (std::size_t i = 0; i < cond.size(); ++i) names.push_back("__c" + std::to_string(i));
    names.push_back("__y");
    std::vector<std::string> cnames(names.begin() + 1, names.end() - 1);
    for (auto& t : tables)
        if (!ci_oracle(JointPmf(names, std::move(t)), {"__z"}, {"__y"}, cnames)) return false;
    return true;
}

} // namespace ivf::scm
