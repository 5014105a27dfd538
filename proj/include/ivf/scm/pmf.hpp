#pragma once

#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ivf/scm/scm.hpp"

namespace ivf::scm {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a double (every finite double is a dyadic rational).
Rational exact(double v);

inline constexpr std::size_t kDefaultStateCap = 10'000'000;

/// Joint probability mass function over named variables with exact
/// rational probabilities.
class JointPmf {
public:
    using Table = std::map<std::vector<double>, Rational>;

    JointPmf(std::vector<std::string> vars, Table table);

    const std::vector<std::string>& vars() const { return vars_; }
    const Table& table() const { return table_; }
    std::size_t index(const std::string& var) const;

    JointPmf marginal(const std::vector<std::string>& vars) const;
    /// P(var_1 = v_1, ...) over any subset of the variables.
    Rational probability(const std::map<std::string, double>& assignment) const;
    Rational total() const;

private:
    std::vector<std::string> vars_;
    Table table_;
};

/// Calls fn(exo, probability) for every joint exogenous state; `exo` is
/// indexed like evaluate()'s argument. Throws ScmError for continuous
/// nodes or when the state count exceeds `cap`.
template <class Fn>
void for_each_state(const ScmSpec& spec, std::size_t cap, Fn&& fn);

JointPmf exact_joint(const ScmSpec& spec, std::size_t cap = kDefaultStateCap);

/// Exact check of a ⊥ b | cond: P(a,b,c)P(c) = P(a,c)P(b,c) in every cell.
bool ci_oracle(const JointPmf& pmf, const std::vector<std::string>& a, const std::vector<std::string>& b,
               const std::vector<std::string>& cond);

/// Z ⊥ Y(x) | cond for every x in the treatment's support, with Y(x) taken
/// from the intervened model on the same exogenous state as Z.
bool po_independence_oracle(const ScmSpec& spec, const std::vector<std::string>& cond,
                            std::size_t cap = kDefaultStateCap);

namespace detail {

struct ExoSlot {
    std::size_t node;
    std::vector<double> values;
    std::vector<Rational> probs;
};

std::vector<ExoSlot> exo_slots(const ScmSpec& spec, std::size_t cap);

} // namespace detail

template <class Fn>
void for_each_state(const ScmSpec& spec, std::size_t cap, Fn&& fn) {
    const auto slots = detail::exo_slots(spec, cap);
    std::vector<std::size_t> digit(slots.size(), 0);
    std::vector<double> exo(spec.size(), 0.0);
    for (;;) {
        Rational p = 1;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            exo[slots[s].node] = slots[s].values[digit[s]];
            p *= slots[s].probs[digit[s]];
        }
        if (p != 0) fn(static_cast<const std::vector<double>&>(exo), static_cast<const Rational&>(p));
        std::size_t s = 0;
        while (s < slots.size() && ++digit[s] == slots[s].values.size()) digit[s++] = 0;
        if (s == slots.size()) break;
    }
}

} // namespace ivf::scm
