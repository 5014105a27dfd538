#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ivf/scm/dataset.hpp"

namespace ivf::scm {

struct Distribution {
    enum class Kind { bernoulli, gaussian, uniform, discrete };
    Kind kind = Kind::gaussian;
    double p = 0.5;                           // bernoulli
    double mean = 0.0, sd = 1.0;              // gaussian
    double a = 0.0, b = 1.0;                  // uniform
    std::vector<double> support, probs;       // discrete

    static Distribution bernoulli(double p);
    static Distribution gaussian(double mean, double sd);
    static Distribution uniform(double a, double b);
    static Distribution discrete(std::vector<double> support, std::vector<double> probs);

    bool finite() const { return kind == Kind::bernoulli || kind == Kind::discrete; }
    /// Finite support as (value, probability) pairs; throws for continuous kinds.
    std::vector<std::pair<double, double>> atoms() const;
    void validate(const std::string& where) const;
};

enum class TermKind { linear, xor_, product, square, threshold, subgroup_switch };

/// One additive piece of a structural equation, scaled by `coef`:
///   linear         coef * a
///   xor            coef * (a != b), inputs read as 0/1 after rounding
///   product        coef * a * b
///   square         coef * a^2
///   threshold      coef * [a > cut]
///   subgroup_switch coef * b * [a == level]   (a is the group indicator)
struct Term {
    TermKind kind = TermKind::linear;
    std::vector<std::string> vars;
    double coef = 1.0;
    double cut = 0.0;
    double level = 1.0;
    bool suspect = false;

    static Term linear(std::string v, double coef, bool suspect = false);
};

struct Equation {
    double intercept = 0.0;
    std::vector<Term> terms;
    std::optional<Distribution> noise;
};

struct Constant {
    double value = 0.0;
};

struct NodeSpec {
    std::string name;
    std::variant<Distribution, Equation, Constant> def;
};

/// Structural causal model. Nodes may be given in any order; the
/// evaluation order is derived from equation inputs.
class ScmSpec {
public:
    ScmSpec() = default;
    explicit ScmSpec(std::vector<NodeSpec> nodes);

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const NodeSpec& node(std::size_t i) const { return nodes_.at(i); }
    std::size_t size() const { return nodes_.size(); }
    std::optional<std::size_t> find(const std::string& name) const;
    /// Throws ScmError for unknown names.
    std::size_t index(const std::string& name) const;
    const std::vector<std::size_t>& order() const { return order_; }
    std::vector<std::size_t> inputs(std::size_t i) const;
    /// Input node indices per term of node i's equation.
    const std::vector<std::vector<std::size_t>>& term_inputs(std::size_t i) const { return term_inputs_.at(i); }

    // Role bookkeeping used by the potential-outcome oracle and exports.
    std::string iv, treatment, outcome;
    std::vector<std::string> controls;
    std::vector<std::string> latents;
    std::map<std::string, double> params;

    /// Replaces node definitions; re-validates.
    void set(std::size_t i, NodeSpec node);

    /// Whether every node has finite support (exact enumeration possible).
    bool finite() const;

private:
    void validate();

    std::vector<NodeSpec> nodes_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::vector<std::size_t>>> term_inputs_;
};

/// Value of every node given the exogenous draws: exo[i] is the value of an
/// exogenous node i, or the noise value of equation node i.
std::vector<double> evaluate(const ScmSpec& spec, const std::vector<double>& exo);

/// n rows drawn in topological order. Row r of node i uses stream
/// (seed, r, i, 0) for exogenous draws and (seed, r, i, 1) for noise, so the
/// result is identical for every thread count.
Dataset sample(const ScmSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads = 1);

/// do-operator: listed nodes become constants.
ScmSpec intervene(const ScmSpec& spec, const std::map<std::string, double>& assignments);

} // namespace ivf::scm
