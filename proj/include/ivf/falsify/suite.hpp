#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivf/falsify/plan.hpp"
#include "ivf/falsify/report.hpp"
#include "ivf/graph/dag.hpp"
#include "ivf/scm/scenarios.hpp"
#include "json.hpp"

namespace ivf::falsify {

struct SuiteConfig {
    std::optional<std::string> graph_path;
    std::optional<std::string> dataset_path;
    std::optional<std::string> scenario;
    scm::Overrides overrides;
    std::size_t n = 2000;
    std::optional<std::uint64_t> seed; // required with a scenario
    std::size_t reps = 1;
    unsigned threads = 1;

    /// Unset z, y, x, controls and nc are taken from the graph roles.
    Roles roles;
    std::vector<TestName> tests;
    std::optional<regress::CovKind> vcov;
    double alpha = 0.05;
    GamSettings gam;
    std::vector<int> reset_powers{2, 3};
    ResetTarget reset_target = ResetTarget::iv;
    bool force_unconditional = false;
    bool qualify = true;          // graph gating when a graph is available
    bool override_gating = false; // run tests the graph does not qualify
    bool diagnostics = true;

    /// Throws PlanError: exactly one data source, seed for scenarios, tests
    /// present, reps >= 1.
    void validate() const;
};

/// Keys mirror the field names; "tests" holds test names, "vcov" a kind.
SuiteConfig suite_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const SuiteConfig& c);

/// Role map completed from graph roles: iv, outcome, treatment, control and
/// candidate nodes fill whichever fields the config leaves empty.
Roles complete_roles(const Roles& given, const graph::Dag& g);

/// Gating for one test and NC; nullopt when the NC qualifies.
std::optional<Refusal> qualify_nc(const graph::Dag& g, TestName test, const std::string& nc);

/// Data, graph and completed roles for a configuration. A scenario is
/// sampled with seed derive_seed(seed, 0); a graph file replaces the
/// scenario graph.
struct Prepared {
    scm::Dataset data;
    std::optional<graph::Dag> graph;
    std::optional<scm::Scenario> scenario;
    Roles roles;
};
Prepared prepare(const SuiteConfig& config);

/// Plan for one test with the configuration's settings.
TestPlan plan_for(const SuiteConfig& config, const Roles& roles, TestName test);

/// Gating, tests in config order, diagnostics. Data errors in a test are
/// recorded in its entry; configuration errors throw.
Report run_suite(const SuiteConfig& config);

} // namespace ivf::falsify
