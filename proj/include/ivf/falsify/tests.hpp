#pragma once

#include <string>
#include <vector>

#include "ivf/falsify/plan.hpp"
#include "ivf/regress/inference.hpp"
#include "ivf/scm/dataset.hpp"

namespace ivf::falsify {

/// Functional-form assumption that a rejection cannot be separated from.
enum class Bundled { none, rich_covariates, csrf };
std::string to_string(Bundled b);

struct TestOutcome {
    TestName test = TestName::nco_single;
    std::string response;
    std::vector<std::string> regressors; // model actually fitted, intercept first
    regress::CovKind vcov = regress::CovKind::hc1;
    regress::TestResult result;
    std::vector<regress::TestResult> companions; // Bonferroni summary, pre-check
    bool reject = false;
    Bundled bundled = Bundled::none;
    std::string caveat; // what a rejection means
    std::vector<std::string> notes;
    bool routed = false; // unconditional NCI request answered by the conditional test
    bool forced = false; // unconditional NCI run despite a failed pre-check
};

/// NC ~ Z + C, t test on Z. Exactly one NC.
TestOutcome nco_test_single(const scm::Dataset& data, const TestPlan& plan);
/// Z ~ NC + C, Wald test on the NC block plus per-NC Bonferroni companion.
TestOutcome nco_test_joint(const scm::Dataset& data, const TestPlan& plan);
/// Y ~ Z + C + NC; the IV is always a regressor.
TestOutcome nci_test(const scm::Dataset& data, const TestPlan& plan);
/// Y ~ C + NC after a pre-check that NC is unrelated to Z given C; a failed
/// pre-check routes to nci_test unless plan.force_unconditional is set.
TestOutcome nci_test_unconditional(const scm::Dataset& data, const TestPlan& plan);
/// Additive model for Z with NC smooths against the model without them.
TestOutcome gam_nco_test(const scm::Dataset& data, const TestPlan& plan);
/// Additive model for Y (Z always present) with NC smooths against the model without them.
TestOutcome gam_nci_test(const scm::Dataset& data, const TestPlan& plan);
/// Fitted-value powers added to the regression of the RESET target.
TestOutcome reset_test(const scm::Dataset& data, const TestPlan& plan);

/// Validates the plan and dispatches on plan.test.
TestOutcome run_test(const scm::Dataset& data, const TestPlan& plan);

nlohmann::ordered_json to_json(const TestOutcome& o);

} // namespace ivf::falsify
