#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivf/regress/ols.hpp"
#include "ivf/scm/dataset.hpp"
#include "json.hpp"

namespace ivf::falsify {

enum class TestName { nco_single, nco_reverse_joint, nci_conditional, nci_unconditional, gam_nco, gam_nci, reset };

std::string to_string(TestName t);
/// Canonical names plus the short aliases nco, nco-joint and nci.
TestName test_name_from_string(const std::string& s);
const std::vector<TestName>& all_tests();

/// True for tests that probe the IV side (NC as an outcome).
bool is_nco_test(TestName t);
bool is_nci_test(TestName t);

enum class ControlsMode { linear, smooth };
std::string to_string(ControlsMode m);
ControlsMode controls_mode_from_string(const std::string& s);

/// RESET response: the IV on the controls, or the reduced form (outcome on
/// IV and controls).
enum class ResetTarget { iv, reduced_form };
std::string to_string(ResetTarget t);
ResetTarget reset_target_from_string(const std::string& s);

struct GamSettings {
    int k = 10;
    int degree = 3;
    ControlsMode controls = ControlsMode::linear;
};

struct Roles {
    std::string z;
    std::string y;
    std::optional<std::string> x;
    std::vector<std::string> controls;
    std::vector<std::string> nc;
    std::optional<std::string> cluster;
};

struct TestPlan {
    Roles roles;
    TestName test = TestName::nco_single;
    std::optional<regress::CovKind> vcov; // unset: cr1 with a cluster column, else hc1 (classical for RESET)
    double alpha = 0.05;
    GamSettings gam;
    std::vector<int> reset_powers{2, 3};
    ResetTarget reset_target = ResetTarget::iv;
    bool force_unconditional = false;

    regress::CovKind effective_vcov() const;
    /// Throws PlanError for repeated roles, missing columns, an empty NC
    /// list where one is needed or a cluster column the data does not carry.
    void validate(const scm::Dataset& data) const;
};

nlohmann::ordered_json to_json(const Roles& r);
Roles roles_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const GamSettings& g);
nlohmann::ordered_json to_json(const TestPlan& p);

} // namespace ivf::falsify
