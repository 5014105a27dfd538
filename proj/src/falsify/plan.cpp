#include "ivf/falsify/plan.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ivf/error.hpp"

namespace ivf::falsify {

namespace {

struct NameEntry {
    TestName test;
    const char* name;
};

constexpr NameEntry kNames[] = {
    {TestName::nco_single, "nco-single"},         {TestName::nco_reverse_joint, "nco-reverse-joint"},
    {TestName::nci_conditional, "nci-conditional"}, {TestName::nci_unconditional, "nci-unconditional"},
    {TestName::gam_nco, "gam-nco"},               {TestName::gam_nci, "gam-nci"},
    {TestName::reset, "reset"},
};

} // namespace

std::string to_string(TestName t) {
    for (const auto& e : kNames)
        if (e.test == t) return e.name;
    return "?";
}

TestName test_name_from_string(const std::string& s) {
    for (const auto& e : kNames)
        if (s == e.name) return e.test;
    if (s == "nco") return TestName::nco_single;
    if (s == "nco-joint") return TestName::nco_reverse_joint;
    if (s == "nci") return TestName::nci_conditional;
    std::string known;
    for (const auto& e : kNames) known += std::string(known.empty() ? "" : ", ") + e.name;
    throw PlanError("unknown test '" + s + "' (expected one of " + known + ")");
}

const std::vector<TestName>& all_tests() {
    static const std::vector<TestName> list = [] {
        std::vector<TestName> v;
        for (const auto& e : kNames) v.push_back(e.test);
        return v;
    }();
    return list;
}

bool is_nco_test(TestName t) {
    return t == TestName::nco_single || t == TestName::nco_reverse_joint || t == TestName::gam_nco;
}

bool is_nci_test(TestName t) {
    return t == TestName::nci_conditional || t == TestName::nci_unconditional || t == TestName::gam_nci;
}

std::string to_string(ControlsMode m) { return m == ControlsMode::linear ? "linear" : "smooth"; }

ControlsMode controls_mode_from_string(const std::string& s) {
    if (s == "linear") return ControlsMode::linear;
    if (s == "smooth") return ControlsMode::smooth;
    throw PlanError("unknown controls mode '" + s + "' (expected linear or smooth)");
}

std::string to_string(ResetTarget t) { return t == ResetTarget::iv ? "iv" : "reduced-form"; }

ResetTarget reset_target_from_string(const std::string& s) {
    if (s == "iv") return ResetTarget::iv;
    if (s == "reduced-form") return ResetTarget::reduced_form;
    throw PlanError("unknown RESET target '" + s + "' (expected iv or reduced-form)");
}

regress::CovKind TestPlan::effective_vcov() const {
    if (vcov) return *vcov;
    if (roles.cluster) return regress::CovKind::cr1;
    // cubed fitted values are high-leverage regressors; HC1 over-rejects there
    return test == TestName::reset ? regress::CovKind::classical : regress::CovKind::hc1;
}

void TestPlan::validate(const scm::Dataset& data) const {
    if (roles.z.empty()) throw PlanError("no IV column given");
    std::vector<std::string> names{roles.z};
    const bool needs_y = is_nci_test(test) || (test == TestName::reset && reset_target == ResetTarget::reduced_form);
    if (!roles.y.empty()) names.push_back(roles.y);
    else if (needs_y) throw PlanError("no outcome column given");
    if (roles.x) names.push_back(*roles.x);
    names.insert(names.end(), roles.controls.begin(), roles.controls.end());
    names.insert(names.end(), roles.nc.begin(), roles.nc.end());
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) throw PlanError("column '" + n + "' is assigned more than one role");
        if (!data.has(n)) throw PlanError("column '" + n + "' is not in the dataset");
    }
    if (test != TestName::reset && roles.nc.empty()) throw PlanError(to_string(test) + " needs at least one negative control");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PlanError("alpha must lie strictly between 0 and 1");
    if (roles.cluster) {
        if (seen.count(*roles.cluster)) throw PlanError("cluster column '" + *roles.cluster + "' also has another role");
        if (data.cluster_name() != roles.cluster)
            throw PlanError("cluster column '" + *roles.cluster + "' was not loaded as cluster labels");
    }
    if (effective_vcov() == regress::CovKind::cr1 && !roles.cluster)
        throw PlanError("cr1 covariance needs a cluster column");
    if (test == TestName::reset) {
        if (reset_powers.empty()) throw PlanError("RESET needs at least one power");
        for (int p : reset_powers)
            if (p < 2) throw PlanError("RESET powers must be at least 2");
        if (std::set<int>(reset_powers.begin(), reset_powers.end()).size() != reset_powers.size())
            throw PlanError("RESET powers must be distinct");
    }
    if (test == TestName::gam_nco || test == TestName::gam_nci) {
        if (gam.degree < 1) throw PlanError("spline degree must be at least 1");
        if (gam.k < gam.degree + 1) throw PlanError("basis size must exceed the spline degree");
    }
}

nlohmann::ordered_json to_json(const Roles& r) {
    nlohmann::ordered_json j;
    j["z"] = r.z;
    j["y"] = r.y;
    j["x"] = r.x ? nlohmann::ordered_json(*r.x) : nlohmann::ordered_json(nullptr);
    j["controls"] = r.controls;
    j["nc"] = r.nc;
    j["cluster"] = r.cluster ? nlohmann::ordered_json(*r.cluster) : nlohmann::ordered_json(nullptr);
    return j;
}

Roles roles_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw PlanError("roles must be an object");
    Roles r;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        try {
            if (k == "z") r.z = v.get<std::string>();
            else if (k == "y") r.y = v.get<std::string>();
            else if (k == "x") {
                if (!v.is_null()) r.x = v.get<std::string>();
            } else if (k == "controls") r.controls = v.get<std::vector<std::string>>();
            else if (k == "nc") r.nc = v.get<std::vector<std::string>>();
            else if (k == "cluster") {
                if (!v.is_null()) r.cluster = v.get<std::string>();
            } else
                throw PlanError("unknown role '" + k + "'");
        } catch (const nlohmann::json::exception&) {
            throw PlanError("role '" + k + "' has the wrong type");
        }
    }
    return r;
}

nlohmann::ordered_json to_json(const GamSettings& g) {
    return {{"k", g.k}, {"degree", g.degree}, {"controls", to_string(g.controls)}};
}

nlohmann::ordered_json to_json(const TestPlan& p) {
    nlohmann::ordered_json j;
    j["test"] = to_string(p.test);
    j["roles"] = to_json(p.roles);
    j["vcov"] = regress::to_string(p.effective_vcov());
    j["alpha"] = p.alpha;
    if (p.test == TestName::gam_nco || p.test == TestName::gam_nci) j["gam"] = to_json(p.gam);
    if (p.test == TestName::reset) {
        j["reset_powers"] = p.reset_powers;
        j["reset_target"] = to_string(p.reset_target);
    }
    if (p.test == TestName::nci_unconditional) j["force_unconditional"] = p.force_unconditional;
    return j;
}

} // namespace ivf::falsify
