#include "ivf/falsify/tests.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ivf/error.hpp"
#include "ivf/scm/dataset.hpp"
#include "ivf/spline/gam.hpp"

namespace ivf::falsify {

namespace {

const char* const kRichCaveat = "either outcome independence, exclusion restriction, or rich covariates is violated";
const char* const kCsrfCaveat = "either outcome independence, exclusion restriction, or CSRF is violated";
const char* const kPlainCaveat = "either outcome independence or exclusion restriction is violated";

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

void require_variation(const scm::Dataset& d, const std::string& name, const std::string& role) {
    const auto& v = d.column(name);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (v.empty() || *lo == *hi) throw DataError(role + " column '" + name + "' is constant");
}

regress::RegressionFit fit_ols(const scm::Dataset& d, const TestPlan& p, const std::string& response,
                               const std::vector<std::string>& regressors) {
    auto f = regress::ols_fit(d, response, regressors);
    const auto kind = p.effective_vcov();
    if (kind == regress::CovKind::cr1)
        regress::set_vcov(f, kind, &d.cluster_codes(), p.roles.cluster);
    else
        regress::set_vcov(f, kind);
    return f;
}

std::vector<std::string> dropped_of(const regress::RegressionFit& f, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& n : names)
        if (f.dropped[f.index(n)]) out.push_back(n);
    return out;
}

TestOutcome start(const TestPlan& p, const regress::RegressionFit& f) {
    TestOutcome o;
    o.test = p.test;
    o.response = f.response;
    o.regressors = f.regressors;
    o.vcov = f.cov_kind;
    return o;
}

void decide(TestOutcome& o, const TestPlan& p) { o.reject = o.result.p_value < p.alpha; }

// NCO regressions NC ~ Z + C (t on Z) or Z ~ C + NC (Wald on NC).
regress::TestResult precheck(const scm::Dataset& d, const TestPlan& p) {
    if (p.roles.nc.size() == 1) {
        const auto f = fit_ols(d, p, p.roles.nc[0], concat({p.roles.z}, p.roles.controls));
        return regress::wald_test(f, {p.roles.z});
    }
    const auto f = fit_ols(d, p, p.roles.z, concat(p.roles.controls, p.roles.nc));
    const auto gone = dropped_of(f, p.roles.nc);
    std::vector<std::string> kept;
    for (const auto& n : p.roles.nc)
        if (std::find(gone.begin(), gone.end(), n) == gone.end()) kept.push_back(n);
    if (kept.empty()) throw DataError("negative controls are fully collinear with the controls");
    return regress::wald_test(f, kept);
}

spline::SmoothTerm smooth_for(const scm::Dataset& d, const std::string& var, const GamSettings& g,
                              std::vector<std::string>& notes) {
    std::set<double> distinct(d.column(var).begin(), d.column(var).end());
    if (distinct.size() < 2) throw DataError("column '" + var + "' is constant");
    spline::SmoothTerm t{var, g.degree, g.k, std::nullopt};
    if (distinct.size() < static_cast<std::size_t>(g.k)) {
        t.k = static_cast<int>(distinct.size());
        t.degree = std::min(g.degree, t.k - 1);
        notes.push_back("'" + var + "' has " + std::to_string(distinct.size()) + " distinct values; basis reduced to " +
                        std::to_string(t.k) + " functions of degree " + std::to_string(t.degree));
    }
    return t;
}

TestOutcome gam_compare(const scm::Dataset& d, const TestPlan& p, const std::string& response,
                        const std::vector<std::string>& linear, const std::vector<std::string>& smooth) {
    TestOutcome o;
    o.test = p.test;
    o.response = response;
    std::vector<spline::SmoothTerm> base, extra;
    for (const auto& v : smooth) base.push_back(smooth_for(d, v, p.gam, o.notes));
    for (const auto& v : p.roles.nc) {
        auto t = smooth_for(d, v, p.gam, o.notes);
        t.lambda = 0.0;
        extra.push_back(t);
    }
    const auto restricted = spline::fit_gam(d, response, linear, base);
    const auto full = spline::extend_gam(d, restricted, extra);
    o.result = spline::gam_term_test(full, restricted);
    o.regressors = {regress::kIntercept};
    o.regressors.insert(o.regressors.end(), linear.begin(), linear.end());
    for (const auto& s : full.smooths) o.regressors.push_back("s(" + s.term.variable + ")");
    decide(o, p);
    return o;
}

} // namespace

std::string to_string(Bundled b) {
    switch (b) {
    case Bundled::rich_covariates: return "rich-covariates";
    case Bundled::csrf: return "csrf";
    case Bundled::none: break;
    }
    return "none";
}

TestOutcome nco_test_single(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    if (plan.roles.nc.size() != 1) throw PlanError("nco-single takes exactly one negative control");
    const auto& nc = plan.roles.nc[0];
    require_variation(data, nc, "negative control");
    require_variation(data, plan.roles.z, "IV");
    const auto f = fit_ols(data, plan, nc, concat({plan.roles.z}, plan.roles.controls));
    TestOutcome o = start(plan, f);
    o.result = regress::t_test(f, plan.roles.z);
    o.notes = f.warnings;
    o.bundled = Bundled::rich_covariates;
    o.caveat = kRichCaveat;
    decide(o, plan);
    return o;
}

TestOutcome nco_test_joint(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    require_variation(data, plan.roles.z, "IV");
    const auto f = fit_ols(data, plan, plan.roles.z, concat(plan.roles.controls, plan.roles.nc));
    TestOutcome o = start(plan, f);
    std::vector<std::string> kept;
    for (const auto& n : plan.roles.nc) {
        if (f.dropped[f.index(n)])
            o.notes.push_back("negative control '" + n + "' is collinear with the controls and was left out");
        else
            kept.push_back(n);
    }
    if (kept.empty()) throw DataError("negative controls are fully collinear with the controls: " + join(plan.roles.nc));
    o.result = regress::wald_test(f, kept);
    std::vector<double> ps;
    for (const auto& n : kept) {
        const auto one = fit_ols(data, plan, plan.roles.z, concat(plan.roles.controls, {n}));
        ps.push_back(regress::t_test(one, n).p_value);
    }
    o.companions.push_back(regress::bonferroni(ps, kept));
    o.bundled = Bundled::rich_covariates;
    o.caveat = kRichCaveat;
    decide(o, plan);
    return o;
}

TestOutcome nci_test(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    require_variation(data, plan.roles.z, "IV");
    // the IV is always the first regressor
    const auto f = fit_ols(data, plan, plan.roles.y, concat(concat({plan.roles.z}, plan.roles.controls), plan.roles.nc));
    for (const auto& n : dropped_of(f, plan.roles.nc))
        throw DataError("negative control '" + n + "' is a linear combination of " +
                        join(concat({plan.roles.z}, plan.roles.controls)) + " (and the other negative controls)");
    TestOutcome o = start(plan, f);
    o.result = plan.roles.nc.size() == 1 ? regress::t_test(f, plan.roles.nc[0]) : regress::wald_test(f, plan.roles.nc);
    o.notes = f.warnings;
    o.bundled = Bundled::csrf;
    o.caveat = kCsrfCaveat;
    decide(o, plan);
    return o;
}

TestOutcome nci_test_unconditional(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    require_variation(data, plan.roles.z, "IV");
    for (const auto& n : plan.roles.nc) require_variation(data, n, "negative control");
    const auto pre = precheck(data, plan);
    const bool failed = pre.p_value < plan.alpha;
    const std::string why = "pre-check rejected independence of the negative controls and the IV given the controls (p = " +
                            scm::format_double(pre.p_value) + ")";
    if (failed && !plan.force_unconditional) {
        TestOutcome o = nci_test(data, plan);
        o.test = plan.test;
        o.routed = true;
        o.notes.insert(o.notes.begin(), why + "; answered with the conditional test, which keeps the IV as a regressor");
        o.companions.insert(o.companions.begin(), pre);
        return o;
    }
    const auto f = fit_ols(data, plan, plan.roles.y, concat(plan.roles.controls, plan.roles.nc));
    for (const auto& n : dropped_of(f, plan.roles.nc))
        throw DataError("negative control '" + n + "' is a linear combination of the controls");
    TestOutcome o = start(plan, f);
    o.result = plan.roles.nc.size() == 1 ? regress::t_test(f, plan.roles.nc[0]) : regress::wald_test(f, plan.roles.nc);
    o.companions.push_back(pre);
    if (failed) {
        o.forced = true;
        o.notes.push_back(why + "; unconditional test forced, a rejection may only reflect that dependence");
    }
    o.bundled = Bundled::csrf;
    o.caveat = kCsrfCaveat;
    decide(o, plan);
    return o;
}

TestOutcome gam_nco_test(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    require_variation(data, plan.roles.z, "IV");
    const bool linear = plan.gam.controls == ControlsMode::linear;
    TestOutcome o = linear ? gam_compare(data, plan, plan.roles.z, plan.roles.controls, {})
                           : gam_compare(data, plan, plan.roles.z, {}, plan.roles.controls);
    o.bundled = linear ? Bundled::rich_covariates : Bundled::none;
    o.caveat = linear ? kRichCaveat : kPlainCaveat;
    return o;
}

TestOutcome gam_nci_test(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    require_variation(data, plan.roles.z, "IV");
    const auto zc = concat({plan.roles.z}, plan.roles.controls);
    const bool linear = plan.gam.controls == ControlsMode::linear;
    TestOutcome o = linear ? gam_compare(data, plan, plan.roles.y, zc, {}) : gam_compare(data, plan, plan.roles.y, {}, zc);
    o.bundled = linear ? Bundled::csrf : Bundled::none;
    o.caveat = linear ? kCsrfCaveat : kPlainCaveat;
    return o;
}

TestOutcome reset_test(const scm::Dataset& data, const TestPlan& plan) {
    plan.validate(data);
    const bool iv = plan.reset_target == ResetTarget::iv;
    const std::string response = iv ? plan.roles.z : plan.roles.y;
    const auto regs = iv ? plan.roles.controls : concat({plan.roles.z}, plan.roles.controls);
    const auto base = regress::ols_fit(data, response, regs);
    const Eigen::VectorXd& yhat = base.fitted;
    const double mean = yhat.mean();
    const double spread = (yhat.array() - mean).matrix().norm();
    const double scale = (base.fitted + base.residuals).array().abs().maxCoeff();
    if (!(spread > 1e-10 * std::max(1.0, scale) * std::sqrt(static_cast<double>(yhat.size()))))
        throw DataError("RESET: fitted values of " + response + " are constant");
    // powers of the standardized fit span the same space as powers of the fit
    const Eigen::ArrayXd s = (yhat.array() - mean) / (spread / std::sqrt(static_cast<double>(yhat.size())));
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto k = static_cast<Eigen::Index>(base.regressors.size());
    Eigen::MatrixXd x(n, k + static_cast<Eigen::Index>(plan.reset_powers.size()));
    x.col(0).setOnes();
    for (Eigen::Index j = 1; j < k; ++j) {
        const auto& c = data.column(base.regressors[static_cast<std::size_t>(j)]);
        x.col(j) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    }
    auto names = base.regressors;
    std::vector<std::string> added;
    for (std::size_t i = 0; i < plan.reset_powers.size(); ++i) {
        x.col(k + static_cast<Eigen::Index>(i)) = s.pow(plan.reset_powers[i]).matrix();
        added.push_back("fitted^" + std::to_string(plan.reset_powers[i]));
        names.push_back(added.back());
    }
    auto f = regress::ols_fit(x, base.fitted + base.residuals, names, response);
    const auto kind = plan.effective_vcov();
    if (kind == regress::CovKind::cr1)
        regress::set_vcov(f, kind, &data.cluster_codes(), plan.roles.cluster);
    else
        regress::set_vcov(f, kind);
    TestOutcome o = start(plan, f);
    std::vector<std::string> kept;
    for (const auto& a : added) {
        if (f.dropped[f.index(a)])
            o.notes.push_back("'" + a + "' is collinear with the regressors and was left out");
        else
            kept.push_back(a);
    }
    if (kept.empty()) throw DataError("RESET: every fitted-value power is collinear with the regressors");
    o.result = regress::wald_test(f, kept);
    o.result.kind = regress::TestKind::reset;
    o.result.null = "the regression of " + response + " on " + (regs.empty() ? std::string("a constant") : join(regs)) +
                    " is linear (powers of its fit have zero coefficients)";
    o.bundled = iv ? Bundled::rich_covariates : Bundled::csrf;
    o.caveat = iv ? "the IV is not linear in the controls, so rich covariates fails for this specification"
                  : "the reduced form is not linear in the IV and controls, so CSRF fails for this specification";
    decide(o, plan);
    return o;
}

TestOutcome run_test(const scm::Dataset& data, const TestPlan& plan) {
    switch (plan.test) {
    case TestName::nco_single: return nco_test_single(data, plan);
    case TestName::nco_reverse_joint: return nco_test_joint(data, plan);
    case TestName::nci_conditional: return nci_test(data, plan);
    case TestName::nci_unconditional: return nci_test_unconditional(data, plan);
    case TestName::gam_nco: return gam_nco_test(data, plan);
    case TestName::gam_nci: return gam_nci_test(data, plan);
    case TestName::reset: return reset_test(data, plan);
    }
    throw PlanError("unknown test");
}

nlohmann::ordered_json to_json(const TestOutcome& o) {
    nlohmann::ordered_json j;
    j["test"] = to_string(o.test);
    j["response"] = o.response;
    j["regressors"] = o.regressors;
    j["vcov"] = o.test == TestName::gam_nco || o.test == TestName::gam_nci ? nlohmann::ordered_json(nullptr)
                                                                          : nlohmann::ordered_json(regress::to_string(o.vcov));
    j["result"] = regress::to_json(o.result);
    auto comp = nlohmann::ordered_json::array();
    for (const auto& c : o.companions) comp.push_back(regress::to_json(c));
    j["companions"] = comp;
    j["reject"] = o.reject;
    j["bundled"] = to_string(o.bundled);
    j["caveat"] = o.caveat;
    j["notes"] = o.notes;
    j["routed"] = o.routed;
    j["forced"] = o.forced;
    return j;
}

} // namespace ivf::falsify
