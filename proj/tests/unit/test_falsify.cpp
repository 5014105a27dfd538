#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ivf/error.hpp"
#include "ivf/falsify/diagnostics.hpp"
#include "ivf/falsify/monte_carlo.hpp"
#include "ivf/falsify/plan.hpp"
#include "ivf/falsify/report.hpp"
#include "ivf/falsify/suite.hpp"
#include "ivf/falsify/tests.hpp"
#include "ivf/regress/ols.hpp"
#include "ivf/scm/rng.hpp"
#include "ivf/scm/scenarios.hpp"
#include "ivf/scm/scm.hpp"

using namespace ivf::falsify;
using ivf::scm::Dataset;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

TestPlan make_plan(TestName t, std::string z, std::string y, std::vector<std::string> c, std::vector<std::string> nc) {
    TestPlan p;
    p.test = t;
    p.roles.z = std::move(z);
    p.roles.y = std::move(y);
    p.roles.controls = std::move(c);
    p.roles.nc = std::move(nc);
    return p;
}

ivf::scm::ScmSpec spec_of(const std::string& name, const ivf::scm::Overrides& o = {}) {
    return ivf::scm::scenario(name, o).spec;
}

ivf::scm::Overrides suspect(double coef) {
    return {{"suspect", "on"}, {"suspect_coef", std::to_string(coef)}};
}

VectorXd col(const Dataset& d, const std::string& name) {
    const auto& v = d.column(name);
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Residuals of y on [1, x] from the normal equations (Cholesky), independent
// of the QR path used by the library.
VectorXd partial_out(const MatrixXd& x, const VectorXd& y) {
    MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    const VectorXd b = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    return y - a * b;
}

MatrixXd columns(const Dataset& d, const std::vector<std::string>& names) {
    MatrixXd m(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = col(d, names[j]);
    return m;
}

Dataset gaussian_frame(std::size_t n, std::uint64_t seed, const std::vector<std::string>& names) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Dataset d;
    for (const auto& name : names) {
        std::vector<double> v(n);
        for (auto& x : v) x = z(rng);
        d.add_column(name, v);
    }
    return d;
}

double rate_of(const std::string& scenario, const ivf::scm::Overrides& o, std::size_t n, std::size_t reps,
               const TestPlan& plan, std::uint64_t seed = 7) {
    auto est = rejection_rate(spec_of(scenario, o), n, seed, reps, 1,
                              [&](const Dataset& d) { return run_test(d, plan).reject; });
    REQUIRE(est.errors == 0);
    return est.rate;
}

const Roles fig1a_roles{"Z", "Y", std::string("X"), {}, {"NC1"}, std::nullopt};
const Roles fig1c_roles{"Z", "Y", std::string("X"), {}, {"NC3"}, std::nullopt};

} // namespace

TEST_CASE("test names and plan validation") {
    for (auto t : all_tests()) CHECK(test_name_from_string(to_string(t)) == t);
    CHECK(test_name_from_string("nco") == TestName::nco_single);
    CHECK(test_name_from_string("nco-joint") == TestName::nco_reverse_joint);
    CHECK(test_name_from_string("nci") == TestName::nci_conditional);
    CHECK_THROWS_AS(test_name_from_string("placebo"), ivf::PlanError);

    Dataset d = gaussian_frame(50, 1, {"Z", "Y", "C", "N"});
    auto p = make_plan(TestName::nco_single, "Z", "Y", {"C"}, {"N"});
    CHECK_NOTHROW(p.validate(d));
    CHECK(p.effective_vcov() == ivf::regress::CovKind::hc1);

    auto dup = p;
    dup.roles.nc = {"C"};
    CHECK_THROWS_AS(dup.validate(d), ivf::PlanError);
    auto missing = p;
    missing.roles.controls = {"Q"};
    CHECK_THROWS_AS(missing.validate(d), ivf::PlanError);
    auto none = p;
    none.roles.nc.clear();
    CHECK_THROWS_AS(none.validate(d), ivf::PlanError);
    none.test = TestName::reset;
    CHECK_NOTHROW(none.validate(d));
    CHECK(none.effective_vcov() == ivf::regress::CovKind::classical);
    auto bad_alpha = p;
    bad_alpha.alpha = 1.5;
    CHECK_THROWS_AS(bad_alpha.validate(d), ivf::PlanError);

    auto clustered = p;
    clustered.roles.cluster = "g";
    CHECK_THROWS_AS(clustered.validate(d), ivf::PlanError);
    std::vector<std::string> labels;
    for (int i = 0; i < 50; ++i) labels.push_back("s" + std::to_string(i % 5));
    d.set_clusters("g", labels);
    CHECK_NOTHROW(clustered.validate(d));
    CHECK(clustered.effective_vcov() == ivf::regress::CovKind::cr1);
}

TEST_CASE("single NCO test matches a partialling-out oracle") {
    Dataset d = gaussian_frame(300, 5, {"Z", "C1", "C2", "E"});
    std::vector<double> nc(300);
    for (std::size_t i = 0; i < 300; ++i)
        nc[i] = 0.2 * d.column("Z")[i] + d.column("C1")[i] - d.column("C2")[i] + d.column("E")[i] * (1 + std::abs(d.column("C1")[i]));
    d.add_column("N", nc);
    d.add_column("Y", d.column("E"));
    auto plan = make_plan(TestName::nco_single, "Z", "Y", {"C1", "C2"}, {"N"});
    auto out = nco_test_single(d, plan);

    const MatrixXd c = columns(d, {"C1", "C2"});
    const VectorXd rz = partial_out(c, col(d, "Z"));
    const VectorXd rn = partial_out(c, col(d, "N"));
    const double beta = rz.dot(rn) / rz.squaredNorm();
    const VectorXd e = rn - beta * rz;
    const double n = 300, k = 4;
    const double se = std::sqrt(n / (n - k) * (rz.array().square() * e.array().square()).sum()) / rz.squaredNorm();
    CHECK(out.result.statistic == doctest::Approx(beta / se).epsilon(1e-9));
    CHECK(out.result.df == std::vector<double>{n - k});
    CHECK(out.response == "N");
    CHECK(out.regressors == std::vector<std::string>{ivf::regress::kIntercept, "Z", "C1", "C2"});
    CHECK(out.bundled == Bundled::rich_covariates);
    CHECK(out.caveat == "either outcome independence, exclusion restriction, or rich covariates is violated");
    CHECK(out.reject == (out.result.p_value < 0.05));

    auto constant = d;
    constant.add_column("K", std::vector<double>(300, 2.0));
    auto kp = plan;
    kp.roles.nc = {"K"};
    CHECK_THROWS_AS(nco_test_single(constant, kp), ivf::DataError);
    auto kz = plan;
    kz.roles.z = "K";
    CHECK_THROWS_AS(nco_test_single(constant, kz), ivf::DataError);
    auto two = plan;
    two.roles.nc = {"N", "E"};
    CHECK_THROWS_AS(nco_test_single(d, two), ivf::PlanError);
}

TEST_CASE("reverse joint test with one NC is the squared single test") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Dataset d = ivf::scm::sample(spec_of("fig1a", suspect(0.3)), 400, seed);
        auto single = make_plan(TestName::nco_single, "Z", "Y", {}, {"NC1"});
        single.vcov = ivf::regress::CovKind::classical;
        auto joint = single;
        joint.test = TestName::nco_reverse_joint;
        const auto s = nco_test_single(d, single);
        const auto j = nco_test_joint(d, joint);
        CHECK(j.result.kind == ivf::regress::TestKind::f_wald);
        CHECK(j.result.statistic == doctest::Approx(s.result.statistic * s.result.statistic).epsilon(1e-9));
        CHECK(j.result.p_value == doctest::Approx(s.result.p_value).epsilon(1e-9));
        CHECK(j.response == "Z");
        REQUIRE(j.companions.size() == 1);
        CHECK(j.companions[0].kind == ivf::regress::TestKind::bonferroni);
    }
}

TEST_CASE("reverse joint test errors and partial collinearity") {
    Dataset d = gaussian_frame(200, 9, {"Z", "Y", "C", "N1"});
    d.add_column("N2", d.column("C"));
    auto plan = make_plan(TestName::nco_reverse_joint, "Z", "Y", {"C"}, {"N2"});
    CHECK_THROWS_AS(nco_test_joint(d, plan), ivf::DataError);
    plan.roles.nc = {"N1", "N2"};
    const auto out = nco_test_joint(d, plan);
    CHECK(out.result.df[0] == 1.0);
    REQUIRE_FALSE(out.notes.empty());
    CHECK(out.notes[0].find("N2") != std::string::npos);
}

TEST_CASE("XOR pair: single NCs sized, the pair with its interaction rejects") {
    const auto spec = spec_of("d5");
    auto with_pair = [](Dataset d) {
        std::vector<double> prod(d.rows());
        for (std::size_t i = 0; i < d.rows(); ++i) prod[i] = d.column("NC1")[i] * d.column("NC2")[i];
        d.add_column("NC1xNC2", prod);
        return d;
    };
    auto p1 = make_plan(TestName::nco_single, "Z", "Y", {}, {"NC1"});
    p1.roles.y = "NC2"; // unused by NCO tests; any distinct column
    auto p2 = p1;
    p2.roles.nc = {"NC2"};
    p2.roles.y = "NC1";
    auto pj = make_plan(TestName::nco_reverse_joint, "Z", "R1", {}, {"NC1", "NC2", "NC1xNC2"});
    std::size_t r1 = 0, r2 = 0, rj = 0;
    const std::size_t reps = 200;
    for (std::size_t r = 0; r < reps; ++r) {
        const Dataset d = with_pair(ivf::scm::sample(spec, 1000, ivf::scm::derive_seed(21, r)));
        r1 += nco_test_single(d, p1).reject;
        r2 += nco_test_single(d, p2).reject;
        rj += nco_test_joint(d, pj).reject;
    }
    CHECK(r1 <= 0.1 * reps);
    CHECK(r2 <= 0.1 * reps);
    CHECK(rj >= 0.95 * reps);
}

TEST_CASE("pure-noise NC block gives uniform Wald p-values") {
    std::vector<std::string> names{"Z", "Y", "C", "N1", "N2", "N3", "N4", "N5"};
    auto plan = make_plan(TestName::nco_reverse_joint, "Z", "Y", {"C"}, {"N1", "N2", "N3", "N4", "N5"});
    const auto ps = mc_map<double>(2000, 1, [&](std::size_t r) {
        return nco_test_joint(gaussian_frame(500, 1000 + r, names), plan).result.p_value;
    });
    CHECK(ks_uniform(ps) < 0.05);
}

TEST_CASE("conditional NCI test keeps the IV and matches an oracle") {
    const Dataset d = ivf::scm::sample(spec_of("fig1c", suspect(0.2)), 500, 4);
    auto plan = make_plan(TestName::nci_conditional, "Z", "Y", {}, {"NC3"});
    plan.vcov = ivf::regress::CovKind::classical;
    const auto out = nci_test(d, plan);
    CHECK(out.response == "Y");
    CHECK(std::find(out.regressors.begin(), out.regressors.end(), "Z") != out.regressors.end());
    CHECK(out.bundled == Bundled::csrf);
    CHECK(out.caveat == "either outcome independence, exclusion restriction, or CSRF is violated");

    const VectorXd rn = partial_out(columns(d, {"Z"}), col(d, "NC3"));
    const VectorXd ry = partial_out(columns(d, {"Z"}), col(d, "Y"));
    const double b = rn.dot(ry) / rn.squaredNorm();
    const double s2 = (ry - b * rn).squaredNorm() / (500.0 - 3.0);
    CHECK(out.result.statistic == doctest::Approx(b / std::sqrt(s2 / rn.squaredNorm())).epsilon(1e-9));

    // block of two NCs: Wald F
    Dataset d2 = d;
    d2.add_column("N", gaussian_frame(500, 8, {"N"}).column("N"));
    plan.roles.nc = {"NC3", "N"};
    const auto block = nci_test(d2, plan);
    CHECK(block.result.kind == ivf::regress::TestKind::f_wald);
    CHECK(block.result.df == std::vector<double>{2.0, 500.0 - 4.0});

    // NC that is a combination of Z and a control: error naming it
    Dataset d3 = gaussian_frame(100, 3, {"Z", "Y", "C"});
    std::vector<double> lin(100);
    for (std::size_t i = 0; i < 100; ++i) lin[i] = d3.column("Z")[i] - 2 * d3.column("C")[i];
    d3.add_column("L", lin);
    auto bad = make_plan(TestName::nci_conditional, "Z", "Y", {"C"}, {"L"});
    try {
        nci_test(d3, bad);
        FAIL("expected an error");
    } catch (const ivf::DataError& e) {
        CHECK(std::string(e.what()).find("'L'") != std::string::npos);
    }
}

TEST_CASE("conditioning on the IV matters in fig1c") {
    TestPlan cond;
    cond.roles = fig1c_roles;
    cond.test = TestName::nci_conditional;
    auto uncond = cond;
    uncond.test = TestName::nci_unconditional;
    uncond.force_unconditional = true;
    const double rc = rate_of("fig1c", {}, 2000, 300, cond);
    const double ru = rate_of("fig1c", {}, 2000, 100, uncond);
    CHECK(rc >= 0.02);
    CHECK(rc <= 0.09);
    CHECK(ru >= 0.95);
    CHECK(rate_of("fig1c", suspect(0.5), 1000, 100, cond) > 0.8);
}

TEST_CASE("unconditional NCI pre-check routes or stamps") {
    const Dataset d = ivf::scm::sample(spec_of("fig1c"), 2000, 5);
    TestPlan p;
    p.roles = fig1c_roles;
    p.test = TestName::nci_unconditional;
    const auto routed = nci_test_unconditional(d, p);
    CHECK(routed.routed);
    CHECK_FALSE(routed.forced);
    CHECK(std::find(routed.regressors.begin(), routed.regressors.end(), "Z") != routed.regressors.end());
    REQUIRE_FALSE(routed.companions.empty());
    CHECK(routed.companions[0].p_value < 0.05);
    REQUIRE_FALSE(routed.notes.empty());
    CHECK(routed.notes[0].find("conditional") != std::string::npos);

    p.force_unconditional = true;
    const auto forced = nci_test_unconditional(d, p);
    CHECK(forced.forced);
    CHECK_FALSE(forced.routed);
    CHECK(std::find(forced.regressors.begin(), forced.regressors.end(), "Z") == forced.regressors.end());

    // fig2a: NC independent of Z by construction
    TestPlan q;
    q.roles = {"Z", "Y", std::string("X"), {}, {"NC"}, std::nullopt};
    q.test = TestName::nci_unconditional;
    CHECK(rate_of("fig2a", suspect(0.5), 1000, 100, q) > 0.8);
    const auto one = nci_test_unconditional(ivf::scm::sample(spec_of("fig2a", suspect(0.5)), 1000, 2), q);
    CHECK_FALSE(one.routed);
}

TEST_CASE("unconditional NCI with a noise NC is sized") {
    std::vector<std::string> names{"Z", "E", "N", "C"};
    TestPlan p = make_plan(TestName::nci_unconditional, "Z", "Y", {"C"}, {"N"});
    const auto rejects = mc_map<int>(600, 1, [&](std::size_t r) {
        Dataset d = gaussian_frame(1000, 5000 + r, names);
        std::vector<double> y(1000);
        for (std::size_t i = 0; i < 1000; ++i) y[i] = d.column("Z")[i] + d.column("C")[i] + d.column("E")[i];
        d.add_column("Y", y);
        const auto o = nci_test_unconditional(d, p);
        return o.routed ? -1 : static_cast<int>(o.reject);
    });
    std::size_t unrouted = 0, rej = 0;
    for (int v : rejects)
        if (v >= 0) {
            ++unrouted;
            rej += static_cast<std::size_t>(v);
        }
    CHECK(unrouted >= 540);
    const double rate = static_cast<double>(rej) / static_cast<double>(unrouted);
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.09);
}

TEST_CASE("linear NCI over-rejects when the reduced form is not linear") {
    TestPlan p;
    p.roles = {"Z", "Y", std::string("X"), {"C"}, {"NC"}, std::nullopt};
    p.test = TestName::nci_conditional;
    CHECK(rate_of("csrf-interaction", {}, 2000, 100, p) > 0.2);
    CHECK(rate_of("csrf", {}, 2000, 100, p) > 0.2);
}

TEST_CASE("GAM NCO and NCI variants") {
    TestPlan lin;
    lin.roles = {"Z", "Y", std::string("X"), {"C"}, {"NC"}, std::nullopt};
    lin.test = TestName::nco_single;
    auto gam = lin;
    gam.test = TestName::gam_nco;
    CHECK(rate_of("quad-nco", {}, 500, 40, lin) < 0.2);
    CHECK(rate_of("quad-nco", {}, 500, 40, gam) > 0.9);

    auto out = gam_nco_test(ivf::scm::sample(spec_of("quad-nco"), 500, 1), gam);
    CHECK(out.result.kind == ivf::regress::TestKind::gam_f);
    CHECK(out.response == "Z");
    CHECK(out.bundled == Bundled::rich_covariates);
    gam.gam.controls = ControlsMode::smooth;
    out = gam_nco_test(ivf::scm::sample(spec_of("quad-nco"), 500, 1), gam);
    CHECK(out.bundled == Bundled::none);

    auto nci = lin;
    nci.test = TestName::gam_nci;
    nci.gam.controls = ControlsMode::smooth;
    CHECK(rate_of("csrf", {}, 1000, 40, nci) <= 0.15);
    const auto o = gam_nci_test(ivf::scm::sample(spec_of("csrf"), 500, 3), nci);
    CHECK(o.response == "Y");
    CHECK(std::find(o.regressors.begin(), o.regressors.end(), "s(Z)") != o.regressors.end());
    nci.gam.controls = ControlsMode::linear;
    const auto l = gam_nci_test(ivf::scm::sample(spec_of("csrf"), 500, 3), nci);
    CHECK(l.bundled == Bundled::csrf);
    CHECK(std::find(l.regressors.begin(), l.regressors.end(), "Z") != l.regressors.end());

    // fewer rows than basis columns
    auto tiny = lin;
    tiny.test = TestName::gam_nco;
    CHECK_THROWS_AS(gam_nco_test(ivf::scm::sample(spec_of("quad-nco"), 10, 1), tiny), ivf::Error);
}

TEST_CASE("RESET statistic equals the nested-model F under classical covariance") {
    Dataset d = gaussian_frame(400, 17, {"C1", "C2", "E", "Y"});
    std::vector<double> z(400);
    for (std::size_t i = 0; i < 400; ++i) {
        const double c1 = d.column("C1")[i], c2 = d.column("C2")[i];
        z[i] = c1 + 0.5 * c2 + 0.3 * c1 * c1 + d.column("E")[i];
    }
    d.add_column("Z", z);
    auto p = make_plan(TestName::reset, "Z", "Y", {"C1", "C2"}, {});
    p.vcov = ivf::regress::CovKind::classical;
    const auto out = reset_test(d, p);

    const MatrixXd c = columns(d, {"C1", "C2"});
    const VectorXd zr = partial_out(c, col(d, "Z"));
    const double rss_r = zr.squaredNorm();
    const VectorXd fit = col(d, "Z") - zr;
    MatrixXd big(400, 4);
    big << c, fit.array().square().matrix(), fit.array().cube().matrix();
    const double rss_f = partial_out(big, col(d, "Z")).squaredNorm();
    const double f = ((rss_r - rss_f) / 2.0) / (rss_f / (400.0 - 5.0));
    CHECK(out.result.kind == ivf::regress::TestKind::reset);
    CHECK(out.result.statistic == doctest::Approx(f).epsilon(1e-8));
    CHECK(out.result.df == std::vector<double>{2.0, 395.0});
    CHECK(out.bundled == Bundled::rich_covariates);

    auto rf = p;
    rf.reset_target = ResetTarget::reduced_form;
    const auto o2 = reset_test(d, rf);
    CHECK(o2.response == "Y");
    CHECK(o2.bundled == Bundled::csrf);
    CHECK(std::find(o2.regressors.begin(), o2.regressors.end(), "Z") != o2.regressors.end());

    auto constant = d;
    constant.add_column("K", std::vector<double>(400, 1.0));
    auto kp = make_plan(TestName::reset, "Z", "Y", {"K"}, {});
    CHECK_THROWS_AS(reset_test(constant, kp), ivf::DataError);
}

TEST_CASE("RESET size and power") {
    std::vector<std::string> names{"C", "E", "Y"};
    auto p = make_plan(TestName::reset, "Z", "Y", {"C"}, {});
    auto rate = [&](double curvature, std::size_t n, std::size_t reps) {
        std::size_t rej = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            Dataset d = gaussian_frame(n, 900 + r, names);
            std::vector<double> z(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double c = d.column("C")[i];
                z[i] = c + curvature * c * c + d.column("E")[i];
            }
            d.add_column("Z", z);
            rej += reset_test(d, p).reject;
        }
        return static_cast<double>(rej) / static_cast<double>(reps);
    };
    const double size = rate(0.0, 1000, 400);
    CHECK(size >= 0.02);
    CHECK(size <= 0.09);
    CHECK(rate(1.0, 1000, 50) > 0.9);
}

TEST_CASE("residualized correlation diagnostics") {
    Dataset d = ivf::scm::sample(spec_of("fig1a", suspect(0.5)), 2000, 12);
    const auto noise = gaussian_frame(2000, 77, {"A", "B"});
    d.add_column("A", noise.column("A"));
    d.add_column("B", noise.column("B"));
    Roles roles{"Z", "Y", std::nullopt, {"B"}, {"A", "NC1"}, std::nullopt};
    const auto rows = nc_diagnostics(d, roles);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].nc == "NC1");
    CHECK(rows[1].nc == "A");
    CHECK(rows[1].corr_iv < 3.0 / std::sqrt(2000.0));
    CHECK(rows[1].corr_outcome < 3.0 / std::sqrt(2000.0));

    const MatrixXd c = columns(d, {"B"});
    const VectorXd rn = partial_out(c, col(d, "NC1")), rz = partial_out(c, col(d, "Z")), ry = partial_out(c, col(d, "Y"));
    CHECK(rows[0].corr_iv == doctest::Approx(std::abs(rn.dot(rz)) / (rn.norm() * rz.norm())).epsilon(1e-10));
    CHECK(rows[0].corr_outcome == doctest::Approx(std::abs(rn.dot(ry)) / (rn.norm() * ry.norm())).epsilon(1e-10));

    std::ostringstream csv;
    write_diagnostics_csv(csv, rows);
    CHECK(csv.str().rfind("nc,corr_iv,corr_outcome\nNC1,", 0) == 0);

    Roles same{"Z", "Y", std::nullopt, {"B"}, {"B2"}, std::nullopt};
    d.add_column("B2", d.column("B"));
    CHECK_THROWS_AS(nc_diagnostics(d, same), ivf::DataError);
}

TEST_CASE("Monte Carlo harness is thread invariant") {
    const auto spec = spec_of("fig1a");
    TestPlan p;
    p.roles = fig1a_roles;
    p.test = TestName::nco_single;
    auto pv = [&](const Dataset& d) { return run_test(d, p).result.p_value; };
    const auto a = pvalues(spec, 300, 5, 40, 1, pv);
    const auto b = pvalues(spec, 300, 5, 40, 4, pv);
    CHECK(a == b);
    CHECK(ks_uniform({0.5}) == doctest::Approx(0.5));
    CHECK(ks_uniform({0.25, 0.75}) == doctest::Approx(0.25));
}

TEST_CASE("report decisions and serialization") {
    Report r;
    r.plan = {{"tests", {"nco-single"}}};
    CHECK(r.decision() == kNoEvidence);
    CHECK(r.exit_code() == 0);
    ResultEntry e;
    e.test = TestName::nco_single;
    TestOutcome o;
    o.reject = true;
    o.bundled = Bundled::rich_covariates;
    o.caveat = "c";
    o.result.p_value = 0.01;
    e.outcome = o;
    r.results.push_back(e);
    CHECK(r.decision() == kEvidence);
    CHECK(r.exit_code() == 2);
    CHECK(r.caveats().size() == 1);
    const auto j = to_json(r);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"plan", "results", "caveats", "diagnostics", "decision", "exit_code", "notes",
                                           "refusals"});
    ResultEntry bad;
    bad.error = "boom";
    r.results.push_back(bad);
    CHECK(r.decision() == kFailed);
    CHECK(r.exit_code() == 3);
    Report refused;
    refused.refusals.push_back({TestName::nco_single, "N", nlohmann::ordered_json::object()});
    CHECK(refused.decision() == kRefused);
    CHECK(refused.exit_code() == 3);
}

TEST_CASE("suite: gating, routing and determinism") {
    SuiteConfig c;
    c.scenario = "fig1c";
    c.seed = 11;
    c.tests = {TestName::nco_single};
    auto refused = run_suite(c);
    CHECK(refused.decision() == kRefused);
    REQUIRE(refused.refusals.size() == 1);
    CHECK(refused.refusals[0].nc == "NC3");
    CHECK(refused.refusals[0].verdicts.contains("U3"));
    CHECK(refused.results.empty());

    c.override_gating = true;
    CHECK(run_suite(c).refusals.empty());

    SuiteConfig u;
    u.scenario = "fig1c";
    u.seed = 11;
    u.tests = {TestName::nci_unconditional};
    const auto routed = run_suite(u);
    REQUIRE(routed.results.size() == 1);
    REQUIRE(routed.results[0].outcome);
    CHECK(routed.results[0].outcome->routed);
    CHECK(serialize(routed).find("routed") != std::string::npos);

    SuiteConfig a;
    a.scenario = "fig1a";
    a.seed = 2;
    a.tests = {TestName::nco_single, TestName::nco_reverse_joint, TestName::gam_nco};
    const auto fine = run_suite(a);
    CHECK(fine.decision() == kNoEvidence);
    CHECK(fine.exit_code() == 0);
    CHECK(fine.diagnostics.size() == 1);

    a.reps = 30;
    const auto one = serialize(run_suite(a));
    a.threads = 3;
    CHECK(serialize(run_suite(a)) == one);
    CHECK(one.find("\"monte_carlo\"") != std::string::npos);

    SuiteConfig missing;
    missing.scenario = "fig1a";
    missing.tests = {TestName::nco_single};
    CHECK_THROWS_AS(run_suite(missing), ivf::PlanError);
    missing.seed = 1;
    missing.roles.nc = {"NOPE"};
    CHECK_THROWS_AS(run_suite(missing), ivf::Error);
}

TEST_CASE("suite config JSON round trip") {
    SuiteConfig c;
    c.scenario = "fig1a";
    c.overrides = {{"suspect", "on"}};
    c.seed = 4;
    c.n = 500;
    c.tests = {TestName::nco_single, TestName::gam_nco};
    c.vcov = ivf::regress::CovKind::classical;
    c.gam.controls = ControlsMode::smooth;
    c.roles.nc = {"NC1"};
    const auto j = to_json(c);
    const auto back = suite_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK_THROWS_AS(suite_config_from_json(nlohmann::ordered_json::parse(R"({"tests": ["nco"], "bogus": 1})")),
                    ivf::PlanError);
}
