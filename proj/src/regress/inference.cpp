#include "ivf/regress/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "ivf/error.hpp"

namespace ivf::regress {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_estimated(const RegressionFit& fit, const std::string& name) {
    if (fit.dropped.at(fit.index(name)))
        throw RegressionError("coefficient '" + name + "' was dropped as collinear and cannot be tested");
}

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

} // namespace

std::string to_string(TestKind k) {
    switch (k) {
    case TestKind::t:
        return "t";
    case TestKind::f_wald:
        return "F-wald";
    case TestKind::reset:
        return "reset";
    case TestKind::gam_f:
        return "gam-f";
    case TestKind::bonferroni:
        return "bonferroni";
    }
    return "t";
}

double t_pvalue(double t, double df) {
    if (std::isnan(t)) return kNaN;
    const double a = std::abs(t);
    if (a == 0.0) return 1.0;
    if (std::isinf(a)) return 0.0;
    if (std::isinf(df)) return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), a));
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), a)));
}

double f_pvalue(double f, double df1, double df2) {
    if (std::isnan(f)) return kNaN;
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), f));
}

double reference_df(const RegressionFit& fit) {
    if (fit.cov_kind == CovKind::cr1) return static_cast<double>(fit.clusters) - 1.0;
    return fit.df_resid();
}

TestResult t_test(const RegressionFit& fit, const std::string& name) {
    check_estimated(fit, name);
    const auto i = static_cast<Eigen::Index>(fit.index(name));
    const double se = std::sqrt(fit.cov(i, i));
    if (!(se > 0.0)) throw RegressionError("zero standard error for '" + name + "'");
    TestResult r;
    r.kind = TestKind::t;
    r.statistic = fit.coef(i) / se;
    r.df = {reference_df(fit)};
    r.p_value = t_pvalue(r.statistic, r.df[0]);
    r.null = "coefficient on " + name + " is zero";
    r.detail.push_back({name, r.statistic, r.p_value, std::nullopt});
    return r;
}

TestResult wald_test(const RegressionFit& fit, const std::vector<std::string>& names) {
    if (names.empty()) throw RegressionError("Wald test needs at least one coefficient");
    const auto q = static_cast<Eigen::Index>(names.size());
    std::vector<Eigen::Index> idx;
    for (const auto& n : names) {
        check_estimated(fit, n);
        idx.push_back(static_cast<Eigen::Index>(fit.index(n)));
    }
    Eigen::VectorXd theta(q);
    Eigen::MatrixXd v(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
        theta(a) = fit.coef(idx[a]);
        for (Eigen::Index b = 0; b < q; ++b) v(a, b) = fit.cov(idx[a], idx[b]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    const auto& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (!(top > 0.0) || ev.minCoeff() <= 1e-12 * top) {
        // the eigenvector of the smallest eigenvalue names the degenerate combination
        const Eigen::VectorXd w = es.eigenvectors().col(0);
        std::string witness;
        for (Eigen::Index a = 0; a < q; ++a)
            if (std::abs(w(a)) > 1e-6) witness += (witness.empty() ? "" : ", ") + names[a];
        throw RegressionError("singular covariance for the tested coefficients (degenerate combination of: " +
                              witness + ")");
    }
    Eigen::VectorXd inv_theta = es.eigenvectors().transpose() * theta;
    double w = 0.0;
    for (Eigen::Index a = 0; a < q; ++a) w += inv_theta(a) * inv_theta(a) / ev(a);
    TestResult r;
    r.kind = TestKind::f_wald;
    r.statistic = w / static_cast<double>(q);
    r.df = {static_cast<double>(q), reference_df(fit)};
    r.p_value = f_pvalue(r.statistic, r.df[0], r.df[1]);
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    r.null = "coefficients on " + list + " are jointly zero";
    for (Eigen::Index a = 0; a < q; ++a) {
        const double se = std::sqrt(v(a, a));
        const double t = theta(a) / se;
        r.detail.push_back({names[a], t, t_pvalue(t, r.df[1]), std::nullopt});
    }
    return r;
}

TestResult bonferroni(const std::vector<double>& pvals, const std::vector<std::string>& labels) {
    if (pvals.empty()) throw RegressionError("Bonferroni correction needs at least one p-value");
    if (!labels.empty() && labels.size() != pvals.size()) throw RegressionError("label count does not match p-values");
    const double m = static_cast<double>(pvals.size());
    TestResult r;
    r.kind = TestKind::bonferroni;
    r.statistic = kNaN;
    r.p_value = 1.0;
    r.null = "all " + std::to_string(pvals.size()) + " hypotheses hold";
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        const double p = pvals[i];
        if (!(p >= 0.0 && p <= 1.0)) throw RegressionError("p-value outside [0,1]");
        const double adj = std::min(1.0, m * p);
        r.p_value = std::min(r.p_value, adj);
        r.detail.push_back({labels.empty() ? std::to_string(i + 1) : labels[i], kNaN, p, adj});
    }
    return r;
}

nlohmann::ordered_json to_json(const TestResult& r) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(r.kind);
    j["statistic"] = number(r.statistic);
    j["df"] = nlohmann::ordered_json::array();
    for (double d : r.df) j["df"].push_back(number(d));
    j["p_value"] = number(r.p_value);
    j["null"] = r.null;
    j["detail"] = nlohmann::ordered_json::array();
    for (const auto& d : r.detail) {
        nlohmann::ordered_json e;
        e["label"] = d.label;
        e["statistic"] = number(d.statistic);
        e["p_value"] = number(d.p_value);
        if (d.adjusted) e["adjusted"] = number(*d.adjusted);
        j["detail"].push_back(e);
    }
    return j;
}

} // namespace ivf::regress
