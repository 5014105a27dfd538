#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivf/regress/ols.hpp"
#include "json.hpp"

namespace ivf::regress {

enum class TestKind { t, f_wald, reset, gam_f, bonferroni };

std::string to_string(TestKind k);

struct TestDetail {
    std::string label;
    double statistic = 0.0; // NaN when not applicable
    double p_value = 0.0;
    std::optional<double> adjusted;
};

struct TestResult {
    TestKind kind = TestKind::t;
    double statistic = 0.0;
    std::vector<double> df; // one entry for t, two for F
    double p_value = 1.0;
    std::string null;
    std::vector<TestDetail> detail;
};

/// Two-sided p-value of t with `df` degrees of freedom (normal when df is infinite).
double t_pvalue(double t, double df);
/// Upper tail of F(df1, df2).
double f_pvalue(double f, double df1, double df2);

/// Denominator degrees of freedom for the fit's covariance kind:
/// n - rank, or G - 1 for cluster-robust covariance.
double reference_df(const RegressionFit& fit);

/// t test of one coefficient against zero using fit.cov.
TestResult t_test(const RegressionFit& fit, const std::string& name);

/// Wald test that the named coefficients are jointly zero, reported as W/q
/// against F(q, reference_df).
TestResult wald_test(const RegressionFit& fit, const std::vector<std::string>& names);

/// adjusted_i = min(1, m p_i); aggregate is the smallest adjusted value.
TestResult bonferroni(const std::vector<double>& pvals, const std::vector<std::string>& labels = {});

nlohmann::ordered_json to_json(const TestResult& r);

} // namespace ivf::regress
