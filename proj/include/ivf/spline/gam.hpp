#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivf/regress/inference.hpp"
#include "ivf/scm/dataset.hpp"
#include "ivf/spline/bspline.hpp"

namespace ivf::spline {

struct GamOptions {
    double lambda_min = 1e-4;
    double lambda_max = 1e6;
    int grid_points = 25;
    int max_sweeps = 10;
};

/// Log-spaced GCV grid from lambda_min to lambda_max.
std::vector<double> lambda_grid(const GamOptions& opt = {});

struct FittedSmooth {
    SmoothTerm term;
    std::vector<double> knots;
    Eigen::MatrixXd constraint; // k x (k-1) null-space basis of the sum-to-zero constraint
    Eigen::VectorXd coef;       // k spline coefficients (constraint applied)
    double lambda = 0.0;
    double edf = 0.0;
};

struct GamFit {
    std::string response;
    std::vector<std::string> linear_terms;
    Eigen::VectorXd linear_coef; // intercept first
    std::vector<FittedSmooth> smooths;
    Eigen::VectorXd fitted, residuals;
    std::size_t n = 0;
    double edf = 0.0; // trace of the hat matrix
    double gcv = 0.0;

    double rss() const { return residuals.squaredNorm(); }
    /// Value of smooth term i at new points (includes its centring).
    Eigen::VectorXd smooth_values(std::size_t i, const std::vector<double>& x) const;
};

/// Penalised least squares with an intercept, linear terms and P-spline
/// smooths. Each smooth is centred over the sample; its penalty weight is
/// fixed or chosen by GCV = n RSS / (n - tr A)^2 on the grid, one term at a
/// time until no weight changes (ties go to the smaller weight).
GamFit fit_gam(const scm::Dataset& data, const std::string& response, const std::vector<std::string>& linear_terms,
               const std::vector<SmoothTerm>& smooth_terms, const GamOptions& opt = {});

/// Refit of `base` with its penalty weights held fixed and `extra` smooths
/// appended (their own weights, if unset, chosen by GCV).
GamFit extend_gam(const scm::Dataset& data, const GamFit& base, const std::vector<SmoothTerm>& extra,
                  const GamOptions& opt = {});

/// Approximate F test that the smooths present only in `full` are zero:
/// [(RSS_r - RSS_f) / (edf_f - edf_r)] / [RSS_f / (n - edf_f)].
regress::TestResult gam_term_test(const GamFit& full, const GamFit& restricted);

} // namespace ivf::spline
