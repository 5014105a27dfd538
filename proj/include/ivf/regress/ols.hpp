#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivf/scm/dataset.hpp"

namespace ivf::regress {

inline constexpr const char* kIntercept = "(Intercept)";
/// A column is dropped when its norm after projecting out the earlier kept
/// columns falls below this fraction of its own norm.
inline constexpr double kDropTolerance = 1e-10;

enum class CovKind { classical, hc1, cr1 };

std::string to_string(CovKind k);
/// Accepts "classical", "hc1", "cr1" (case-insensitive); throws RegressionError.
CovKind cov_kind_from_string(const std::string& s);

struct RegressionFit {
    std::string response;
    std::vector<std::string> regressors; // intercept first when present
    Eigen::VectorXd coef;                // NaN for dropped columns
    std::vector<bool> dropped;
    std::vector<std::string> warnings;
    Eigen::VectorXd fitted, residuals;
    std::size_t n = 0;
    std::size_t rank = 0;

    // Kept-column design and (X'X)^-1 on the kept columns, used by vcov().
    Eigen::MatrixXd design;
    Eigen::MatrixXd xtx_inv;
    std::vector<std::size_t> kept;

    CovKind cov_kind = CovKind::classical;
    std::optional<std::string> cluster;
    std::size_t clusters = 0;
    Eigen::MatrixXd cov; // full size, NaN rows/cols for dropped columns

    double rss() const { return residuals.squaredNorm(); }
    /// Residual degrees of freedom n - rank.
    double df_resid() const { return static_cast<double>(n) - static_cast<double>(rank); }
    /// Throws RegressionError for an unknown name.
    std::size_t index(const std::string& name) const;
    double estimate(const std::string& name) const { return coef(static_cast<Eigen::Index>(index(name))); }
    double std_error(const std::string& name) const;
};

/// Least squares of `y` on the columns of `x` (which already include any
/// intercept column). Collinear columns are dropped in column order. The
/// result carries classical covariance.
RegressionFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                      std::string response = "y");

/// Regression of a dataset column on named columns, intercept prepended
/// unless `intercept` is false.
RegressionFit ols_fit(const scm::Dataset& data, const std::string& response, const std::vector<std::string>& regressors,
                      bool intercept = true);

/// Covariance of the kept coefficients embedded in a full-size matrix.
/// `clusters` holds one dense code per row and is required iff kind is cr1.
Eigen::MatrixXd vcov(const RegressionFit& fit, CovKind kind,
                     const std::vector<std::size_t>* clusters = nullptr);

/// Stores vcov() in `fit.cov` and records the kind.
void set_vcov(RegressionFit& fit, CovKind kind, const std::vector<std::size_t>* clusters = nullptr,
              std::optional<std::string> cluster_name = std::nullopt);

/// Number of distinct codes; throws for mismatched length.
std::size_t count_clusters(const std::vector<std::size_t>& codes, std::size_t n);

/// Residuals of each column of `y` regressed on `x` with an intercept.
Eigen::MatrixXd residualize(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

} // namespace ivf::regress
