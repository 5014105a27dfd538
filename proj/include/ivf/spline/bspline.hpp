#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ivf::spline {

struct SmoothTerm {
    std::string variable;
    int degree = 3;
    int k = 10; // number of basis functions
    /// Fixed penalty weight; when empty the weight is chosen by GCV.
    std::optional<double> lambda;
};

/// Clamped knot vector of length k + degree + 1: degree + 1 copies of each
/// end of the data range and k - degree - 1 interior knots at quantiles of
/// the distinct data values. Throws SplineError for constant x or k < degree + 1.
std::vector<double> make_knots(const std::vector<double>& x, int degree, int k);

/// n x k Cox-de Boor basis. Points outside the knot range are clamped to it;
/// the right end belongs to the last interval.
Eigen::MatrixXd bspline_basis(const std::vector<double>& x, const std::vector<double>& knots, int degree);

/// Basis with knots placed from x itself.
Eigen::MatrixXd bspline_basis(const std::vector<double>& x, const SmoothTerm& term);

/// (k-2) x k second-difference matrix (empty for k < 3).
Eigen::MatrixXd difference_penalty(int k, int order = 2);

} // namespace ivf::spline
