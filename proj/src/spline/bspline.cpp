#include "ivf/spline/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "ivf/error.hpp"

namespace ivf::spline {

std::vector<double> make_knots(const std::vector<double>& x, int degree, int k) {
    if (degree < 0) throw SplineError("spline degree must be non-negative");
    if (k < degree + 1)
        throw SplineError("need at least degree + 1 = " + std::to_string(degree + 1) + " basis functions, got " +
                          std::to_string(k));
    std::vector<double> u(x);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    if (u.size() < 2) throw SplineError("cannot build a spline basis on a constant variable");
    if (u.size() < static_cast<std::size_t>(k))
        throw SplineError("variable has " + std::to_string(u.size()) + " distinct values, fewer than the " +
                          std::to_string(k) + " basis functions requested");
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), u.front());
    const int interior = k - degree - 1;
    const double m = static_cast<double>(u.size() - 1);
    for (int j = 1; j <= interior; ++j) {
        const double pos = m * j / (interior + 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        knots.push_back(lo + 1 < u.size() ? u[lo] + frac * (u[lo + 1] - u[lo]) : u[lo]);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), u.back());
    return knots;
}

Eigen::MatrixXd bspline_basis(const std::vector<double>& x, const std::vector<double>& knots, int degree) {
    const int k = static_cast<int>(knots.size()) - degree - 1;
    if (degree < 0 || k < 1) throw SplineError("knot vector too short for the spline degree");
    if (!std::is_sorted(knots.begin(), knots.end())) throw SplineError("knots must be nondecreasing");
    const double lo = knots[static_cast<std::size_t>(degree)];
    const double hi = knots[static_cast<std::size_t>(k)];
    if (!(hi > lo)) throw SplineError("knot range is empty");

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), k);
    std::vector<double> n(knots.size());
    for (std::size_t r = 0; r < x.size(); ++r) {
        const double v = std::clamp(x[r], lo, hi);
        // degree-0 indicator of the span containing v; right end joins the last span
        std::fill(n.begin(), n.end(), 0.0);
        std::size_t span = static_cast<std::size_t>(degree);
        while (span + 1 < static_cast<std::size_t>(k) && !(v < knots[span + 1])) ++span;
        n[span] = 1.0;
        for (int p = 1; p <= degree; ++p)
            for (std::size_t i = 0; i + static_cast<std::size_t>(p) + 1 < knots.size(); ++i) {
                double val = 0.0;
                const double d1 = knots[i + p] - knots[i];
                const double d2 = knots[i + p + 1] - knots[i + 1];
                if (d1 > 0) val += (v - knots[i]) / d1 * n[i];
                if (d2 > 0) val += (knots[i + p + 1] - v) / d2 * n[i + 1];
                n[i] = val;
            }
        for (int j = 0; j < k; ++j) b(static_cast<Eigen::Index>(r), j) = n[static_cast<std::size_t>(j)];
    }
    return b;
}

Eigen::MatrixXd bspline_basis(const std::vector<double>& x, const SmoothTerm& term) {
    return bspline_basis(x, make_knots(x, term.degree, term.k), term.degree);
}

Eigen::MatrixXd difference_penalty(int k, int order) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
    for (int o = 0; o < order && d.rows() > 0; ++o) {
        const Eigen::Index r = d.rows() - 1;
        d = (d.bottomRows(r) - d.topRows(r)).eval();
    }
    return d;
}

} // namespace ivf::spline
