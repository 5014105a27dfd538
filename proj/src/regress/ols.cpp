#include "ivf/regress/ols.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "ivf/error.hpp"

namespace ivf::regress {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Greedy column selection by Householder reflections in column order.
std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a = x;
    const Eigen::Index n = a.rows();
    std::vector<std::size_t> kept;
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < a.cols() && r < n; ++j) {
        const double full = x.col(j).norm();
        const double rest = a.col(j).tail(n - r).norm();
        if (full == 0.0 || rest <= kDropTolerance * full) continue;
        Eigen::VectorXd v = a.col(j).tail(n - r);
        const double alpha = v(0) >= 0 ? -rest : rest;
        v(0) -= alpha;
        const double vn = v.squaredNorm();
        if (vn > 0)
            for (Eigen::Index c = j; c < a.cols(); ++c) {
                auto col = a.col(c).tail(n - r);
                col -= (2.0 * v.dot(col) / vn) * v;
            }
        kept.push_back(static_cast<std::size_t>(j));
        ++r;
    }
    return kept;
}

} // namespace

std::string to_string(CovKind k) {
    switch (k) {
    case CovKind::classical:
        return "classical";
    case CovKind::hc1:
        return "hc1";
    case CovKind::cr1:
        return "cr1";
    }
    return "classical";
}

CovKind cov_kind_from_string(const std::string& s) {
    std::string l;
    for (char c : s) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l == "classical") return CovKind::classical;
    if (l == "hc1") return CovKind::hc1;
    if (l == "cr1") return CovKind::cr1;
    throw RegressionError("unknown covariance kind '" + s + "' (expected classical, hc1 or cr1)");
}

std::size_t RegressionFit::index(const std::string& name) const {
    auto it = std::find(regressors.begin(), regressors.end(), name);
    if (it == regressors.end()) throw RegressionError("no coefficient named '" + name + "'");
    return static_cast<std::size_t>(it - regressors.begin());
}

double RegressionFit::std_error(const std::string& name) const {
    const auto i = static_cast<Eigen::Index>(index(name));
    return std::sqrt(cov(i, i));
}

RegressionFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                      std::string response) {
    if (x.cols() == 0) throw RegressionError("empty regressor list");
    if (static_cast<std::size_t>(x.cols()) != names.size()) throw RegressionError("regressor names do not match design");
    if (x.rows() != y.size()) throw RegressionError("response length does not match design");
    if (x.rows() <= x.cols())
        throw RegressionError("need more rows than regressors (" + std::to_string(x.rows()) + " rows, " +
                              std::to_string(x.cols()) + " regressors)");
    if (!x.allFinite() || !y.allFinite()) throw RegressionError("non-finite values in regression data");

    RegressionFit fit;
    fit.response = std::move(response);
    fit.regressors = std::move(names);
    fit.n = static_cast<std::size_t>(x.rows());
    fit.kept = independent_columns(x);
    fit.rank = fit.kept.size();
    if (fit.rank == 0) throw RegressionError("design matrix has rank zero");
    fit.dropped.assign(fit.regressors.size(), true);
    for (std::size_t j : fit.kept) fit.dropped[j] = false;
    for (std::size_t j = 0; j < fit.regressors.size(); ++j)
        if (fit.dropped[j]) fit.warnings.push_back("column '" + fit.regressors[j] + "' is collinear and was dropped");

    fit.design.resize(x.rows(), static_cast<Eigen::Index>(fit.rank));
    for (std::size_t c = 0; c < fit.rank; ++c) fit.design.col(static_cast<Eigen::Index>(c)) = x.col(fit.kept[c]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(fit.design);
    const Eigen::VectorXd beta = qr.solve(y);
    const auto k = static_cast<Eigen::Index>(fit.rank);
    Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    fit.xtx_inv = rinv * rinv.transpose();

    fit.coef = Eigen::VectorXd::Constant(x.cols(), kNaN);
    for (std::size_t c = 0; c < fit.rank; ++c) fit.coef(static_cast<Eigen::Index>(fit.kept[c])) = beta(c);
    fit.fitted = fit.design * beta;
    fit.residuals = y - fit.fitted;
    set_vcov(fit, CovKind::classical);
    return fit;
}

RegressionFit ols_fit(const scm::Dataset& data, const std::string& response, const std::vector<std::string>& regressors,
                      bool intercept) {
    if (regressors.empty() && !intercept) throw RegressionError("empty regressor list without intercept");
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto& yv = data.column(response);
    std::vector<std::string> names;
    if (intercept) names.emplace_back(kIntercept);
    for (const auto& r : regressors) {
        if (std::find(names.begin(), names.end(), r) != names.end())
            throw RegressionError("regressor '" + r + "' listed twice");
        names.push_back(r);
    }
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
    Eigen::Index c = 0;
    if (intercept) x.col(c++).setOnes();
    for (const auto& r : regressors) x.col(c++) = Eigen::Map<const Eigen::VectorXd>(data.column(r).data(), n);
    return ols_fit(x, Eigen::Map<const Eigen::VectorXd>(yv.data(), n), std::move(names), response);
}

std::size_t count_clusters(const std::vector<std::size_t>& codes, std::size_t n) {
    if (codes.size() != n)
        throw RegressionError("cluster codes have " + std::to_string(codes.size()) + " entries for " +
                              std::to_string(n) + " rows");
    std::vector<std::size_t> sorted(codes);
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

Eigen::MatrixXd vcov(const RegressionFit& fit, CovKind kind, const std::vector<std::size_t>* clusters) {
    if ((kind == CovKind::cr1) != (clusters != nullptr))
        throw RegressionError(kind == CovKind::cr1 ? "cluster-robust covariance needs a cluster column"
                                                   : "a cluster column is only used with cr1 covariance");
    const double n = static_cast<double>(fit.n);
    const double k = static_cast<double>(fit.rank);
    const Eigen::MatrixXd& x = fit.design;
    const Eigen::VectorXd& e = fit.residuals;
    Eigen::MatrixXd v;
    switch (kind) {
    case CovKind::classical:
        v = (e.squaredNorm() / (n - k)) * fit.xtx_inv;
        break;
    case CovKind::hc1: {
        const Eigen::MatrixXd xe = x.array().colwise() * e.array();
        v = (n / (n - k)) * fit.xtx_inv * (xe.transpose() * xe) * fit.xtx_inv;
        break;
    }
    case CovKind::cr1: {
        const std::size_t g = count_clusters(*clusters, fit.n);
        if (g < 2) throw RegressionError("cluster-robust covariance needs at least 2 clusters, found " +
                                         std::to_string(g));
        const std::size_t top = *std::max_element(clusters->begin(), clusters->end());
        Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(top + 1), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            scores.row(static_cast<Eigen::Index>((*clusters)[i])) += e(i) * x.row(i);
        const double gd = static_cast<double>(g);
        v = (gd / (gd - 1.0) * (n - 1.0) / (n - k)) * fit.xtx_inv * (scores.transpose() * scores) * fit.xtx_inv;
        break;
    }
    }
    v = (0.5 * (v + v.transpose())).eval();
    const auto p = static_cast<Eigen::Index>(fit.regressors.size());
    Eigen::MatrixXd full = Eigen::MatrixXd::Constant(p, p, kNaN);
    for (std::size_t a = 0; a < fit.rank; ++a)
        for (std::size_t b = 0; b < fit.rank; ++b)
            full(static_cast<Eigen::Index>(fit.kept[a]), static_cast<Eigen::Index>(fit.kept[b])) =
                v(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    return full;
}

void set_vcov(RegressionFit& fit, CovKind kind, const std::vector<std::size_t>* clusters,
              std::optional<std::string> cluster_name) {
    if (kind != CovKind::cr1) clusters = nullptr;
    fit.cov = vcov(fit, kind, clusters);
    fit.cov_kind = kind;
    fit.clusters = clusters ? count_clusters(*clusters, fit.n) : 0;
    fit.cluster = kind == CovKind::cr1 ? std::move(cluster_name) : std::nullopt;
}

Eigen::MatrixXd residualize(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd design(x.rows(), x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    const auto kept = independent_columns(design);
    Eigen::MatrixXd basis(x.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = design.col(kept[c]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    return y - basis * qr.solve(y);
}

} // namespace ivf::regress
