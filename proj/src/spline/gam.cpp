#include "ivf/spline/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ivf/error.hpp"

namespace ivf::spline {

namespace {

struct Block {
    Eigen::Index offset = 0, width = 0;
    Eigen::MatrixXd root; // D Z: penalty = lambda * root' root
};

// Penalised least squares reduced to the p x p triangle of the design.
class Problem {
public:
    Problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<Block> blocks)
        : blocks_(std::move(blocks)), n_(static_cast<double>(x.rows())) {
        const Eigen::Index p = x.cols();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
        r0_ = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < p; ++j)
            if (!(std::abs(r0_(j, j)) > 1e-10 * std::max(1.0, x.col(j).norm())))
                throw SplineError("singular constrained system: design columns are collinear");
        const Eigen::VectorXd qty = qr.householderQ().adjoint() * y;
        f_ = qty.head(p);
        rss_perp_ = qty.tail(qty.size() - p).squaredNorm();
    }

    struct Solution {
        Eigen::VectorXd theta;
        double rss = 0.0, edf = 0.0, gcv = 0.0;
        std::vector<double> block_edf;
        Eigen::VectorXd diag; // diagonal of the influence map in coefficient space
    };

    Solution solve(const std::vector<double>& lambda) const {
        const Eigen::Index p = r0_.cols();
        Eigen::Index extra = 0;
        for (const auto& b : blocks_) extra += b.root.rows();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + extra, p);
        a.topRows(p) = r0_;
        Eigen::Index row = p;
        for (std::size_t t = 0; t < blocks_.size(); ++t) {
            const auto& b = blocks_[t];
            a.block(row, b.offset, b.root.rows(), b.width) = std::sqrt(lambda[t]) * b.root;
            row += b.root.rows();
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + extra);
        rhs.head(p) = f_;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        const Eigen::MatrixXd r1 = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
        Solution s;
        s.theta = qr.solve(rhs);
        s.rss = rss_perp_ + (f_ - r0_ * s.theta).squaredNorm();
        // influence in coefficient space: R1^-1 (R0 R1^-1)' R0
        const Eigen::MatrixXd r1inv = r1.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
        const Eigen::MatrixXd w = r0_ * r1inv;
        const Eigen::MatrixXd infl = r1inv * w.transpose() * r0_;
        s.diag = infl.diagonal();
        s.edf = s.diag.sum();
        for (const auto& b : blocks_) s.block_edf.push_back(s.diag.segment(b.offset, b.width).sum());
        const double denom = n_ - s.edf;
        s.gcv = denom > 0 ? n_ * s.rss / (denom * denom) : std::numeric_limits<double>::infinity();
        return s;
    }

private:
    std::vector<Block> blocks_;
    double n_;
    Eigen::MatrixXd r0_;
    Eigen::VectorXd f_;
    double rss_perp_ = 0.0;
};

} // namespace

std::vector<double> lambda_grid(const GamOptions& opt) {
    if (opt.grid_points < 1 || !(opt.lambda_min > 0) || !(opt.lambda_max >= opt.lambda_min))
        throw SplineError("invalid smoothing grid");
    std::vector<double> g;
    const double lo = std::log10(opt.lambda_min), hi = std::log10(opt.lambda_max);
    for (int i = 0; i < opt.grid_points; ++i)
        g.push_back(opt.grid_points == 1 ? opt.lambda_min : std::pow(10.0, lo + (hi - lo) * i / (opt.grid_points - 1)));
    return g;
}

Eigen::VectorXd GamFit::smooth_values(std::size_t i, const std::vector<double>& x) const {
    const auto& s = smooths.at(i);
    return bspline_basis(x, s.knots, s.term.degree) * s.coef;
}

GamFit fit_gam(const scm::Dataset& data, const std::string& response, const std::vector<std::string>& linear_terms,
               const std::vector<SmoothTerm>& smooth_terms, const GamOptions& opt) {
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto& yv = data.column(response);
    std::set<std::string> seen;
    for (const auto& l : linear_terms)
        if (!seen.insert(l).second) throw SplineError("term '" + l + "' listed twice");
    for (const auto& s : smooth_terms)
        if (!seen.insert(s.variable).second) throw SplineError("term '" + s.variable + "' listed twice");

    GamFit fit;
    fit.response = response;
    fit.linear_terms = linear_terms;
    fit.n = static_cast<std::size_t>(n);

    Eigen::Index p = 1 + static_cast<Eigen::Index>(linear_terms.size());
    std::vector<Eigen::MatrixXd> bases;
    for (const auto& t : smooth_terms) {
        if (t.lambda && !(*t.lambda >= 0.0)) throw SplineError("penalty weight must be non-negative");
        FittedSmooth fs;
        fs.term = t;
        const auto& x = data.column(t.variable);
        fs.knots = make_knots(x, t.degree, t.k);
        Eigen::MatrixXd b = bspline_basis(x, fs.knots, t.degree);
        // null space of the column sums via a Householder reflection
        Eigen::VectorXd c = b.colwise().sum().transpose();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(c)};
        Eigen::MatrixXd q = qr.householderQ();
        fs.constraint = q.rightCols(t.k - 1);
        bases.push_back(b * fs.constraint);
        p += t.k - 1;
        fit.smooths.push_back(std::move(fs));
    }
    if (n <= p)
        throw SplineError("need more rows than model columns (" + std::to_string(n) + " rows, " + std::to_string(p) +
                          " columns)");

    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    Eigen::Index col = 1;
    for (const auto& l : linear_terms) x.col(col++) = Eigen::Map<const Eigen::VectorXd>(data.column(l).data(), n);
    std::vector<Block> blocks;
    for (std::size_t t = 0; t < bases.size(); ++t) {
        Block b;
        b.offset = col;
        b.width = bases[t].cols();
        b.root = difference_penalty(fit.smooths[t].term.k) * fit.smooths[t].constraint;
        x.middleCols(col, b.width) = bases[t];
        col += b.width;
        blocks.push_back(std::move(b));
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), n);
    Problem prob(x, y, blocks);

    const auto grid = lambda_grid(opt);
    std::vector<double> lambda;
    std::vector<std::size_t> free;
    for (std::size_t t = 0; t < smooth_terms.size(); ++t) {
        if (smooth_terms[t].lambda) {
            lambda.push_back(*smooth_terms[t].lambda);
        } else {
            lambda.push_back(grid[grid.size() / 2]);
            free.push_back(t);
        }
    }
    for (int sweep = 0; sweep < opt.max_sweeps && !free.empty(); ++sweep) {
        bool changed = false;
        for (std::size_t t : free) {
            const double before = lambda[t];
            double best = std::numeric_limits<double>::infinity();
            double arg = before;
            for (double g : grid) {
                lambda[t] = g;
                const double score = prob.solve(lambda).gcv;
                if (score < best) {
                    best = score;
                    arg = g;
                }
            }
            lambda[t] = arg;
            changed = changed || arg != before;
        }
        if (!changed) break;
    }
    const auto sol = prob.solve(lambda);
    fit.linear_coef = sol.theta.head(1 + static_cast<Eigen::Index>(linear_terms.size()));
    for (std::size_t t = 0; t < fit.smooths.size(); ++t) {
        fit.smooths[t].coef = fit.smooths[t].constraint * sol.theta.segment(blocks[t].offset, blocks[t].width);
        fit.smooths[t].lambda = lambda[t];
        fit.smooths[t].edf = sol.block_edf[t];
    }
    fit.fitted = x * sol.theta;
    fit.residuals = y - fit.fitted;
    fit.edf = sol.edf;
    fit.gcv = sol.gcv;
    return fit;
}

GamFit extend_gam(const scm::Dataset& data, const GamFit& base, const std::vector<SmoothTerm>& extra,
                  const GamOptions& opt) {
    std::vector<SmoothTerm> terms;
    for (const auto& s : base.smooths) {
        terms.push_back(s.term);
        terms.back().lambda = s.lambda;
    }
    terms.insert(terms.end(), extra.begin(), extra.end());
    return fit_gam(data, base.response, base.linear_terms, terms, opt);
}

regress::TestResult gam_term_test(const GamFit& full, const GamFit& restricted) {
    auto vars = [](const GamFit& f) {
        std::set<std::string> s;
        for (const auto& t : f.smooths) s.insert(t.term.variable);
        return s;
    };
    const auto vf = vars(full), vr = vars(restricted);
    if (full.response != restricted.response || full.n != restricted.n || full.linear_terms != restricted.linear_terms ||
        !std::includes(vf.begin(), vf.end(), vr.begin(), vr.end()))
        throw SplineError("restricted model is not nested in the full model");
    const double n = static_cast<double>(full.n);
    regress::TestResult r;
    r.kind = regress::TestKind::gam_f;
    std::string tested;
    for (const auto& v : vf)
        if (!vr.count(v)) tested += (tested.empty() ? "" : ", ") + v;
    r.null = tested.empty() ? "no smooth terms tested" : "smooth terms in " + tested + " are zero";
    if (vf == vr) {
        r.statistic = 0.0;
        r.df = {0.0, n - full.edf};
        r.p_value = 1.0;
        return r;
    }
    const double d = full.edf - restricted.edf;
    if (!(d > 0.0)) throw SplineError("full model has no more effective degrees of freedom than the restricted one");
    const double rss_f = full.rss(), rss_r = restricted.rss();
    r.statistic = (std::max(0.0, rss_r - rss_f) / d) / (rss_f / (n - full.edf));
    r.df = {d, n - full.edf};
    r.p_value = regress::f_pvalue(r.statistic, r.df[0], r.df[1]);
    return r;
}

} // namespace ivf::spline
