#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ivf/error.hpp"
#include "ivf/regress/ols.hpp"
#include "ivf/spline/bspline.hpp"
#include "ivf/spline/gam.hpp"

using namespace ivf::spline;
using ivf::scm::Dataset;

namespace {

double hat(double x, double l, double c, double r) {
    if (x < l || x > r) return 0.0;
    if (x <= c) return c > l ? (x - l) / (c - l) : 1.0;
    return r > c ? (r - x) / (r - c) : 1.0;
}

std::vector<double> uniform_draws(std::mt19937_64& rng, int n, double a = 0.0, double b = 1.0) {
    std::uniform_real_distribution<double> u(a, b);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

} // namespace

TEST_CASE("knot placement") {
    std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    auto k = make_knots(x, 3, 6);
    REQUIRE(k.size() == 10);
    CHECK(std::vector<double>(k.begin(), k.begin() + 4) == std::vector<double>(4, 0.0));
    CHECK(std::vector<double>(k.end() - 4, k.end()) == std::vector<double>(4, 8.0));
    CHECK(k[4] == doctest::Approx(8.0 / 3.0));
    CHECK(k[5] == doctest::Approx(16.0 / 3.0));
    CHECK(std::is_sorted(k.begin(), k.end()));
    CHECK_THROWS_WITH_AS(make_knots({2, 2, 2}, 3, 6), doctest::Contains("constant"), ivf::SplineError);
    CHECK_THROWS_AS(make_knots(x, 3, 3), ivf::SplineError);
    CHECK_THROWS_AS(make_knots({0, 1, 2}, 3, 10), ivf::SplineError);
}

TEST_CASE("step basis") {
    std::vector<double> x = {0.0, 0.2, 0.49, 0.5, 0.8, 1.0};
    Eigen::MatrixXd b = bspline_basis(x, {0.0, 0.5, 1.0}, 0);
    REQUIRE(b.cols() == 2);
    for (int i = 0; i < 6; ++i) {
        CHECK(b(i, 0) == (x[i] < 0.5 ? 1.0 : 0.0));
        CHECK(b(i, 1) == (x[i] < 0.5 ? 0.0 : 1.0));
    }
}

TEST_CASE("partition of unity") {
    std::mt19937_64 rng(1);
    for (int degree = 0; degree <= 4; ++degree)
        for (int k : {degree + 1, degree + 3, 10, 14}) {
            auto x = uniform_draws(rng, 300, -2, 5);
            Eigen::MatrixXd b = bspline_basis(x, SmoothTerm{"x", degree, k, std::nullopt});
            CHECK(b.cols() == k);
            CHECK((b.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
            CHECK(b.minCoeff() >= 0.0);
        }
}

TEST_CASE("linear basis equals hat functions") {
    std::vector<double> knots = {0, 0, 0.3, 0.45, 0.8, 1, 1};
    std::vector<double> x;
    for (int i = 0; i <= 100; ++i) x.push_back(i / 100.0);
    Eigen::MatrixXd b = bspline_basis(x, knots, 1);
    REQUIRE(b.cols() == 5);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (int j = 0; j < 5; ++j) CHECK(std::abs(b(i, j) - hat(x[i], knots[j], knots[j + 1], knots[j + 2])) < 1e-14);
}

TEST_CASE("difference penalty") {
    Eigen::MatrixXd d = difference_penalty(4);
    Eigen::MatrixXd e(2, 4);
    e << 1, -2, 1, 0, 0, 1, -2, 1;
    CHECK(d == e);
    CHECK(difference_penalty(2).rows() == 0);
}

TEST_CASE("heavy penalty leaves a linear trend") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    auto x = uniform_draws(rng, 400);
    std::vector<double> y(400);
    for (int i = 0; i < 400; ++i) y[i] = std::sin(6 * x[i]) + 0.3 * z(rng);
    Dataset d;
    d.add_column("x", x);
    d.add_column("y", y);
    auto fit = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, 1e12}});
    CHECK(std::abs(fit.smooths[0].edf - 1.0) < 1e-4);
    const auto& c = fit.smooths[0].coef;
    for (int j = 2; j < c.size(); ++j) CHECK(std::abs(c(j) - 2 * c(j - 1) + c(j - 2)) < 1e-6);

    double prev = 1e9;
    for (double lam : lambda_grid()) {
        auto f = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, lam}});
        CHECK(f.smooths[0].edf <= prev + 1e-10);
        CHECK(f.smooths[0].edf > 0.0);
        CHECK(f.smooths[0].edf <= 10.0);
        prev = f.smooths[0].edf;
    }
}

TEST_CASE("unpenalised fit interpolates group means") {
    std::vector<double> x, y;
    for (int g = 0; g < 6; ++g)
        for (int r = 0; r < 3; ++r) {
            x.push_back(g * g);
            y.push_back(std::cos(g) + 0.1 * r);
        }
    Dataset d;
    d.add_column("x", x);
    d.add_column("y", y);
    auto fit = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 6, 0.0}});
    for (int g = 0; g < 6; ++g)
        for (int r = 0; r < 3; ++r) CHECK(std::abs(fit.fitted(3 * g + r) - (std::cos(g) + 0.1)) < 1e-9);
    CHECK(std::abs(fit.edf - 6.0) < 1e-8);

    auto penalised = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 6, 10.0}});
    CHECK(penalised.rss() >= fit.rss());
    CHECK(penalised.edf <= 6.0);
}

TEST_CASE("linear smooths reproduce least squares") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    const int n = 200;
    std::vector<double> a(n), b(n), c(n), y(n);
    for (int i = 0; i < n; ++i) {
        a[i] = z(rng);
        b[i] = z(rng);
        c[i] = z(rng);
        y[i] = 1 + a[i] - 2 * b[i] + 0.5 * c[i] + z(rng);
    }
    Dataset d;
    d.add_column("a", a);
    d.add_column("b", b);
    d.add_column("c", c);
    d.add_column("y", y);
    auto ols = ivf::regress::ols_fit(d, "y", {"a", "b", "c"});
    auto gam = fit_gam(d, "y", {"a"}, {SmoothTerm{"b", 1, 2, 0.0}, SmoothTerm{"c", 1, 2, 0.0}});
    CHECK(std::abs(gam.linear_coef(1) - ols.estimate("a")) < 1e-8 * std::abs(ols.estimate("a")));
    CHECK((gam.fitted - ols.fitted).norm() < 1e-8 * ols.fitted.norm());
    // slope of the smooth on b
    auto s = gam.smooth_values(0, {0.0, 1.0});
    CHECK(std::abs((s(1) - s(0)) - ols.estimate("b")) < 1e-8 * std::abs(ols.estimate("b")));
    CHECK(std::abs(gam.edf - 4.0) < 1e-8);
}

TEST_CASE("smooth beats a line on a sine") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    const int n = 2000;
    auto x = uniform_draws(rng, n);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(2 * std::numbers::pi * x[i]) + 0.5 * z(rng);
    Dataset d;
    d.add_column("x", x);
    d.add_column("y", y);
    auto gam = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, std::nullopt}});
    auto line = ivf::regress::ols_fit(d, "y", {"x"});
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(i / 200.0);
    auto s = gam.smooth_values(0, grid);
    double ise_gam = 0, ise_line = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double truth = std::sin(2 * std::numbers::pi * grid[i]);
        const double g = gam.linear_coef(0) + s(i);
        const double l = line.estimate(ivf::regress::kIntercept) + line.estimate("x") * grid[i];
        ise_gam += (g - truth) * (g - truth);
        ise_line += (l - truth) * (l - truth);
    }
    CHECK(ise_gam < 0.1 * ise_line);
    CHECK(gam.smooths[0].edf > 3.0);
}

TEST_CASE("GCV is deterministic") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    const int n = 300;
    auto x = uniform_draws(rng, n), w = uniform_draws(rng, n);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = x[i] * x[i] + std::cos(4 * w[i]) + 0.2 * z(rng);
    Dataset d;
    d.add_column("x", x);
    d.add_column("w", w);
    d.add_column("y", y);
    auto a = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, std::nullopt}, SmoothTerm{"w", 3, 10, std::nullopt}});
    auto b = fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, std::nullopt}, SmoothTerm{"w", 3, 10, std::nullopt}});
    CHECK(a.fitted == b.fitted);
    const auto grid = lambda_grid();
    CHECK(grid.size() == 25);
    CHECK(grid.front() == doctest::Approx(1e-4));
    CHECK(grid.back() == doctest::Approx(1e6));
    for (const auto& s : a.smooths)
        CHECK(std::find(grid.begin(), grid.end(), s.lambda) != grid.end());
    // the chosen weights minimise GCV along each coordinate
    for (std::size_t t = 0; t < 2; ++t)
        for (double lam : grid) {
            std::vector<SmoothTerm> terms = {SmoothTerm{"x", 3, 10, a.smooths[0].lambda},
                                             SmoothTerm{"w", 3, 10, a.smooths[1].lambda}};
            terms[t].lambda = lam;
            CHECK(fit_gam(d, "y", {}, terms).gcv >= a.gcv - 1e-12 * a.gcv);
        }
}

TEST_CASE("gam fit preconditions") {
    Dataset d;
    d.add_column("x", {0, 1, 2, 3, 4});
    d.add_column("y", {1, 0, 1, 0, 1});
    CHECK_THROWS_AS(fit_gam(d, "y", {}, {SmoothTerm{"x", 3, 10, std::nullopt}}), ivf::SplineError);
    Dataset c;
    c.add_column("x", {1, 1, 1, 1, 1, 1});
    c.add_column("y", {1, 0, 1, 0, 1, 0});
    CHECK_THROWS_AS(fit_gam(c, "y", {}, {SmoothTerm{"x", 1, 2, 0.0}}), ivf::SplineError);
}

TEST_CASE("term test") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    const int n = 1000;
    std::vector<double> c(n), nc(n), y(n), q(n);
    for (int i = 0; i < n; ++i) {
        c[i] = z(rng);
        nc[i] = z(rng);
        y[i] = c[i] + z(rng);
        q[i] = c[i] + nc[i] * nc[i] + z(rng);
    }
    Dataset d;
    d.add_column("C", c);
    d.add_column("NC", nc);
    d.add_column("Y", y);
    d.add_column("Q", q);
    auto restricted = fit_gam(d, "Y", {"C"}, {});
    auto same = gam_term_test(restricted, restricted);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK(same.kind == ivf::regress::TestKind::gam_f);

    auto detect_full = fit_gam(d, "Q", {"C"}, {SmoothTerm{"NC", 3, 10, std::nullopt}});
    auto detect_restricted = fit_gam(d, "Q", {"C"}, {});
    auto r = gam_term_test(detect_full, detect_restricted);
    CHECK(r.p_value < 1e-6);
    CHECK(r.df.size() == 2);
    CHECK(r.df[0] == doctest::Approx(detect_full.edf - detect_restricted.edf));

    CHECK_THROWS_AS(gam_term_test(detect_full, restricted), ivf::SplineError);
    CHECK_THROWS_AS(gam_term_test(detect_restricted, detect_full), ivf::SplineError);
}

TEST_CASE("extended fit keeps the base weights") {
    std::mt19937_64 rng(8);
    auto c = uniform_draws(rng, 300), nc = uniform_draws(rng, 300), y = uniform_draws(rng, 300);
    Dataset d;
    d.add_column("C", c);
    d.add_column("NC", nc);
    d.add_column("Y", y);
    auto base = fit_gam(d, "Y", {}, {SmoothTerm{"C", 3, 10, std::nullopt}});
    auto ext = extend_gam(d, base, {SmoothTerm{"NC", 3, 8, 0.0}});
    REQUIRE(ext.smooths.size() == 2);
    CHECK(ext.smooths[0].lambda == base.smooths[0].lambda);
    CHECK(ext.smooths[1].lambda == 0.0);
    CHECK(std::abs(ext.smooths[1].edf - 7.0) < 0.05);
    CHECK(ext.rss() <= base.rss());
}

TEST_CASE("term test size under the null") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    const int n = 500, reps = 300;
    int rejections = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> c(n), nc(n), y(n);
        for (int i = 0; i < n; ++i) {
            c[i] = z(rng);
            nc[i] = z(rng);
            y[i] = c[i] + z(rng);
        }
        Dataset d;
        d.add_column("C", c);
        d.add_column("NC", nc);
        d.add_column("Y", y);
        // smooth control, unpenalised NC block added to the restricted fit
        auto restricted = fit_gam(d, "Y", {}, {SmoothTerm{"C", 3, 10, std::nullopt}});
        auto full = extend_gam(d, restricted, {SmoothTerm{"NC", 3, 10, 0.0}});
        rejections += gam_term_test(full, restricted).p_value < 0.05;
    }
    const double rate = double(rejections) / reps;
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.09);
}
