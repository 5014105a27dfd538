#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "../common/scm_oracles.hpp"
#include "ivf/error.hpp"
#include "ivf/scm/dataset.hpp"
#include "ivf/scm/pmf.hpp"
#include "ivf/scm/rng.hpp"
#include "ivf/scm/scenarios.hpp"
#include "ivf/scm/scm_json.hpp"

using namespace ivf::scm;

TEST_CASE("philox known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are addressable and distinct") {
    Stream a(7, 3, 1, 0), b(7, 3, 1, 0), c(7, 3, 1, 1), d(7, 4, 1, 0);
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x != c.uniform());
    CHECK(x != d.uniform());
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 5) == derive_seed(1, 5));

    Stream s(11, 0, 0, 0);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("dataset csv round trip") {
    Dataset d;
    d.add_column("a", {1.0, 0.1, -2.5e-12});
    d.add_column("b", {3.0, 4.0, 5.0});
    d.set_clusters("g", {"x", "y", "x"});
    std::stringstream ss;
    write_csv(ss, d);
    CHECK(ss.str() == "a,b,g\n1,3,x\n0.1,4,y\n-2.5e-12,5,x\n");
    Dataset e = read_csv(ss, std::string("g"));
    CHECK(e.column("a") == d.column("a"));
    CHECK(e.cluster_count() == 2);
    CHECK(e.cluster_codes() == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("dataset rejects bad input") {
    std::stringstream missing("a,b\n1,\n");
    CHECK_THROWS_WITH_AS(read_csv(missing), doctest::Contains("missing value"), ivf::DataError);
    std::stringstream na("a\nNA\n");
    CHECK_THROWS_AS(read_csv(na), ivf::DataError);
    std::stringstream dup("a,a\n1,2\n");
    CHECK_THROWS_WITH_AS(read_csv(dup), doctest::Contains("duplicate"), ivf::DataError);
    std::stringstream ragged("a,b\n1,2,3\n");
    CHECK_THROWS_AS(read_csv(ragged), ivf::DataError);
    Dataset d;
    d.add_column("a", {1, 2});
    CHECK_THROWS_AS(d.add_column("b", {1}), ivf::DataError);
    CHECK_THROWS_AS(d.column("zz"), ivf::DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), ivf::IoError);
}

TEST_CASE("sampling is deterministic and thread invariant") {
    ScmSpec spec({{"A", Distribution::gaussian(0, 1)}});
    Dataset a = sample(spec, 5, 7), b = sample(spec, 5, 7);
    CHECK(a.column("A") == b.column("A"));
    CHECK(sample(spec, 5, 8).column("A") != a.column("A"));
    CHECK_THROWS_AS(sample(spec, 0, 7), ivf::ScmError);

    Scenario sc = scenario("fig1a", {{"suspect", "on"}});
    Dataset one = sample(sc.spec, 1001, 3, 1), four = sample(sc.spec, 1001, 3, 4);
    for (const auto& n : one.names()) CHECK(one.column(n) == four.column(n));
}

TEST_CASE("linear gaussian moments") {
    // Y = (Z) + 2W + eX + U1 + eY with Z = eZ: mean 0, variance 8
    Scenario sc = scenario("fig1a");
    const std::size_t n = 100000;
    Dataset d = sample(sc.spec, n, 2024);
    const auto& y = d.column("Y");
    double mean = 0, var = 0;
    for (double v : y) mean += v;
    mean /= n;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= (n - 1);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(8.0) / std::sqrt(double(n)));
    CHECK(std::abs(var - 8.0) < 0.15);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(ScmSpec({{"A", Distribution::bernoulli(1.5)}}), ivf::ScmError);
    CHECK_THROWS_AS(ScmSpec({{"A", Distribution::gaussian(0, -1)}}), ivf::ScmError);
    CHECK_THROWS_AS(ScmSpec({{"A", Distribution::discrete({0, 1}, {0.5, 0.6})}}), ivf::ScmError);
    Equation e;
    e.terms = {Term::linear("B", 1)};
    Equation f;
    f.terms = {Term::linear("A", 1)};
    CHECK_THROWS_WITH_AS(ScmSpec({{"A", e}, {"B", f}}), doctest::Contains("cycle"), ivf::ScmError);
    Equation g;
    g.terms = {Term::linear("Q", 1)};
    CHECK_THROWS_AS(ScmSpec({{"A", g}}), ivf::ScmError);
}

TEST_CASE("exact joint") {
    JointPmf p = exact_joint(ScmSpec({{"A", Distribution::bernoulli(0.3)}}));
    CHECK(p.table().size() == 2);
    CHECK(p.probability({{"A", 1.0}}) == exact(0.3));
    CHECK(p.probability({{"A", 0.0}}) == 1 - exact(0.3));
    CHECK(p.total() == 1);
    CHECK(exact(0.5) == Rational(1, 2));
    CHECK(exact(0.3) != Rational(3, 10));
    CHECK(abs(exact(0.3) - Rational(3, 10)) < Rational(1, 1000000000000LL));
    CHECK_THROWS_AS(exact_joint(ScmSpec({{"A", Distribution::gaussian(0, 1)}})), ivf::ScmError);

    Scenario x = scenario("d5", {{"theta", "0"}, {"p1", "0.5"}, {"discrete", "true"}});
    std::size_t states = 0;
    for_each_state(x.spec, kDefaultStateCap, [&](const std::vector<double>&, const Rational& pr) {
        ++states;
        CHECK(pr == Rational(1, 8));
    });
    CHECK(states == 8);
    JointPmf joint = exact_joint(x.spec);
    CHECK(joint.probability({{"Z", 1.0}}) == Rational(1, 2));

    std::vector<NodeSpec> many;
    for (int i = 0; i < 25; ++i) many.push_back({"B" + std::to_string(i), Distribution::bernoulli(0.5)});
    CHECK_THROWS_WITH_AS(exact_joint(ScmSpec(many)), doctest::Contains("cap"), ivf::ScmError);
}

TEST_CASE("xor counterexample independencies") {
    Scenario x = scenario("d5", {{"theta", "0"}, {"p1", "0.5"}, {"discrete", "true"}});
    JointPmf p = exact_joint(x.spec);
    CHECK(ci_oracle(p, {"NC1"}, {"Z"}, {}));
    CHECK(ci_oracle(p, {"NC2"}, {"Z"}, {}));
    CHECK(ci_oracle(p, {"NC1"}, {"Z"}, {"U"}));
    CHECK_FALSE(ci_oracle(p, {"NC1", "NC2"}, {"Z"}, {}));
    CHECK_FALSE(ci_oracle(p, {"NC1", "NC2"}, {"Z"}, {"U"}));

    // with P(U=1) = 1/2, NC2 stays marginally independent of Z for any p1
    JointPmf half = exact_joint(scenario("d5", {{"p1", "0.6"}, {"discrete", "true"}}).spec);
    CHECK(ci_oracle(half, {"NC2"}, {"Z"}, {}));
    CHECK_FALSE(ci_oracle(half, {"NC2"}, {"Z"}, {"U"}));
    JointPmf skew = exact_joint(scenario("d5", {{"p1", "0.6"}, {"pu", "0.3"}, {"discrete", "true"}}).spec);
    CHECK_FALSE(ci_oracle(skew, {"NC2"}, {"Z"}, {}));
    CHECK(ci_oracle(skew, {"NC1"}, {"Z"}, {"U"}));

    JointPmf coins = exact_joint(ScmSpec({{"A", Distribution::bernoulli(0.3)}, {"B", Distribution::bernoulli(0.6)}}));
    CHECK(ci_oracle(coins, {"A"}, {"B"}, {}));
    CHECK_THROWS_AS(ci_oracle(coins, {"A"}, {"Q"}, {}), ivf::ScmError);
    CHECK_THROWS_AS(ci_oracle(coins, {"A"}, {"A"}, {}), ivf::ScmError);
}

TEST_CASE("contraction on random pmfs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    auto random_cond = [&](std::size_t k) {
        std::vector<double> w(k);
        double t = 0;
        for (auto& x : w) t += (x = u(rng));
        for (auto& x : w) x /= t;
        return w;
    };
    for (int rep = 0; rep < 500; ++rep) {
        // P(d) P(b|d) P(q|d) P(a|d,q): B independent of (A, Q) given D
        JointPmf::Table t;
        auto pd = random_cond(2);
        for (int d = 0; d < 2; ++d) {
            auto pb = random_cond(3), pq = random_cond(2);
            for (int q = 0; q < 2; ++q) {
                auto pa = random_cond(2);
                for (int b = 0; b < 3; ++b)
                    for (int a = 0; a < 2; ++a)
                        t[{double(a), double(b), double(d), double(q)}] =
                            exact(pd[d]) * exact(pb[b]) * exact(pq[q]) * exact(pa[a]);
            }
        }
        JointPmf p({"A", "B", "D", "Q"}, t);
        REQUIRE(ci_oracle(p, {"A"}, {"B"}, {"D", "Q"}));
        REQUIRE(ci_oracle(p, {"B"}, {"Q"}, {"D"}));
        CHECK(ci_oracle(p, {"A"}, {"B"}, {"D"}));
    }
}

TEST_CASE("interventions") {
    Scenario sc = scenario("fig1a", {{"discrete", "true"}});
    ScmSpec done = intervene(sc.spec, {{"X", 1.0}});
    JointPmf p = exact_joint(done);
    CHECK(p.probability({{"X", 1.0}}) == 1);
    CHECK_THROWS_AS(intervene(sc.spec, {{"Q", 1.0}}), ivf::ScmError);

    // exclusion: Y under do(Z=z, X=x) does not depend on z
    for (double x : {-1.0, 1.0}) {
        JointPmf a = exact_joint(intervene(sc.spec, {{"Z", -1.0}, {"X", x}})).marginal({"Y"});
        JointPmf b = exact_joint(intervene(sc.spec, {{"Z", 1.0}, {"X", x}})).marginal({"Y"});
        CHECK(a.table() == b.table());
    }

    // parents of U2 exclude X: its law is unchanged by do(X)
    Scenario b1 = scenario("fig1b", {{"discrete", "true"}, {"suspect", "on"}});
    CHECK(exact_joint(b1.spec).marginal({"U2"}).table() ==
          exact_joint(intervene(b1.spec, {{"X", 1.0}})).marginal({"U2"}).table());
}

TEST_CASE("potential-outcome independence oracle") {
    CHECK(po_independence_oracle(scenario("fig1a", {{"discrete", "true"}}).spec, {}));
    CHECK_FALSE(po_independence_oracle(scenario("fig1a", {{"discrete", "true"}, {"suspect", "on"}}).spec, {}));
    CHECK_FALSE(po_independence_oracle(scenario("fig1b", {{"discrete", "true"}, {"suspect", "on"}}).spec, {}));
    CHECK(po_independence_oracle(scenario("fig1b", {{"discrete", "true"}}).spec, {}));

    ScmSpec coin({{"Z", Distribution::bernoulli(0.5)},
                  {"U", Distribution::bernoulli(0.4)},
                  {"X", Equation{0.0, {Term::linear("Z", 1.0), Term::linear("U", 1.0)}, std::nullopt}},
                  {"Y", Equation{0.0, {Term::linear("X", 2.0), Term::linear("U", 1.0)}, std::nullopt}}});
    coin.iv = "Z";
    coin.treatment = "X";
    coin.outcome = "Y";
    CHECK(po_independence_oracle(coin, {}));
    CHECK_THROWS_AS(po_independence_oracle(ScmSpec({{"A", Distribution::bernoulli(0.5)}}), {}), ivf::ScmError);
}

TEST_CASE("scenario catalog") {
    auto cat = catalog();
    for (const char* n : {"fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "d1", "d2", "d3", "d4", "d5", "d6",
                          "d7", "d8", "d9"})
        CHECK(std::any_of(cat.begin(), cat.end(), [&](const CatalogEntry& e) { return e.name == n; }));
    CHECK_THROWS_WITH_AS(scenario("nope"), doctest::Contains("unknown scenario"), ivf::ScmError);
    CHECK_THROWS_WITH_AS(scenario("fig1a", {{"bogus", "1"}}), doctest::Contains("invalid override"), ivf::ScmError);
    CHECK_THROWS_AS(scenario("fig1a", {{"suspect", "maybe"}}), ivf::ScmError);
    CHECK_THROWS_AS(scenario("fig1a", {{"Q->Y", "1"}}), ivf::ScmError);
    CHECK_THROWS_AS(scenario("d4", {{"panel", "c"}}), ivf::ScmError);

    Scenario c = scenario("fig1c", {{"suspect", "off"}});
    CHECK(c.graph.suspect_edges().size() == 1);
    CHECK(c.realized_graph().edges().size() == c.graph.edges().size() - 1);
    CHECK(c.observed() == std::vector<std::string>{"Z", "X", "Y", "NC3"});
    CHECK(ivf::graph::check_iv_graphical(c.realized_graph()).without_suspect.qualified);

    Scenario x = scenario("d5", {{"theta", "0"}, {"p1", "0.5"}});
    CHECK(x.observed() == std::vector<std::string>{"Z", "NC1", "NC2"});
    CHECK(x.has_tag("unfaithful"));
    CHECK_FALSE(x.suspect_on);
    CHECK(scenario("d5", {{"theta", "0.7"}}).suspect_on);

    Scenario d2 = scenario("d2");
    CHECK(d2.has_tag("unfaithful"));
    const auto& u = std::get<Equation>(d2.spec.node(d2.spec.index("U")).def);
    CHECK(u.terms[0].kind == TermKind::subgroup_switch);

    Scenario o = scenario("fig1a", {{"U1->Y", "2.5"}, {"sd_NC1", "0.1"}});
    const auto& y = std::get<Equation>(o.spec.node(o.spec.index("Y")).def);
    CHECK(y.terms.back().coef == 2.5);
    CHECK(std::get<Equation>(o.spec.node(o.spec.index("NC1")).def).noise->sd == 0.1);
}

TEST_CASE("scm json round trip") {
    Scenario s = scenario("d2", {{"suspect", "on"}});
    auto j = to_json(s.spec);
    ScmSpec back = scm_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back).dump() == j.dump());
    CHECK(back.iv == "Z");
    CHECK_THROWS_AS(scm_from_json(nlohmann::json::parse(R"({"nodes":[{"name":"A"}]})")), ivf::ScmError);
}

TEST_CASE("user scenario directory") {
    const auto dir = std::filesystem::temp_directory_path() / "ivf_scenario_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "mine.json");
        f << R"({"description": "two nodes", "graph": "node A role=latent\nnode B\nedge A -> B suspect",
                 "scm": {"nodes": [{"name": "A", "dist": {"kind": "bernoulli", "p": 0.5}},
                                   {"name": "B", "equation": {"terms": [{"kind": "linear", "vars": ["A"], "coef": 2, "suspect": true}]}}],
                         "latents": ["A"]}})";
    }
    setenv("IVF_SCENARIO_PATH", dir.c_str(), 1);
    auto cat = catalog();
    CHECK(cat.back().name == "mine");
    Scenario on = scenario("mine");
    CHECK(on.suspect_on);
    CHECK(on.observed() == std::vector<std::string>{"B"});
    Scenario off = scenario("mine", {{"suspect", "off"}});
    CHECK(std::get<Equation>(off.spec.node(1).def).terms.empty());
    unsetenv("IVF_SCENARIO_PATH");
    std::filesystem::remove_all(dir);
}

TEST_CASE("graph separation implies exact independence") {
    std::mt19937_64 rng(99);
    for (const auto& e : catalog()) {
        if (!e.builtin || e.name == "d5") continue;
        for (const char* sus : {"off", "on"}) {
            Scenario sc = scenario(e.name, {{"suspect", sus}, {"discrete", "true"}});
            ScmSpec generic = oracle::randomize(sc.spec, rng);
            const bool faithful = !sc.has_tag("unfaithful");
            INFO(e.name << " suspect=" << std::string(sus));
            CHECK(oracle::check_markov(sc.realized_graph(), exact_joint(generic), faithful, 1) == "");
        }
    }
}

TEST_CASE("negative-control implications on exact models") {
    std::mt19937_64 rng(17);
    oracle::ImplicationTally tally;
    for (const auto& e : catalog()) {
        if (!e.builtin || e.name == "d5") continue;
        for (const char* sus : {"off", "on"})
            for (int rep = 0; rep < 3; ++rep) {
                Scenario sc = scenario(e.name, {{"suspect", sus}, {"discrete", "true"}});
                if (sc.has_tag("unfaithful")) continue;
                oracle::check_implications(sc, oracle::randomize(sc.spec, rng), tally);
            }
    }
    for (const auto& f : tally.failures) FAIL_CHECK(f);
    CHECK(tally.nco_checked > 10);
    CHECK(tally.nci_checked > 5);
}
