#include "ivf/falsify/suite.hpp"

#include "ivf/error.hpp"
#include "ivf/graph/dsl.hpp"
#include "ivf/graph/qualify.hpp"
#include "ivf/scm/rng.hpp"

namespace ivf::falsify {

namespace {

using json = nlohmann::ordered_json;

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

TestPlan plan_for(const SuiteConfig& c, const Roles& roles, TestName t) {
    TestPlan p;
    p.roles = roles;
    p.test = t;
    p.vcov = c.vcov;
    p.alpha = c.alpha;
    p.gam = c.gam;
    p.reset_powers = c.reset_powers;
    p.reset_target = c.reset_target;
    p.force_unconditional = c.force_unconditional;
    return p;
}

void SuiteConfig::validate() const {
    if (dataset_path.has_value() == scenario.has_value()) throw PlanError("give exactly one of a dataset or a scenario");
    if (scenario && !seed) throw PlanError("a scenario run needs a seed");
    if (tests.empty()) throw PlanError("no tests selected");
    if (reps < 1) throw PlanError("reps must be at least 1");
    if (reps > 1 && !scenario) throw PlanError("replications need a scenario to draw from");
    if (n < 1) throw PlanError("n must be at least 1");
    if (threads < 1) throw PlanError("threads must be at least 1");
}

SuiteConfig suite_config_from_json(const json& j) {
    if (!j.is_object()) throw PlanError("configuration must be a JSON object");
    SuiteConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        try {
            if (k == "graph") {
                if (!v.is_null()) c.graph_path = v.get<std::string>();
            } else if (k == "dataset") {
                if (!v.is_null()) c.dataset_path = v.get<std::string>();
            } else if (k == "scenario") {
                if (!v.is_null()) c.scenario = v.get<std::string>();
            } else if (k == "overrides") {
                for (auto o = v.begin(); o != v.end(); ++o)
                    c.overrides[o.key()] = o.value().is_string() ? o.value().get<std::string>() : o.value().dump();
            } else if (k == "n") c.n = v.get<std::size_t>();
            else if (k == "seed") {
                if (!v.is_null()) c.seed = v.get<std::uint64_t>();
            } else if (k == "reps") c.reps = v.get<std::size_t>();
            else if (k == "threads") c.threads = v.get<unsigned>();
            else if (k == "roles") c.roles = roles_from_json(v);
            else if (k == "tests") {
                for (const auto& t : v) c.tests.push_back(test_name_from_string(t.get<std::string>()));
            } else if (k == "vcov") {
                if (!v.is_null()) c.vcov = regress::cov_kind_from_string(v.get<std::string>());
            } else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "gam") {
                for (auto g = v.begin(); g != v.end(); ++g) {
                    if (g.key() == "k") c.gam.k = g.value().get<int>();
                    else if (g.key() == "degree") c.gam.degree = g.value().get<int>();
                    else if (g.key() == "controls") c.gam.controls = controls_mode_from_string(g.value().get<std::string>());
                    else throw PlanError("unknown GAM setting '" + g.key() + "'");
                }
            } else if (k == "reset_powers") c.reset_powers = v.get<std::vector<int>>();
            else if (k == "reset_target") c.reset_target = reset_target_from_string(v.get<std::string>());
            else if (k == "force_unconditional") c.force_unconditional = v.get<bool>();
            else if (k == "qualify") c.qualify = v.get<bool>();
            else if (k == "override_gating") c.override_gating = v.get<bool>();
            else if (k == "diagnostics") c.diagnostics = v.get<bool>();
            else
                throw PlanError("unknown configuration key '" + k + "'");
        } catch (const nlohmann::json::exception&) {
            throw PlanError("configuration key '" + k + "' has the wrong type");
        } catch (const RegressionError& e) {
            throw PlanError(e.what());
        }
    }
    return c;
}

// threads is left out: it must not change a report
json to_json(const SuiteConfig& c) {
    json j;
    j["graph"] = opt(c.graph_path);
    j["dataset"] = opt(c.dataset_path);
    j["scenario"] = opt(c.scenario);
    json o = json::object();
    for (const auto& [k, v] : c.overrides) o[k] = v;
    j["overrides"] = o;
    j["n"] = c.n;
    j["seed"] = opt(c.seed);
    j["reps"] = c.reps;
    j["roles"] = to_json(c.roles);
    auto tests = json::array();
    for (auto t : c.tests) tests.push_back(to_string(t));
    j["tests"] = tests;
    j["vcov"] = c.vcov ? json(regress::to_string(*c.vcov)) : json(nullptr);
    j["alpha"] = c.alpha;
    j["gam"] = to_json(c.gam);
    j["reset_powers"] = c.reset_powers;
    j["reset_target"] = to_string(c.reset_target);
    j["force_unconditional"] = c.force_unconditional;
    j["qualify"] = c.qualify;
    j["override_gating"] = c.override_gating;
    j["diagnostics"] = c.diagnostics;
    return j;
}

Roles complete_roles(const Roles& given, const graph::Dag& g) {
    Roles r = given;
    auto name_of = [&](graph::Role role) -> std::string {
        const auto id = g.role_node(role);
        return id ? g.name(*id) : std::string();
    };
    if (r.z.empty()) r.z = name_of(graph::Role::iv);
    if (r.y.empty()) r.y = name_of(graph::Role::outcome);
    if (!r.x) {
        const auto x = name_of(graph::Role::treatment);
        if (!x.empty()) r.x = x;
    }
    if (r.controls.empty())
        for (auto id : g.nodes_with_role(graph::Role::control)) r.controls.push_back(g.name(id));
    if (r.nc.empty())
        for (auto id : g.nodes_with_role(graph::Role::candidate)) r.nc.push_back(g.name(id));
    return r;
}

std::optional<Refusal> qualify_nc(const graph::Dag& g, TestName test, const std::string& nc) {
    if (!is_nco_test(test) && !is_nci_test(test)) return std::nullopt;
    const auto id = g.find(nc);
    if (!id) throw PlanError("negative control '" + nc + "' is not a node of the graph");
    const bool nco = is_nco_test(test);
    for (bool general : {false, true}) {
        const auto proxy = nco ? graph::find_nco_proxy(g, *id, general) : graph::find_nci_proxy(g, *id, general);
        if (proxy) return std::nullopt;
    }
    Refusal r;
    r.test = test;
    r.nc = nc;
    r.verdicts = json::object();
    for (graph::NodeId u = 0; u < g.size(); ++u) {
        const auto role = g.node(u).role;
        if (u == *id || (role != graph::Role::latent && role != graph::Role::candidate)) continue;
        r.verdicts[g.name(u)] = graph::to_json(nco ? graph::check_nco(g, *id, u) : graph::check_nci(g, *id, u));
    }
    return r;
}

Prepared prepare(const SuiteConfig& config) {
    config.validate();
    Prepared p;
    if (config.scenario) {
        p.scenario = scm::scenario(*config.scenario, config.overrides);
        p.graph = p.scenario->graph;
        p.data = scm::sample(p.scenario->spec, config.n, scm::derive_seed(*config.seed, 0));
    } else {
        p.data = scm::load_csv(*config.dataset_path, config.roles.cluster);
    }
    if (config.graph_path) p.graph = graph::load_graph(*config.graph_path);
    p.roles = p.graph ? complete_roles(config.roles, *p.graph) : config.roles;
    return p;
}

Report run_suite(const SuiteConfig& config) {
    const Prepared prep = prepare(config);
    const auto& data = prep.data;
    const auto& g = prep.graph;
    const auto& sc = prep.scenario;
    const Roles& roles = prep.roles;

    Report report;
    report.plan = to_json(config);
    report.plan["roles"] = to_json(roles);

    std::vector<TestPlan> plans;
    for (auto t : config.tests) {
        plans.push_back(plan_for(config, roles, t));
        plans.back().validate(data);
    }

    if (g && config.qualify) {
        std::vector<Refusal> refused;
        try {
            for (auto t : config.tests)
                for (const auto& nc : roles.nc)
                    if (auto r = qualify_nc(*g, t, nc)) refused.push_back(std::move(*r));
        } catch (const GraphError& e) {
            refused.clear();
            report.notes.push_back(std::string("graph qualification skipped: ") + e.what());
        }
        for (auto& r : refused) {
            if (config.override_gating)
                report.notes.push_back("gating overridden: '" + r.nc + "' does not qualify for " + to_string(r.test));
            else
                report.refusals.push_back(std::move(r));
        }
        if (!report.refusals.empty()) return report;
    }

    for (const auto& p : plans) {
        ResultEntry e;
        e.test = p.test;
        try {
            e.outcome = run_test(data, p);
        } catch (const PlanError&) {
            throw;
        } catch (const Error& ex) {
            e.error = ex.what();
        }
        report.results.push_back(std::move(e));
    }

    if (config.reps > 1) {
        // 1 reject, 0 accept, -1 failed; per replication and test
        const auto marks = mc_map<std::vector<int>>(config.reps, config.threads, [&](std::size_t r) {
            const auto d = r == 0 ? data : scm::sample(sc->spec, config.n, scm::derive_seed(*config.seed, r));
            std::vector<int> m;
            for (const auto& p : plans) {
                try {
                    m.push_back(run_test(d, p).reject ? 1 : 0);
                } catch (const Error&) {
                    m.push_back(-1);
                }
            }
            return m;
        });
        for (std::size_t t = 0; t < plans.size(); ++t) {
            RateEstimate est;
            est.reps = config.reps;
            for (const auto& m : marks) {
                if (m[t] > 0) ++est.rejections;
                if (m[t] < 0) ++est.errors;
            }
            est.rate = static_cast<double>(est.rejections) / static_cast<double>(est.reps);
            report.results[t].monte_carlo = est;
        }
    }

    if (config.diagnostics && !roles.nc.empty() && !roles.y.empty()) {
        try {
            report.diagnostics = nc_diagnostics(data, roles);
        } catch (const Error& e) {
            report.diagnostics_error = e.what();
        }
    }
    return report;
}

} // namespace ivf::falsify
