#include "ivf/cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ivf/error.hpp"
#include "ivf/falsify/suite.hpp"
#include "ivf/graph/dsl.hpp"
#include "ivf/graph/qualify.hpp"
#include "ivf/scm/rng.hpp"
#include "ivf/scm/scenarios.hpp"
#include "ivf/scm/scm.hpp"
#include "ivf/scm/scm_json.hpp"

namespace ivf::cli {

namespace {

using json = nlohmann::ordered_json;

// Thrown for option values that parse but make no sense together.
class UsageError : public Error {
public:
    using Error::Error;
};

struct PlanOpts {
    std::string data, scenario, graph, config, suspect, suspect_coef;
    std::vector<std::string> sets;
    std::size_t n = 2000;
    std::optional<std::uint64_t> seed;
    std::string z, y, x, cluster;
    std::vector<std::string> controls, nc, tests;
    std::string vcov, gam_controls = "linear", reset_target = "iv";
    double alpha = 0.05;
    int gam_k = 10, gam_degree = 3;
    std::vector<int> reset_powers{2, 3};
    bool force_unconditional = false;
    std::size_t reps = 1;
    unsigned threads = 1;
    bool override_gating = false, no_qualify = false, no_diagnostics = false;
};

struct Opts {
    // graph check
    std::string graph_file, apo, api, nco, nci, v;
    std::vector<std::string> given;
    bool iv = false, general = false;
    // simulate / scenarios
    std::string scenario, suspect, suspect_coef;
    std::vector<std::string> sets;
    std::size_t n = 1000;
    std::optional<std::uint64_t> seed;
    bool include_latents = false, discrete = false;
    unsigned threads = 1;
    // test / diagnose / suite
    PlanOpts plan;
    // shared output
    std::string out, format;
};

struct Commands {
    CLI::App* graph = nullptr;
    CLI::App* graph_check = nullptr;
    CLI::App* simulate = nullptr;
    CLI::App* test = nullptr;
    CLI::App* diagnose = nullptr;
    CLI::App* suite = nullptr;
    CLI::App* scenarios = nullptr;
    CLI::App* scenarios_list = nullptr;
    CLI::App* scenarios_show = nullptr;
};

void add_output(CLI::App* a, Opts& o, const std::string& formats, const std::string& dflt) {
    a->add_option("--out", o.out, "Write the result to this file instead of standard output");
    std::vector<std::string> allowed;
    std::stringstream ss(formats);
    for (std::string f; std::getline(ss, f, '|');) allowed.push_back(f);
    // every command shares o.format, so the default is filled in after parsing
    a->add_option("--format", o.format, "Output format: " + formats)->default_str(dflt)->check(CLI::IsMember(allowed));
}

void add_overrides(CLI::App* a, std::vector<std::string>& sets, std::string& suspect, std::string& coef) {
    a->add_option("--set", sets, "Scenario override KEY=VALUE (repeatable)");
    a->add_option("--suspect", suspect, "Switch the scenario's threat on or off")->check(CLI::IsMember({"on", "off"}));
    a->add_option("--suspect-coef", coef, "Coefficient of the suspect terms");
}

void add_plan(CLI::App* a, PlanOpts& p, bool tests, bool settings) {
    a->add_option("--data", p.data, "CSV dataset with a header row");
    a->add_option("--scenario", p.scenario, "Built-in or user scenario to sample instead of a dataset");
    add_overrides(a, p.sets, p.suspect, p.suspect_coef);
    a->add_option("--n", p.n, "Rows drawn from the scenario")->default_val(2000);
    a->add_option("--seed", p.seed, "Seed for every random draw (required with --scenario)");
    a->add_option("--graph", p.graph, "Graph file; roles left unset are read from it");
    a->add_option("--z", p.z, "IV column");
    a->add_option("--y", p.y, "Outcome column");
    a->add_option("--x", p.x, "Treatment column");
    a->add_option("--controls", p.controls, "Control columns (comma separated or repeated)")->delimiter(',');
    a->add_option("--nc", p.nc, "Negative control columns (comma separated or repeated)")->delimiter(',');
    a->add_option("--cluster", p.cluster, "Cluster label column");
    if (tests)
        a->add_option("--test", p.tests,
                      "Test: nco-single, nco-reverse-joint, nci-conditional, nci-unconditional, gam-nco, gam-nci, "
                      "reset (aliases nco, nco-joint, nci)");
    if (settings) {
        a->add_option("--vcov", p.vcov, "Covariance: classical, hc1 or cr1 (default hc1, cr1 with --cluster)")
            ->check(CLI::IsMember({"classical", "hc1", "cr1"}));
        a->add_option("--alpha", p.alpha, "Significance level")->default_val(0.05);
        a->add_option("--gam-k", p.gam_k, "Basis functions per smooth")->default_val(10);
        a->add_option("--gam-degree", p.gam_degree, "Spline degree")->default_val(3);
        a->add_option("--gam-controls", p.gam_controls, "Controls in GAM tests: linear or smooth")
            ->default_val("linear")
            ->check(CLI::IsMember({"linear", "smooth"}));
        a->add_option("--reset-powers", p.reset_powers, "Fitted-value powers added by RESET")
            ->delimiter(',')
            ->default_str("2,3");
        a->add_option("--reset-target", p.reset_target, "RESET response: iv or reduced-form")
            ->default_val("iv")
            ->check(CLI::IsMember({"iv", "reduced-form"}));
        a->add_flag("--force-unconditional", p.force_unconditional,
                    "Run the unconditional NCI test even when its pre-check fails (stamped in the output)");
    }
    a->add_option("--config", p.config, "JSON configuration file; its keys override the flags");
}

void build(CLI::App& app, Opts& o, Commands& c) {
    app.description("Negative control falsification tests for instrumental variable designs");
    app.require_subcommand(1);
    app.fallthrough(false);

    c.graph = app.add_subcommand("graph", "Graphical checks on a causal graph file");
    c.graph->require_subcommand(1);
    c.graph_check = c.graph->add_subcommand("check", "Qualify alternative path variables and negative controls");
    c.graph_check->add_option("file", o.graph_file, "Graph file")->required();
    c.graph_check->add_flag("--iv", o.iv, "Check the graphical IV conditions (default when nothing else is asked)");
    c.graph_check->add_option("--apo", o.apo, "Alternative path variable checked as APO (proxy for --nco)");
    c.graph_check->add_option("--api", o.api, "Alternative path variable checked as API (proxy for --nci)");
    c.graph_check->add_option("--nco", o.nco, "Negative control outcome candidate");
    c.graph_check->add_option("--nci", o.nci, "Negative control instrument candidate");
    c.graph_check->add_flag("--general", o.general, "Use the multi-threat variants");
    c.graph_check->add_option("--v", o.v, "Threat variable for the general APO/API checks");
    c.graph_check->add_option("--given", o.given, "Conditioning set for the general APO/API checks")->delimiter(',');
    add_output(c.graph_check, o, "json", "json");

    c.simulate = app.add_subcommand("simulate", "Sample a scenario to a dataset");
    c.simulate->add_option("--scenario", o.scenario, "Scenario name")->required();
    add_overrides(c.simulate, o.sets, o.suspect, o.suspect_coef);
    c.simulate->add_flag("--discrete", o.discrete, "Use the two-point discrete variant");
    c.simulate->add_option("--n", o.n, "Rows")->default_val(1000);
    c.simulate->add_option("--seed", o.seed, "Seed")->required();
    c.simulate->add_option("--threads", o.threads, "Worker threads (output does not depend on it)")->default_val(1);
    c.simulate->add_flag("--include-latents", o.include_latents, "Also export latent columns");
    add_output(c.simulate, o, "csv|json", "csv");

    c.test = app.add_subcommand("test", "Run one falsification test");
    add_plan(c.test, o.plan, true, true);
    add_output(c.test, o, "json|csv", "json");

    c.diagnose = app.add_subcommand("diagnose", "Residualized correlations of each negative control with the IV and outcome");
    add_plan(c.diagnose, o.plan, false, false);
    add_output(c.diagnose, o, "json|csv", "json");

    c.suite = app.add_subcommand("suite", "Graph gating, a list of tests and diagnostics in one report");
    add_plan(c.suite, o.plan, true, true);
    c.suite->add_option("--reps", o.plan.reps, "Scenario replications; rejection rates are added when above 1")
        ->default_val(1);
    c.suite->add_option("--threads", o.plan.threads, "Worker threads (the report does not depend on it)")->default_val(1);
    c.suite->add_flag("--override-gating", o.plan.override_gating, "Run tests the graph does not qualify");
    c.suite->add_flag("--no-qualify", o.plan.no_qualify, "Skip the graphical qualification pass");
    c.suite->add_flag("--no-diagnostics", o.plan.no_diagnostics, "Leave out the diagnostics table");
    add_output(c.suite, o, "json|csv", "json");

    c.scenarios = app.add_subcommand("scenarios", "Built-in and user scenarios");
    c.scenarios->require_subcommand(1);
    c.scenarios_list = c.scenarios->add_subcommand("list", "List scenario names and descriptions");
    add_output(c.scenarios_list, o, "text|json", "text");
    c.scenarios_show = c.scenarios->add_subcommand("show", "Print a scenario's graph, or graph and model as JSON");
    c.scenarios_show->add_option("name", o.scenario, "Scenario name")->required();
    add_overrides(c.scenarios_show, o.sets, o.suspect, o.suspect_coef);
    add_output(c.scenarios_show, o, "text|json", "text");
}

void emit(const Opts& o, const std::string& text, std::ostream& out) {
    if (o.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw IoError("cannot write '" + o.out + "'");
    f << text;
    if (!f) throw IoError("write failed for '" + o.out + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

scm::Overrides overrides_of(const std::vector<std::string>& sets, const std::string& suspect, const std::string& coef) {
    scm::Overrides o;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
        o[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!suspect.empty()) o["suspect"] = suspect;
    if (!coef.empty()) o["suspect_coef"] = coef;
    return o;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("configuration file '" + path + "' is not valid JSON: " + e.what());
    }
}

falsify::SuiteConfig config_of(const PlanOpts& p) {
    falsify::SuiteConfig c;
    if (!p.data.empty()) c.dataset_path = p.data;
    if (!p.scenario.empty()) c.scenario = p.scenario;
    if (!p.graph.empty()) c.graph_path = p.graph;
    c.overrides = overrides_of(p.sets, p.suspect, p.suspect_coef);
    c.n = p.n;
    c.seed = p.seed;
    c.reps = p.reps;
    c.threads = p.threads;
    c.roles.z = p.z;
    c.roles.y = p.y;
    if (!p.x.empty()) c.roles.x = p.x;
    c.roles.controls = p.controls;
    c.roles.nc = p.nc;
    if (!p.cluster.empty()) c.roles.cluster = p.cluster;
    for (const auto& t : p.tests) c.tests.push_back(falsify::test_name_from_string(t));
    if (!p.vcov.empty()) c.vcov = regress::cov_kind_from_string(p.vcov);
    c.alpha = p.alpha;
    c.gam = {p.gam_k, p.gam_degree, falsify::controls_mode_from_string(p.gam_controls)};
    c.reset_powers = p.reset_powers;
    c.reset_target = falsify::reset_target_from_string(p.reset_target);
    c.force_unconditional = p.force_unconditional;
    c.qualify = !p.no_qualify;
    c.override_gating = p.override_gating;
    c.diagnostics = !p.no_diagnostics;
    if (p.config.empty()) return c;
    const json file = read_json_file(p.config);
    json merged = falsify::to_json(c);
    merged.merge_patch(file);
    auto out = falsify::suite_config_from_json(merged);
    if (!file.contains("threads")) out.threads = c.threads;
    return out;
}

int graph_check(const Opts& o, std::ostream& out) {
    const auto g = graph::load_graph(o.graph_file);
    json j;
    auto node = [&](const std::string& name) { return g.id(name); };
    const bool any = !o.apo.empty() || !o.api.empty() || !o.nco.empty() || !o.nci.empty();
    if (o.iv || !any) j["iv"] = graph::to_json(graph::check_iv_graphical(g));
    auto general_threat = [&](const std::string& u, bool apo) {
        if (o.v.empty()) throw UsageError("--general with --" + std::string(apo ? "apo" : "api") + " needs --v");
        const auto c = g.ids(o.given);
        return apo ? graph::check_general_apo(g, node(u), node(o.v), c)
                   : graph::check_general_api(g, node(u), node(o.v), c);
    };
    if (!o.apo.empty())
        j["apo"] = graph::to_json(o.general ? general_threat(o.apo, true) : graph::check_apo(g, node(o.apo)));
    if (!o.api.empty())
        j["api"] = graph::to_json(o.general ? general_threat(o.api, false) : graph::check_api(g, node(o.api)));
    auto nc_entry = [&](const std::string& nc, const std::string& u, bool nco) {
        json e;
        e["nc"] = nc;
        std::optional<graph::NodeId> proxy;
        if (!u.empty()) proxy = node(u);
        else proxy = nco ? graph::find_nco_proxy(g, node(nc), o.general) : graph::find_nci_proxy(g, node(nc), o.general);
        e["proxy"] = proxy ? json(g.name(*proxy)) : json(nullptr);
        if (proxy)
            e["verdict"] = graph::to_json(nco ? graph::check_nco(g, node(nc), *proxy, o.general)
                                              : graph::check_nci(g, node(nc), *proxy, o.general));
        else
            e["verdict"] = nullptr;
        return e;
    };
    if (!o.nco.empty()) j["nco"] = nc_entry(o.nco, o.apo, true);
    if (!o.nci.empty()) j["nci"] = nc_entry(o.nci, o.api, false);
    emit(o, dump(j), out);
    return kExitOk;
}

int simulate(const Opts& o, std::ostream& out) {
    auto ov = overrides_of(o.sets, o.suspect, o.suspect_coef);
    if (o.discrete) ov["discrete"] = "true";
    const auto sc = scm::scenario(o.scenario, ov);
    auto data = scm::sample(sc.spec, o.n, scm::derive_seed(*o.seed, 0), o.threads);
    if (!o.include_latents) data = data.select(sc.observed());
    std::ostringstream s;
    if (o.format == "json") {
        json j;
        j["scenario"] = sc.name;
        j["rows"] = data.rows();
        j["columns"] = data.names();
        json cols = json::object();
        for (const auto& name : data.names()) cols[name] = data.column(name);
        j["data"] = cols;
        s << dump(j);
    } else {
        scm::write_csv(s, data);
    }
    emit(o, s.str(), out);
    return kExitOk;
}

std::string results_csv(const std::vector<std::pair<falsify::TestName, const falsify::TestOutcome*>>& rows) {
    std::ostringstream s;
    s << "test,kind,statistic,p_value,reject,bundled\n";
    for (const auto& [t, o] : rows) {
        s << falsify::to_string(t) << ',';
        if (o)
            s << regress::to_string(o->result.kind) << ',' << scm::format_double(o->result.statistic) << ','
              << scm::format_double(o->result.p_value) << ',' << (o->reject ? "true" : "false") << ','
              << falsify::to_string(o->bundled);
        else
            s << "error,,,,"; // the message is in the JSON report
        s << '\n';
    }
    return s.str();
}

int run_one_test(const Opts& o, const falsify::SuiteConfig& c, std::ostream& out) {
    if (c.tests.size() != 1) throw UsageError("test takes exactly one --test");
    const auto prep = falsify::prepare(c);
    const auto plan = falsify::plan_for(c, prep.roles, c.tests.front());
    const auto outcome = falsify::run_test(prep.data, plan);
    if (o.format == "csv") {
        emit(o, results_csv({{plan.test, &outcome}}), out);
    } else {
        json j;
        j["plan"] = falsify::to_json(plan);
        j["outcome"] = falsify::to_json(outcome);
        emit(o, dump(j), out);
    }
    return kExitOk;
}

int diagnose(const Opts& o, const falsify::SuiteConfig& c, std::ostream& out) {
    auto cfg = c;
    // diagnose has no test list; validation only needs a placeholder
    if (cfg.tests.empty()) cfg.tests = {falsify::TestName::nco_single};
    const auto prep = falsify::prepare(cfg);
    const auto rows = falsify::nc_diagnostics(prep.data, prep.roles);
    if (o.format == "csv") {
        std::ostringstream s;
        falsify::write_diagnostics_csv(s, rows);
        emit(o, s.str(), out);
    } else {
        emit(o, dump(falsify::to_json(rows)), out);
    }
    return kExitOk;
}

int suite(const Opts& o, const falsify::SuiteConfig& c, std::ostream& out) {
    const auto report = falsify::run_suite(c);
    if (o.format == "csv") {
        std::vector<std::pair<falsify::TestName, const falsify::TestOutcome*>> rows;
        for (const auto& e : report.results) rows.emplace_back(e.test, e.outcome ? &*e.outcome : nullptr);
        emit(o, results_csv(rows), out);
    } else {
        emit(o, falsify::serialize(report), out);
    }
    return report.exit_code();
}

int scenarios_list(const Opts& o, std::ostream& out) {
    const auto cat = scm::catalog();
    std::ostringstream s;
    if (o.format == "json") {
        json j = json::array();
        for (const auto& e : cat) j.push_back({{"name", e.name}, {"description", e.description}, {"builtin", e.builtin}});
        s << dump(j);
    } else {
        std::size_t w = 0;
        for (const auto& e : cat) w = std::max(w, e.name.size());
        for (const auto& e : cat) s << e.name << std::string(w + 2 - e.name.size(), ' ') << e.description << '\n';
    }
    emit(o, s.str(), out);
    return kExitOk;
}

int scenarios_show(const Opts& o, std::ostream& out) {
    const auto sc = scm::scenario(o.scenario, overrides_of(o.sets, o.suspect, o.suspect_coef));
    if (o.format == "json") {
        json j;
        j["name"] = sc.name;
        j["description"] = sc.description;
        j["suspect_on"] = sc.suspect_on;
        j["graph"] = graph::format_graph(sc.graph);
        j["observed"] = sc.observed();
        j["tags"] = sc.tags;
        j["scm"] = scm::to_json(sc.spec);
        emit(o, dump(j), out);
    } else {
        emit(o, graph::format_graph(sc.graph), out);
    }
    return kExitOk;
}

// Program help followed by the help of every leaf command.
std::string full_help(CLI::App& app) {
    std::string text = app.help();
    for (auto* sub : app.get_subcommands({})) {
        const auto leaves = sub->get_subcommands({});
        if (leaves.empty()) {
            text += "\n" + sub->help("ivf");
            continue;
        }
        for (auto* leaf : leaves) text += "\n" + leaf->help("ivf " + sub->get_name());
    }
    return text;
}

std::string command_help(CLI::App& app, CLI::App* at) {
    if (at == &app) return full_help(app);
    std::string prefix = "ivf";
    if (auto* parent = at->get_parent(); parent && parent != &app) prefix += " " + parent->get_name();
    return at->help(prefix);
}

std::string default_format(const Commands& c) {
    if (c.simulate->parsed()) return "csv";
    if (c.scenarios_list->parsed() || c.scenarios_show->parsed()) return "text";
    return "json";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"", "ivf"};
    Opts o;
    Commands c;
    build(app, o, c);
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        // help of the deepest subcommand that was named
        CLI::App* at = &app;
        for (;;) {
            const auto subs = at->get_subcommands();
            if (subs.empty()) break;
            at = subs.front();
        }
        out << command_help(app, at);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "ivf: " << e.what() << "\nRun 'ivf --help' for usage.\n";
        return kExitUsage;
    }

    const bool planned = c.test->parsed() || c.diagnose->parsed() || c.suite->parsed();
    falsify::SuiteConfig cfg;
    try {
        if (o.format.empty()) o.format = default_format(c);
        if (c.graph_check->parsed() && o.format != "json") throw UsageError("graph check only writes json");
        if (planned) {
            cfg = config_of(o.plan);
            if (c.suite->parsed() && cfg.tests.empty()) throw UsageError("suite needs at least one --test");
            // data source, seed and counts are checked before anything runs
            auto check = cfg;
            if (check.tests.empty()) check.tests = {falsify::TestName::nco_single};
            check.validate();
        }
    } catch (const IoError& e) {
        err << "ivf: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "ivf: " << e.what() << "\nRun 'ivf --help' for usage.\n";
        return kExitUsage;
    }

    try {
        if (c.graph_check->parsed()) return graph_check(o, out);
        if (c.simulate->parsed()) return simulate(o, out);
        if (c.test->parsed()) return run_one_test(o, cfg, out);
        if (c.diagnose->parsed()) return diagnose(o, cfg, out);
        if (c.suite->parsed()) return suite(o, cfg, out);
        if (c.scenarios_list->parsed()) return scenarios_list(o, out);
        if (c.scenarios_show->parsed()) return scenarios_show(o, out);
    } catch (const IoError& e) {
        err << "ivf: " << e.what() << '\n';
        return kExitIo;
    } catch (const UsageError& e) {
        err << "ivf: " << e.what() << "\nRun 'ivf --help' for usage.\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "ivf: " << e.what() << '\n';
        return kExitError;
    }
    err << "ivf: no command given\n";
    return kExitUsage;
}

std::string help(const std::vector<std::string>& path) {
    CLI::App app{"", "ivf"};
    Opts o;
    Commands c;
    build(app, o, c);
    CLI::App* at = &app;
    for (const auto& p : path) at = at->get_subcommand(p);
    return command_help(app, at);
}

std::vector<std::vector<std::string>> command_paths() {
    return {{},         {"graph"},    {"graph", "check"}, {"simulate"},          {"test"},
            {"diagnose"}, {"suite"}, {"scenarios"},      {"scenarios", "list"}, {"scenarios", "show"}};
}

} // namespace ivf::cli
