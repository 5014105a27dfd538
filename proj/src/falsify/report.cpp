#include "ivf/falsify/report.hpp"

namespace ivf::falsify {

std::string Report::decision() const {
    if (!refusals.empty()) return kRefused;
    bool reject = false;
    for (const auto& e : results) {
        if (e.error) return kFailed;
        reject = reject || (e.outcome && e.outcome->reject);
    }
    return reject ? kEvidence : kNoEvidence;
}

int Report::exit_code() const {
    const auto d = decision();
    if (d == kEvidence) return 2;
    if (d == kNoEvidence) return 0;
    return 3;
}

nlohmann::ordered_json Report::caveats() const {
    auto j = nlohmann::ordered_json::array();
    for (const auto& e : results)
        if (e.outcome && e.outcome->reject)
            j.push_back({{"test", to_string(e.test)},
                         {"bundled", to_string(e.outcome->bundled)},
                         {"caveat", e.outcome->caveat}});
    return j;
}

nlohmann::ordered_json to_json(const Report& r) {
    nlohmann::ordered_json j;
    j["plan"] = r.plan;
    auto results = nlohmann::ordered_json::array();
    for (const auto& e : r.results) {
        nlohmann::ordered_json x;
        x["test"] = to_string(e.test);
        x["outcome"] = e.outcome ? to_json(*e.outcome) : nlohmann::ordered_json(nullptr);
        x["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json(nullptr);
        if (e.monte_carlo)
            x["monte_carlo"] = {{"reps", e.monte_carlo->reps},
                                {"rejections", e.monte_carlo->rejections},
                                {"errors", e.monte_carlo->errors},
                                {"rate", e.monte_carlo->rate}};
        else
            x["monte_carlo"] = nullptr;
        results.push_back(x);
    }
    j["results"] = results;
    j["caveats"] = r.caveats();
    j["diagnostics"] = to_json(r.diagnostics);
    j["decision"] = r.decision();
    j["exit_code"] = r.exit_code();
    auto notes = r.notes;
    if (r.diagnostics_error) notes.push_back("diagnostics unavailable: " + *r.diagnostics_error);
    j["notes"] = notes;
    auto refusals = nlohmann::ordered_json::array();
    for (const auto& f : r.refusals)
        refusals.push_back({{"test", to_string(f.test)}, {"nc", f.nc}, {"verdicts", f.verdicts}});
    j["refusals"] = refusals;
    return j;
}

std::string serialize(const Report& r) { return to_json(r).dump(2) + "\n"; }

} // namespace ivf::falsify
