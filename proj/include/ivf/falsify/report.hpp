#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivf/falsify/diagnostics.hpp"
#include "ivf/falsify/monte_carlo.hpp"
#include "ivf/falsify/tests.hpp"
#include "json.hpp"

namespace ivf::falsify {

inline constexpr const char* kNoEvidence = "no evidence against design";
inline constexpr const char* kEvidence = "evidence against design";
inline constexpr const char* kRefused = "refused";
inline constexpr const char* kFailed = "error";

struct ResultEntry {
    TestName test = TestName::nco_single;
    std::optional<TestOutcome> outcome;  // first replication
    std::optional<std::string> error;    // set instead of outcome
    std::optional<RateEstimate> monte_carlo; // more than one replication
};

/// A negative control the graph does not qualify for a test.
struct Refusal {
    TestName test = TestName::nco_single;
    std::string nc;
    nlohmann::ordered_json verdicts; // alternative path variable -> verdict
};

struct Report {
    nlohmann::ordered_json plan; // echo of the configuration
    std::vector<ResultEntry> results;
    std::vector<Refusal> refusals;
    std::vector<DiagnosticRow> diagnostics;
    std::optional<std::string> diagnostics_error;
    std::vector<std::string> notes;

    /// refused, error, evidence against design or no evidence against design.
    std::string decision() const;
    /// 0 without rejection, 2 with a rejection, 3 for an error or refusal.
    int exit_code() const;
    /// One entry per rejecting test: test, bundled assumption, caveat.
    nlohmann::ordered_json caveats() const;
};

nlohmann::ordered_json to_json(const Report& r);
/// Two-space indented JSON with a trailing newline.
std::string serialize(const Report& r);

} // namespace ivf::falsify
