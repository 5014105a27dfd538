#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivf/falsify/plan.hpp"
#include "ivf/scm/dataset.hpp"
#include "json.hpp"

namespace ivf::falsify {

struct DiagnosticRow {
    std::string nc;
    double corr_iv = 0.0;      // |corr| of residualized NC and Z
    double corr_outcome = 0.0; // |corr| of residualized NC and Y
};

/// NC, Z and Y residualized on the controls; rows sorted by corr_iv
/// descending (ties keep NC order).
std::vector<DiagnosticRow> nc_diagnostics(const scm::Dataset& data, const Roles& roles);

nlohmann::ordered_json to_json(const std::vector<DiagnosticRow>& rows);
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows);

} // namespace ivf::falsify
