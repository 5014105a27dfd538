#include "ivf/falsify/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ivf/error.hpp"
#include "ivf/regress/ols.hpp"

namespace ivf::falsify {

namespace {

Eigen::MatrixXd gather(const scm::Dataset& d, const std::vector<std::string>& names) {
    const auto n = static_cast<Eigen::Index>(d.rows());
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& c = d.column(names[j]);
        m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    }
    return m;
}

} // namespace

std::vector<DiagnosticRow> nc_diagnostics(const scm::Dataset& data, const Roles& roles) {
    if (roles.nc.empty()) throw PlanError("diagnostics need at least one negative control");
    if (roles.y.empty()) throw PlanError("diagnostics need an outcome column");
    std::vector<std::string> names{roles.z, roles.y};
    names.insert(names.end(), roles.nc.begin(), roles.nc.end());
    const Eigen::MatrixXd raw = gather(data, names);
    const Eigen::MatrixXd r = regress::residualize(gather(data, roles.controls), raw);
    Eigen::VectorXd norm(r.cols());
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
        norm(j) = r.col(j).norm();
        const double scale = (raw.col(j).array() - raw.col(j).mean()).matrix().norm();
        if (!(norm(j) > 1e-10 * std::max(scale, 1e-300)))
            throw DataError("column '" + names[static_cast<std::size_t>(j)] +
                            "' has zero variance after residualizing on the controls");
    }
    std::vector<DiagnosticRow> rows;
    for (std::size_t k = 0; k < roles.nc.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(k + 2);
        DiagnosticRow row;
        row.nc = roles.nc[k];
        row.corr_iv = std::abs(r.col(j).dot(r.col(0))) / (norm(j) * norm(0));
        row.corr_outcome = std::abs(r.col(j).dot(r.col(1))) / (norm(j) * norm(1));
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const DiagnosticRow& a, const DiagnosticRow& b) { return a.corr_iv > b.corr_iv; });
    return rows;
}

nlohmann::ordered_json to_json(const std::vector<DiagnosticRow>& rows) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& r : rows) j.push_back({{"nc", r.nc}, {"corr_iv", r.corr_iv}, {"corr_outcome", r.corr_outcome}});
    return j;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows) {
    out << "nc,corr_iv,corr_outcome\n";
    for (const auto& r : rows)
        out << r.nc << ',' << scm::format_double(r.corr_iv) << ',' << scm::format_double(r.corr_outcome) << '\n';
}

} // namespace ivf::falsify
