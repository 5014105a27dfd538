#pragma once

#include "ivf/scm/scm.hpp"
#include "json.hpp"

namespace ivf::scm {

// {"nodes": [{"name": "U", "dist": {"kind": "gaussian", "mean": 0, "sd": 1}},
//            {"name": "Z", "equation": {"intercept": 0, "terms": [
//                {"kind": "linear", "vars": ["U"], "coef": 0.5, "suspect": true}],
//              "noise": {"kind": "gaussian", "mean": 0, "sd": 1}}},
//            {"name": "K", "constant": 1}],
//  "roles": {"iv": "Z", "treatment": "X", "outcome": "Y", "controls": []},
//  "latents": ["U"], "params": {}}
nlohmann::ordered_json to_json(const ScmSpec& spec);
ScmSpec scm_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& j);

std::string to_string(TermKind kind);

} // namespace ivf::scm
