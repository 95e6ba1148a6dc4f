#pragma once

#include <string>

#include "json.hpp"
#include "starsec/harness.hpp"

namespace starsec {
namespace config {

// Parses an experiment description. Unknown keys are rejected with the
// offending path in the message. The schema (all keys optional):
//
// {
//   "experiment": "sweep-power",
//   "seed": 1,
//   "trials": 20,
//   "axis": [5, 10, 15, 20],
//   "schemes": ["star-noma", "random-phase"],
//   "quantization_bits": 3,                 // applied to every scheme
//   "sop_mc_trials": 100000,
//   "out": "results",
//   "geometry": {
//     "bs": [0, 5, 0], "ris": [50, 10, 0], "eve": [0, 0, 0],
//     "iu": [50, 15, 0], "ou": [50, -15, 0],
//     "reference_loss_db": -30,
//     "alpha_bs": 2.2, "alpha_iu": 2.5, "alpha_ou": 2.5, "alpha_eve": 2.5
//   },
//   "radio": {
//     "antennas": 4, "elements": 8, "noise_dbm": -115,
//     "rician_factor_db": 3, "p_max_iu_dbm": 15, "p_max_ou_dbm": 15
//   },
//   "rates": {"r_c_iu": 1, "r_c_ou": 1, "r_s_iu": 0.9, "r_s_ou": 0.9},
//   "tolerances": {
//     "inner": 1e-3, "penalty": 1e-3, "alt": 1e-4,
//     "penalty_init": 1e-3, "penalty_growth": 5,
//     "max_inner": 25, "max_outer": 8, "max_alt": 30
//   }
// }
harness::ExperimentSpec spec_from_json(const nlohmann::json& j);

harness::ExperimentSpec load_spec_file(const std::string& path);

// Applies "dotted.path=value" onto a JSON document (value parsed as JSON,
// falling back to a string).
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace config
}  // namespace starsec
