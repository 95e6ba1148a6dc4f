#include "starsec/config.hpp"

#include <fstream>
#include <set>

namespace starsec {
namespace config {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
}

Eigen::Vector3d read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("config: '" + where + "' must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void read_geometry(const json& j, SystemGeometry& g) {
  reject_unknown(j, {"bs", "ris", "eve", "iu", "ou", "reference_loss_db", "alpha_bs",
                     "alpha_iu", "alpha_ou", "alpha_eve"},
                 "geometry.");
  if (j.contains("bs")) g.bs_pos = read_vec3(j["bs"], "geometry.bs");
  if (j.contains("ris")) g.ris_pos = read_vec3(j["ris"], "geometry.ris");
  if (j.contains("eve")) g.eve_pos = read_vec3(j["eve"], "geometry.eve");
  if (j.contains("iu")) g.iu_pos = read_vec3(j["iu"], "geometry.iu");
  if (j.contains("ou")) g.ou_pos = read_vec3(j["ou"], "geometry.ou");
  if (j.contains("reference_loss_db")) g.reference_loss_db = j["reference_loss_db"];
  if (j.contains("alpha_bs")) g.alpha_bs = j["alpha_bs"];
  if (j.contains("alpha_iu")) g.alpha_iu = j["alpha_iu"];
  if (j.contains("alpha_ou")) g.alpha_ou = j["alpha_ou"];
  if (j.contains("alpha_eve")) g.alpha_eve = j["alpha_eve"];
}

void read_radio(const json& j, RadioConfig& r) {
  reject_unknown(j, {"antennas", "elements", "noise_dbm", "rician_factor_db", "p_max_iu_dbm",
                     "p_max_ou_dbm"},
                 "radio.");
  if (j.contains("antennas")) r.num_bs_antennas = j["antennas"];
  if (j.contains("elements")) r.num_ris_elements = j["elements"];
  if (j.contains("noise_dbm")) r.noise_power_watt = dbm_to_watt(j["noise_dbm"]);
  if (j.contains("rician_factor_db")) r.rician_factor = db_to_linear(j["rician_factor_db"]);
  if (j.contains("p_max_iu_dbm")) r.p_max_iu_watt = dbm_to_watt(j["p_max_iu_dbm"]);
  if (j.contains("p_max_ou_dbm")) r.p_max_ou_watt = dbm_to_watt(j["p_max_ou_dbm"]);
}

void read_rates(const json& j, RateConfig& r) {
  reject_unknown(j, {"r_c_iu", "r_c_ou", "r_s_iu", "r_s_ou"}, "rates.");
  if (j.contains("r_c_iu")) r.r_c_iu = j["r_c_iu"];
  if (j.contains("r_c_ou")) r.r_c_ou = j["r_c_ou"];
  if (j.contains("r_s_iu")) r.r_s_iu = j["r_s_iu"];
  if (j.contains("r_s_ou")) r.r_s_ou = j["r_s_ou"];
}

void read_tolerances(const json& j, Tolerances& t) {
  reject_unknown(j, {"inner", "penalty", "alt", "penalty_init", "penalty_growth", "max_inner",
                     "max_outer", "max_alt"},
                 "tolerances.");
  if (j.contains("inner")) t.inner_tol = j["inner"];
  if (j.contains("penalty")) t.penalty_tol = j["penalty"];
  if (j.contains("alt")) t.alt_tol = j["alt"];
  if (j.contains("penalty_init")) t.penalty_init = j["penalty_init"];
  if (j.contains("penalty_growth")) t.penalty_growth = j["penalty_growth"];
  if (j.contains("max_inner")) t.max_inner = j["max_inner"];
  if (j.contains("max_outer")) t.max_outer = j["max_outer"];
  if (j.contains("max_alt")) t.max_alt = j["max_alt"];
}

}  // namespace

harness::ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(j,
                 {"experiment", "seed", "trials", "axis", "schemes", "quantization_bits",
                  "sop_mc_trials", "out", "geometry", "radio", "rates", "tolerances"},
                 "");
  harness::ExperimentSpec spec;
  if (j.contains("experiment")) {
    auto id = harness::experiment_from_string(j["experiment"]);
    if (!id)
      throw std::invalid_argument("config: unknown experiment '" +
                                  j["experiment"].get<std::string>() + "'");
    spec.id = *id;
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("trials")) spec.trials = j["trials"];
  if (j.contains("axis")) {
    if (!j["axis"].is_array()) throw std::invalid_argument("config: 'axis' must be an array");
    spec.axis = j["axis"].get<std::vector<double>>();
  }
  std::optional<int> shared_bits;
  if (j.contains("quantization_bits") && !j["quantization_bits"].is_null())
    shared_bits = j["quantization_bits"].get<int>();
  if (j.contains("schemes")) {
    if (!j["schemes"].is_array())
      throw std::invalid_argument("config: 'schemes' must be an array of names");
    for (const auto& name : j["schemes"]) {
      auto kind = baselines::scheme_from_string(name.get<std::string>());
      if (!kind)
        throw std::invalid_argument("config: unknown scheme '" + name.get<std::string>() + "'");
      spec.schemes.push_back({*kind, shared_bits});
    }
  }
  if (j.contains("sop_mc_trials")) spec.sop_mc_trials = j["sop_mc_trials"];
  if (j.contains("out")) spec.out_dir = j["out"].get<std::string>();
  if (j.contains("geometry")) read_geometry(j["geometry"], spec.geometry);
  if (j.contains("radio")) read_radio(j["radio"], spec.radio);
  if (j.contains("rates")) read_rates(j["rates"], spec.rates);
  if (j.contains("tolerances")) read_tolerances(j["tolerances"], spec.tolerances);
  return spec;
}

harness::ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
  }
  return spec_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "': empty key");
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace config
}  // namespace starsec
