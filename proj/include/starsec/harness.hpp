#pragma once

#include <string>
#include <vector>

#include "starsec/baselines.hpp"
#include "starsec/model.hpp"

namespace starsec {
namespace harness {

enum class ExperimentId {
  SopTightness,   // closed-form vs Monte-Carlo outage, eavesdropper distance sweep
  ConvergeFull,   // capacity-pipeline objective trace per alternation
  ConvergeStat,   // outage-pipeline objective trace per alternation
  SweepPower,     // schemes vs power budget (dBm axis)
  SweepElements,  // schemes vs surface element count
  Quantization,   // rates vs coefficient resolution (bits axis; 0 = continuous)
  Placement,      // both metrics vs surface x-coordinate
  SolveOne        // single realization, JSON report
};

const char* to_string(ExperimentId id);
std::optional<ExperimentId> experiment_from_string(const std::string& name);

struct ExperimentSpec {
  ExperimentId id = ExperimentId::SolveOne;
  std::vector<double> axis;
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<baselines::SchemeSpec> schemes;
  SystemGeometry geometry;
  RadioConfig radio;
  RateConfig rates;
  Tolerances tolerances;
  int sop_mc_trials = 100000;
  std::string out_dir = ".";

  // Fills in the conventional axis/schemes for the experiment when empty.
  void apply_defaults();
  void validate() const;
};

struct ExperimentRecord {
  std::string scheme;
  double x = 0.0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int trials = 0;
  int infeasible = 0;
  std::uint64_t seed = 0;
};

// Runs every (sweep point x trial) cell, in parallel across trials, and
// aggregates deterministically by index. Individual trial failures become
// infeasible counts; they never abort the sweep.
std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec);

// Header scheme,x,metric,mean,std,trials,infeasible,seed; 9 significant
// digits; rows sorted by (scheme, x, metric).
void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
std::string csv_string(const std::vector<ExperimentRecord>& records);

// Single-realization report (JSON text) for the solve-one command.
std::string solve_one_json(const ExperimentSpec& spec);

int worker_count();  // honors STAR_SECRECY_THREADS

}  // namespace harness
}  // namespace starsec
