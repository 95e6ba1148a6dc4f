#include "starsec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "starsec/channel.hpp"
#include "starsec/fullcsi.hpp"
#include "starsec/rng.hpp"
#include "starsec/statcsi.hpp"

namespace starsec {
namespace harness {

const char* to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::SopTightness: return "sop-tightness";
    case ExperimentId::ConvergeFull: return "converge-full";
    case ExperimentId::ConvergeStat: return "converge-stat";
    case ExperimentId::SweepPower: return "sweep-power";
    case ExperimentId::SweepElements: return "sweep-elements";
    case ExperimentId::Quantization: return "quantization";
    case ExperimentId::Placement: return "placement";
    case ExperimentId::SolveOne: return "solve-one";
  }
  return "unknown";
}

std::optional<ExperimentId> experiment_from_string(const std::string& name) {
  for (ExperimentId id :
       {ExperimentId::SopTightness, ExperimentId::ConvergeFull, ExperimentId::ConvergeStat,
        ExperimentId::SweepPower, ExperimentId::SweepElements, ExperimentId::Quantization,
        ExperimentId::Placement, ExperimentId::SolveOne})
    if (name == to_string(id)) return id;
  return std::nullopt;
}

void ExperimentSpec::apply_defaults() {
  if (axis.empty()) {
    switch (id) {
      case ExperimentId::SopTightness: axis = {5, 15, 25, 35, 45}; break;  // eve x (m)
      case ExperimentId::SweepPower: axis = {5, 10, 15, 20}; break;        // dBm
      case ExperimentId::SweepElements: axis = {4, 8, 12}; break;
      case ExperimentId::Quantization: axis = {0, 1, 2, 3, 4}; break;      // 0 = continuous
      case ExperimentId::Placement: axis = {10, 20, 30, 40, 50}; break;    // x_s (m)
      default: axis = {0}; break;
    }
  }
  if (schemes.empty()) {
    using baselines::SchemeKind;
    switch (id) {
      case ExperimentId::SweepPower:
      case ExperimentId::SweepElements:
        schemes = {{SchemeKind::StarNoma, {}},
                   {SchemeKind::StarOma, {}},
                   {SchemeKind::CRisNoma, {}},
                   {SchemeKind::CRisOma, {}},
                   {SchemeKind::RandomPhase, {}}};
        break;
      default:
        schemes = {{SchemeKind::StarNoma, {}}};
        break;
    }
  }
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  if (axis.empty()) throw std::invalid_argument("ExperimentSpec: empty sweep axis");
  geometry.validate();
  radio.validate();
  rates.validate();
  tolerances.validate();
  if (id == ExperimentId::SopTightness && sop_mc_trials < 1000)
    throw std::invalid_argument("ExperimentSpec: sop_mc_trials must be >= 1000");
  if (id == ExperimentId::SweepElements)
    for (double v : axis)
      if (v < 1 || v != std::floor(v))
        throw std::invalid_argument("ExperimentSpec: element axis must hold positive integers");
  if (id == ExperimentId::Quantization)
    for (double v : axis)
      if (v < 0 || v != std::floor(v))
        throw std::invalid_argument("ExperimentSpec: quantization axis must hold bits >= 0");
}

int worker_count() {
  if (const char* env = std::getenv("STAR_SECRECY_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

namespace {

struct Sample {
  std::string metric;
  double value = 0.0;
  bool feasible = true;
};

struct Cell {
  std::string scheme;
  double x = 0.0;
  std::vector<Sample> samples;
};

std::uint64_t trial_seed(const ExperimentSpec& spec, int trial) {
  return mix_stream(spec.seed, {0x7472u, static_cast<std::uint64_t>(trial)});
}

// Evaluates one (sweep point, scheme, trial) work item.
Cell run_cell(const ExperimentSpec& spec, std::size_t axis_index,
              const baselines::SchemeSpec& scheme, int trial) {
  Cell cell;
  cell.scheme = baselines::to_string(scheme.kind);
  if (scheme.quantization_bits)
    cell.scheme += "-q" + std::to_string(*scheme.quantization_bits);
  cell.x = spec.axis[axis_index];
  const std::uint64_t cseed = trial_seed(spec, trial);

  SystemGeometry geom = spec.geometry;
  RadioConfig radio = spec.radio;
  const double x = spec.axis[axis_index];

  try {
    switch (spec.id) {
      case ExperimentId::SopTightness: {
        geom.eve_pos.x() = x;
        ChannelSet cs = sample_channels(geom, radio, cseed);
        StarCoefficients coeffs =
            baselines::random_coefficients(radio.num_ris_elements, cseed);
        const auto add_user = [&](bool iu) {
          statcsi::SopParams p;
          p.noise = radio.noise_power_watt;
          p.power = iu ? radio.p_max_iu_watt : radio.p_max_ou_watt;
          p.large_scale_product = cs.gain_eve * (iu ? cs.gain_iu : cs.gain_ou);
          p.rate_gap = iu ? spec.rates.gap_iu() : spec.rates.gap_ou();
          const Vec& beta = iu ? coeffs.beta_t : coeffs.beta_r;
          const CVec& small = iu ? cs.h_is_small : cs.h_os_small;
          p.effective_gain = (beta.array() * small.cwiseAbs2().array()).sum();
          const CVec side = iu ? coeffs.transmit_vector() : coeffs.reflect_vector();
          auto mc = statcsi::sop_monte_carlo(side, small, p.large_scale_product, p.rate_gap,
                                             p.power, p.noise, spec.sop_mc_trials,
                                             mix_stream(cseed, {0x6d63u, iu ? 1u : 0u}));
          const char* tag = iu ? "iu" : "ou";
          cell.samples.push_back({std::string("sop_closed_form_") + tag,
                                  statcsi::sop_closed_form(p), true});
          cell.samples.push_back({std::string("sop_monte_carlo_") + tag, mc.estimate, true});
        };
        add_user(true);
        add_user(false);
        break;
      }
      case ExperimentId::ConvergeFull: {
        ChannelSet cs = sample_channels(geom, radio, cseed);
        fullcsi::AhbOptions opt;
        opt.init_seed = cseed;
        fullcsi::FullCsiOutcome out = fullcsi::ahb_solve(cs, radio, spec.tolerances, opt);
        for (std::size_t i = 0; i < out.objective_trace.size(); ++i)
          cell.samples.push_back({"trace_iter_" + std::to_string(i + 1),
                                  out.objective_trace[i], true});
        cell.samples.push_back({"min_secrecy_capacity", out.objective, true});
        break;
      }
      case ExperimentId::ConvergeStat: {
        ChannelSet cs = sample_channels(geom, radio, cseed);
        statcsi::ExtendedAhbOptions opt;
        opt.init_seed = cseed;
        statcsi::StatCsiOutcome out =
            statcsi::extended_ahb(cs, radio, spec.rates, spec.tolerances, opt);
        if (!out.feasible) {
          cell.samples.push_back({"max_sop", 1.0, false});
          break;
        }
        for (std::size_t i = 0; i < out.objective_trace.size(); ++i)
          cell.samples.push_back({"trace_iter_" + std::to_string(i + 1),
                                  out.objective_trace[i], true});
        cell.samples.push_back({"max_sop", out.max_sop, true});
        break;
      }
      case ExperimentId::SweepPower:
      case ExperimentId::SweepElements:
      case ExperimentId::Placement: {
        if (spec.id == ExperimentId::SweepPower) {
          radio.p_max_iu_watt = dbm_to_watt(x);
          radio.p_max_ou_watt = dbm_to_watt(x);
        } else if (spec.id == ExperimentId::SweepElements) {
          radio.num_ris_elements = static_cast<int>(x);
        } else {
          geom.ris_pos.x() = x;
        }
        ChannelSet cs = sample_channels(geom, radio, cseed);
        auto full = baselines::evaluate_scheme_full(scheme, cs, radio, spec.tolerances, cseed);
        cell.samples.push_back({"min_secrecy_capacity", full.infeasible ? 0.0 : full.metric,
                                !full.infeasible});
        if (spec.id == ExperimentId::Placement) {
          auto stat = baselines::evaluate_scheme_stat(scheme, cs, radio, spec.rates,
                                                      spec.tolerances, cseed);
          cell.samples.push_back(
              {"max_sop", stat.infeasible ? 1.0 : stat.metric, !stat.infeasible});
        }
        break;
      }
      case ExperimentId::Quantization: {
        ChannelSet cs = sample_channels(geom, radio, cseed);
        const int bits = static_cast<int>(x);
        std::optional<int> q = bits > 0 ? std::optional<int>(bits) : std::nullopt;
        const double rate =
            baselines::transmission_rate_no_eve(cs, radio, spec.tolerances, cseed, q);
        cell.samples.push_back({"transmission_rate", rate, true});
        baselines::SchemeSpec secrecy = scheme;
        secrecy.quantization_bits = q;
        auto sec = baselines::evaluate_scheme_full(secrecy, cs, radio, spec.tolerances, cseed);
        cell.samples.push_back(
            {"secrecy_rate", sec.infeasible ? 0.0 : sec.metric, !sec.infeasible});
        break;
      }
      case ExperimentId::SolveOne: {
        ChannelSet cs = sample_channels(geom, radio, cseed);
        fullcsi::AhbOptions opt;
        opt.init_seed = cseed;
        fullcsi::FullCsiOutcome out = fullcsi::ahb_solve(cs, radio, spec.tolerances, opt);
        cell.samples.push_back({"min_secrecy_capacity", out.objective, true});
        break;
      }
    }
  } catch (const std::exception&) {
    // A failed trial is an infeasible record, never a sweep abort.
    cell.samples.clear();
    const bool sop = spec.id == ExperimentId::ConvergeStat;
    cell.samples.push_back({sop ? "max_sop" : "min_secrecy_capacity", sop ? 1.0 : 0.0, false});
  }
  return cell;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  spec.apply_defaults();
  spec.validate();

  struct WorkItem {
    std::size_t axis_index;
    std::size_t scheme_index;
    int trial;
  };
  std::vector<WorkItem> items;
  const bool per_scheme = spec.id == ExperimentId::SweepPower ||
                          spec.id == ExperimentId::SweepElements ||
                          spec.id == ExperimentId::Placement;
  const std::size_t scheme_count = per_scheme ? spec.schemes.size() : 1;
  for (std::size_t a = 0; a < spec.axis.size(); ++a)
    for (std::size_t s = 0; s < scheme_count; ++s)
      for (int t = 0; t < spec.trials; ++t) items.push_back({a, s, t});

  std::vector<Cell> cells(items.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(worker_count(), static_cast<int>(items.size())));
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) break;
      const WorkItem& it = items[i];
      cells[i] = run_cell(spec, it.axis_index, spec.schemes[it.scheme_index], it.trial);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Deterministic aggregation keyed by (scheme, x, metric), in item order.
  struct Agg {
    std::vector<double> values;
    int infeasible = 0;
    int count = 0;
  };
  std::map<std::tuple<std::string, double, std::string>, Agg> groups;
  for (const Cell& cell : cells) {
    for (const Sample& s : cell.samples) {
      Agg& agg = groups[{cell.scheme, cell.x, s.metric}];
      ++agg.count;
      if (!s.feasible) {
        ++agg.infeasible;
        // Outage probabilities keep their failure value in the average;
        // capacity metrics exclude failed trials.
        if (s.metric.find("sop") != std::string::npos) agg.values.push_back(s.value);
      } else {
        agg.values.push_back(s.value);
      }
    }
  }

  std::vector<ExperimentRecord> records;
  for (const auto& [key, agg] : groups) {
    ExperimentRecord rec;
    rec.scheme = std::get<0>(key);
    rec.x = std::get<1>(key);
    rec.metric = std::get<2>(key);
    rec.trials = agg.count;
    rec.infeasible = agg.infeasible;
    rec.seed = spec.seed;
    if (!agg.values.empty()) {
      double mean = 0;
      for (double v : agg.values) mean += v;
      mean /= static_cast<double>(agg.values.size());
      double var = 0;
      for (double v : agg.values) var += (v - mean) * (v - mean);
      rec.mean = mean;
      rec.stddev = agg.values.size() > 1
                       ? std::sqrt(var / static_cast<double>(agg.values.size() - 1))
                       : 0.0;
    }
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.scheme, a.x, a.metric) < std::tie(b.scheme, b.x, b.metric);
  });
  return records;
}

std::string csv_string(const std::vector<ExperimentRecord>& records) {
  std::ostringstream os;
  os << "scheme,x,metric,mean,std,trials,infeasible,seed\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    os << r.scheme << ',' << fmt(r.x) << ',' << r.metric << ',' << fmt(r.mean) << ','
       << fmt(r.stddev) << ',' << r.trials << ',' << r.infeasible << ',' << r.seed << '\n';
  }
  return os.str();
}

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
  os << csv_string(records);
  os.flush();
  if (!os) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::string solve_one_json(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  spec.apply_defaults();
  spec.validate();
  const std::uint64_t cseed = mix_stream(spec.seed, {0x7472u, 0u});
  ChannelSet cs = sample_channels(spec.geometry, spec.radio, cseed);
  fullcsi::AhbOptions opt;
  opt.init_seed = cseed;
  fullcsi::FullCsiOutcome out = fullcsi::ahb_solve(cs, spec.radio, spec.tolerances, opt);

  nlohmann::json j;
  j["seed"] = spec.seed;
  j["decoding_order"] = out.report.iu_first ? "iu-first" : "ou-first";
  j["gamma_iu"] = out.report.gamma_iu;
  j["gamma_ou"] = out.report.gamma_ou;
  j["gamma_eve_iu"] = out.report.gamma_eve_iu;
  j["gamma_eve_ou"] = out.report.gamma_eve_ou;
  j["secrecy_capacity_iu"] = out.report.secrecy_capacity_iu;
  j["secrecy_capacity_ou"] = out.report.secrecy_capacity_ou;
  j["min_secrecy_capacity"] = out.report.min_secrecy_capacity;
  j["p_iu_dbm"] = watt_to_dbm(out.p_iu);
  j["p_ou_dbm"] = watt_to_dbm(out.p_ou);
  j["alternations"] = out.alternations;
  j["degraded"] = out.degraded;

  statcsi::ExtendedAhbOptions sopt;
  sopt.init_seed = cseed;
  statcsi::StatCsiOutcome stat =
      statcsi::extended_ahb(cs, spec.radio, spec.rates, spec.tolerances, sopt);
  j["stat_feasible"] = stat.feasible;
  if (stat.feasible) {
    j["sop_iu"] = stat.sop_iu;
    j["sop_ou"] = stat.sop_ou;
    j["max_sop"] = stat.max_sop;
  }
  return j.dump(2);
}

}  // namespace harness
}  // namespace starsec
