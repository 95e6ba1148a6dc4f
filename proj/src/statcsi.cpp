#include "starsec/statcsi.hpp"

#include <cmath>
#include <sstream>

#include "lifted_builder.hpp"
#include "starsec/rng.hpp"

namespace starsec {
namespace statcsi {

using Task = fullcsi::BeamformingTask;
using fullcsi::LiftedProblem;
using fullcsi::UserMode;
using conic::LinExpr;
using lifted::MatrixVar;

double sop_closed_form(const SopParams& p) {
  if (p.effective_gain < 0 || p.large_scale_product < 0 || p.rate_gap < 0 || p.power < 0 ||
      p.noise <= 0)
    throw std::domain_error("sop_closed_form: negative parameter");
  const double threshold = (std::exp2(p.rate_gap) - 1.0) * p.noise;
  if (threshold <= 0.0) return 1.0;  // no redundancy: outage is certain
  const double denom = p.power * p.large_scale_product * p.effective_gain;
  if (denom <= 0.0) return 0.0;  // no leakage path
  return std::exp(-threshold / denom);
}

SopEstimate sop_monte_carlo(const CVec& side_coeffs, const CVec& user_small,
                            double large_scale_product, double rate_gap, double power,
                            double noise, int trials, std::uint64_t seed) {
  if (trials < 1000) throw std::invalid_argument("sop_monte_carlo: needs at least 1000 trials");
  if (side_coeffs.size() != user_small.size())
    throw std::invalid_argument("sop_monte_carlo: size mismatch");
  const int n = static_cast<int>(side_coeffs.size());
  const double threshold_num = (std::exp2(rate_gap) - 1.0) * noise;

  // Fixed per-trial weights: coefficient times the user's small-scale term.
  CVec weights = side_coeffs.cwiseProduct(user_small);

  Rng rng(seed, {0x534f50u});
  int exceed = 0;
  for (int t = 0; t < trials; ++t) {
    Complex acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::conj(rng.cnormal()) * weights(i);
    const double lhs = power * large_scale_product * std::norm(acc);
    if (lhs > threshold_num) ++exceed;
  }
  SopEstimate est;
  est.trials = trials;
  est.estimate = static_cast<double>(exceed) / trials;
  est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / trials);
  return est;
}

namespace {

Vec restrict_sq(const CVec& v, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = std::norm(v(idx[i]));
  return out;
}

double clamp0(double v) { return std::max(0.0, v); }

double bilinear(const CMat& q, const CMat& w, const CMat& u) {
  if (q.cols() == 0 || u.rows() == 0 || w.rows() == 0) return 0.0;
  return clamp0((q.adjoint() * w * q * u).trace().real());
}

}  // namespace

StatTask StatTask::from_channels(const ChannelSet& channels, const fullcsi::ElementLayout& layout,
                                 UserMode mode, DecodingOrder order, double p_iu, double p_ou,
                                 double noise, const RateConfig& rates, double rate_factor) {
  StatTask t;
  // The eavesdropper's instantaneous channel is unknown in this pipeline;
  // its cascades are not used by the builder.
  t.beam = Task::from_channels(channels, layout, mode, order, p_iu, p_ou, noise, true);
  t.small_iu_sq = restrict_sq(channels.h_is_small, layout.t_elements);
  t.small_ou_sq = restrict_sq(channels.h_os_small, layout.r_elements);
  t.ls_prod_iu = channels.gain_eve * channels.gain_iu;
  t.ls_prod_ou = channels.gain_eve * channels.gain_ou;
  t.rates = rates;
  t.rate_factor = rate_factor;
  return t;
}

LiftedProblem build_problem38(const StatTask& task, const sca::BeamformingIterate& local,
                              double tau) {
  if (tau <= 0) throw std::invalid_argument("build_problem38: tau must be positive");
  const Task& beam = task.beam;
  const bool both = beam.mode == UserMode::Both;
  const bool has_iu = beam.mode != UserMode::OuOnly;
  const bool has_ou = beam.mode != UserMode::IuOnly;
  const bool iu_strong = beam.order.iu_first;

  const double f = task.rate_factor;
  if (has_iu && f * task.rates.gap_iu() <= 0)
    throw std::invalid_argument(
        "build_problem38: zero codeword/secrecy rate gap for the indoor user; the outage "
        "probability is identically one");
  if (has_ou && f * task.rates.gap_ou() <= 0)
    throw std::invalid_argument(
        "build_problem38: zero codeword/secrecy rate gap for the outdoor user; the outage "
        "probability is identically one");

  // Normalized units: per-user cascades scaled so slack values are near one
  // (see the full-CSI builder).
  const double si2 = beam.p_iu / beam.noise;
  const double so2 = beam.p_ou / beam.noise;
  const double g_iu = has_iu ? std::max(1.0, si2 * beam.q_iu.squaredNorm()) : 1.0;
  const double g_ou = has_ou ? std::max(1.0, so2 * beam.q_ou.squaredNorm()) : 1.0;
  const CMat q_iu = std::sqrt(si2 / g_iu) * beam.q_iu;
  const CMat q_ou = std::sqrt(so2 / g_ou) * beam.q_ou;

  conic::ProgramBuilder pb;
  LiftedProblem out;

  const int m = static_cast<int>(beam.q_iu.rows());
  MatrixVar wv = lifted::add_hermitian_var(pb, m);
  out.w_start = wv.start;
  out.w_side = wv.side;
  MatrixVar utv, urv;
  if (has_iu) {
    utv = lifted::add_hermitian_var(pb, static_cast<int>(q_iu.cols()));
    out.ut_start = utv.start;
    out.ut_side = utv.side;
  }
  if (has_ou) {
    urv = lifted::add_hermitian_var(pb, static_cast<int>(q_ou.cols()));
    out.ur_start = urv.start;
    out.ur_side = urv.side;
  }

  if (has_iu) out.lb_iu = pb.add_variable();
  if (has_ou) out.lb_ou = pb.add_variable();
  const bool need_ub_weak = both;
  if (need_ub_weak) {
    if (iu_strong)
      out.ub_ou = pb.add_variable();
    else
      out.ub_iu = pb.add_variable();
  }
  if (has_iu) out.rank_t = pb.add_variable(tau);
  if (has_ou) out.rank_r = pb.add_variable(tau);
  out.obj_epigraph = pb.add_variable(1.0);
  out.core_scalars = pb.num_variables() - wv.dim() - (has_iu ? utv.dim() : 0) -
                     (has_ou ? urv.dim() : 0);

  LinExpr trace_row = lifted::complex_trace(wv);
  trace_row.constant = -1.0;
  pb.add_equality(trace_row);
  lifted::add_energy_rows(pb, has_iu ? beam.layout.t_elements : std::vector<int>{},
                          has_ou ? beam.layout.r_elements : std::vector<int>{}, utv, urv);

  if (has_iu) {
    lifted::CascadeData casc(q_iu);
    lifted::PolarizationLocal loc(casc, local.local_combiner, local.local_coeff_t);
    lifted::add_polarization_lower(pb, casc, wv, utv, loc, out.lb_iu);
    if (out.ub_iu >= 0) lifted::add_polarization_upper(pb, casc, wv, utv, loc, out.ub_iu);
  }
  if (has_ou) {
    lifted::CascadeData casc(q_ou);
    lifted::PolarizationLocal loc(casc, local.local_combiner, local.local_coeff_r);
    lifted::add_polarization_lower(pb, casc, wv, urv, loc, out.lb_ou);
    if (out.ub_ou >= 0) lifted::add_polarization_upper(pb, casc, wv, urv, loc, out.ub_ou);
  }

  // Codeword-rate constraints in linear form, plus the decoding-order row.
  const double th_iu = std::exp2(f * task.rates.r_c_iu) - 1.0;
  const double th_ou = std::exp2(f * task.rates.r_c_ou) - 1.0;
  if (both) {
    const int lb_strong = iu_strong ? out.lb_iu : out.lb_ou;
    const int lb_weak = iu_strong ? out.lb_ou : out.lb_iu;
    const int ub_weak = iu_strong ? out.ub_ou : out.ub_iu;
    const double th_strong = iu_strong ? th_iu : th_ou;
    const double th_weak = iu_strong ? th_ou : th_iu;

    const double g_strong = iu_strong ? g_iu : g_ou;
    const double g_weak = iu_strong ? g_ou : g_iu;
    LinExpr strong = LinExpr::var(lb_strong, g_strong);
    strong.add(ub_weak, -th_strong * g_weak);
    strong.constant -= th_strong;
    pb.add_nonneg(strong);

    LinExpr weak = LinExpr::var(lb_weak, g_weak);
    weak.constant -= th_weak;
    pb.add_nonneg(weak);

    LinExpr sic = LinExpr::var(lb_strong, g_strong);
    sic.add(ub_weak, -g_weak);
    pb.add_nonneg(sic);
  } else if (has_iu) {
    LinExpr row = LinExpr::var(out.lb_iu, g_iu);
    row.constant -= th_iu;
    pb.add_nonneg(row);
  } else if (has_ou) {
    LinExpr row = LinExpr::var(out.lb_ou, g_ou);
    row.constant -= th_ou;
    pb.add_nonneg(row);
  }

  // Outage-pressure terms: weighted diagonal sums, normalized to O(1).
  const double w_iu =
      has_iu ? beam.p_iu * task.ls_prod_iu / (std::exp2(f * task.rates.gap_iu()) - 1.0) : 0.0;
  const double w_ou =
      has_ou ? beam.p_ou * task.ls_prod_ou / (std::exp2(f * task.rates.gap_ou()) - 1.0) : 0.0;
  double norm = 0.0;
  if (has_iu) norm = std::max(norm, w_iu * task.small_iu_sq.sum());
  if (has_ou) norm = std::max(norm, w_ou * task.small_ou_sq.sum());
  if (norm <= 0) norm = 1.0;
  out.sop_weight_scale = norm;
  if (has_iu) {
    LinExpr row = LinExpr::var(out.obj_epigraph);
    for (int i = 0; i < task.small_iu_sq.size(); ++i) {
      LinExpr d = lifted::complex_diag(utv, i);
      d *= -(w_iu / norm) * task.small_iu_sq(i);
      row += d;
    }
    pb.add_nonneg(row);
    out.sop_weight_iu = 1;
  }
  if (has_ou) {
    LinExpr row = LinExpr::var(out.obj_epigraph);
    for (int i = 0; i < task.small_ou_sq.size(); ++i) {
      LinExpr d = lifted::complex_diag(urv, i);
      d *= -(w_ou / norm) * task.small_ou_sq(i);
      row += d;
    }
    pb.add_nonneg(row);
    out.sop_weight_ou = 1;
  }

  if (has_iu) lifted::add_rank_penalty(pb, utv, local.top_vec_t, out.rank_t);
  if (has_ou) lifted::add_rank_penalty(pb, urv, local.top_vec_r, out.rank_r);
  for (int v : {out.lb_iu, out.lb_ou, out.ub_iu, out.ub_ou, out.rank_t, out.rank_r,
                out.obj_epigraph})
    if (v >= 0) pb.add_nonneg(LinExpr::var(v));

  out.gamma0_iu = g_iu;
  out.gamma0_ou = g_ou;
  out.soc_blocks = pb.num_soc_blocks();
  out.program = pb.build();
  return out;
}

StatPower optimal_power_stat(double z_iu, double z_ou, double noise, const RateConfig& rates,
                             double rate_factor, double p_max_iu, double p_max_ou,
                             DecodingOrder order) {
  if (z_iu <= 0 || z_ou <= 0)
    throw std::domain_error("optimal_power_stat: degenerate beamforming (zero signal gain)");
  const double th_iu = std::exp2(rate_factor * rates.r_c_iu) - 1.0;
  const double th_ou = std::exp2(rate_factor * rates.r_c_ou) - 1.0;

  StatPower out;
  if (order.iu_first) {
    // Outdoor user decodes free of interference; its constraint fixes it.
    out.p_ou = noise * th_ou / z_ou;
    out.p_iu = std::max((out.p_ou * z_ou + noise) * th_iu / z_iu, out.p_ou * z_ou / z_iu);
  } else {
    out.p_iu = noise * th_iu / z_iu;
    out.p_ou = std::max((out.p_iu * z_iu + noise) * th_ou / z_ou, out.p_iu * z_iu / z_ou);
  }
  out.feasible = out.p_iu <= p_max_iu * (1.0 + 1e-9) && out.p_ou <= p_max_ou * (1.0 + 1e-9);
  return out;
}

namespace {

// Max SOP at the lifted iterate: beta taken from the matrix diagonal.
double max_sop_of(const StatTask& task, const sca::BeamformingIterate& it, double p_iu,
                  double p_ou, double* sop_iu_out = nullptr, double* sop_ou_out = nullptr) {
  const double f = task.rate_factor;
  double sop_iu = 0.0, sop_ou = 0.0;
  if (task.beam.mode != UserMode::OuOnly) {
    SopParams p;
    p.noise = task.beam.noise;
    p.power = p_iu;
    p.large_scale_product = task.ls_prod_iu;
    p.rate_gap = f * task.rates.gap_iu();
    p.effective_gain = 0.0;
    for (int i = 0; i < task.small_iu_sq.size(); ++i)
      p.effective_gain += clamp0(it.coeff_gram_t(i, i).real()) * task.small_iu_sq(i);
    sop_iu = sop_closed_form(p);
  }
  if (task.beam.mode != UserMode::IuOnly) {
    SopParams p;
    p.noise = task.beam.noise;
    p.power = p_ou;
    p.large_scale_product = task.ls_prod_ou;
    p.rate_gap = f * task.rates.gap_ou();
    p.effective_gain = 0.0;
    for (int i = 0; i < task.small_ou_sq.size(); ++i)
      p.effective_gain += clamp0(it.coeff_gram_r(i, i).real()) * task.small_ou_sq(i);
    sop_ou = sop_closed_form(p);
  }
  if (sop_iu_out) *sop_iu_out = sop_iu;
  if (sop_ou_out) *sop_ou_out = sop_ou;
  if (task.beam.mode == UserMode::IuOnly) return sop_iu;
  if (task.beam.mode == UserMode::OuOnly) return sop_ou;
  return std::max(sop_iu, sop_ou);
}

CMat extract_matrix(const Vec& x, int start, int side) {
  Vec seg = x.segment(start, conic::svec_dim(side));
  return conic::hermitian_unembed(conic::smat(seg));
}

struct StatTwoLayer {
  sca::BeamformingIterate iterate;
  bool feasible = true;
};

StatTwoLayer stat_two_layer(const StatTask& task, const Tolerances& tol, std::uint64_t seed,
                            const std::optional<sca::BeamformingIterate>& warm) {
  StatTwoLayer result;
  sca::BeamformingIterate it;
  if (warm) {
    it = *warm;
  } else {
    it = fullcsi::make_initial_iterate(task.beam, seed);
  }

  double tau = tol.penalty_init;
  bool converged = false;
  for (int outer = 0; outer < tol.max_outer; ++outer) {
    double obj_prev = std::numeric_limits<double>::infinity();
    for (int inner = 0; inner < tol.max_inner; ++inner) {
      LiftedProblem lp = build_problem38(task, it, tau);
      conic::ConeSolution sol = lifted::solve_lifted(lp.program);
      if (sol.status == conic::SolveStatus::PrimalInfeasible) {
        result.feasible = false;
        result.iterate = it;
        return result;
      }
      if (sol.status != conic::SolveStatus::Optimal) {
        const double score = lifted::residual_score(sol);
        if (!(sol.status == conic::SolveStatus::MaxIterations && score < 5e-5)) {
          std::ostringstream msg;
          msg << "stat_two_layer: subproblem " << conic::to_string(sol.status)
              << " (residual score " << score << ")";
          throw std::runtime_error(msg.str());
        }
      }
      it.combiner_gram = extract_matrix(sol.x, lp.w_start, lp.w_side);
      if (lp.ut_start >= 0) it.coeff_gram_t = extract_matrix(sol.x, lp.ut_start, lp.ut_side);
      if (lp.ur_start >= 0) it.coeff_gram_r = extract_matrix(sol.x, lp.ur_start, lp.ur_side);
      fullcsi::sanitize_iterate(task.beam, it);
      if (lp.lb_iu >= 0) it.sig_lb_iu = lp.gamma0_iu * sol.x(lp.lb_iu);
      if (lp.lb_ou >= 0) it.sig_lb_ou = lp.gamma0_ou * sol.x(lp.lb_ou);
      if (lp.ub_iu >= 0) it.sig_ub_iu = lp.gamma0_iu * sol.x(lp.ub_iu);
      if (lp.ub_ou >= 0) it.sig_ub_ou = lp.gamma0_ou * sol.x(lp.ub_ou);
      if (lp.rank_t >= 0) it.rank_gap_t = sol.x(lp.rank_t);
      if (lp.rank_r >= 0) it.rank_gap_r = sol.x(lp.rank_r);
      it.penalty_scale = tau;
      if (it.coeff_gram_t.rows()) it.top_vec_t = sca::rank_one_extract(it.coeff_gram_t).unit;
      if (it.coeff_gram_r.rows()) it.top_vec_r = sca::rank_one_extract(it.coeff_gram_r).unit;

      const double obj = sol.x(lp.obj_epigraph);
      if (std::abs(obj - obj_prev) <= tol.inner_tol * std::max(1.0, std::abs(obj_prev))) break;
      obj_prev = obj;
    }
    const double penalty = clamp0(it.rank_gap_t) + clamp0(it.rank_gap_r);
    bool ranks_ok = true;
    const double need = 1.0 - tol.penalty_tol;
    if (it.combiner_gram.rows() && sca::rank_one_extract(it.combiner_gram).ratio < need)
      ranks_ok = false;
    if (it.coeff_gram_t.rows() && sca::rank_one_extract(it.coeff_gram_t).ratio < need)
      ranks_ok = false;
    if (it.coeff_gram_r.rows() && sca::rank_one_extract(it.coeff_gram_r).ratio < need)
      ranks_ok = false;
    if (penalty <= tol.penalty_tol && ranks_ok) {
      converged = true;
      break;
    }
    tau *= tol.penalty_growth;
  }
  it.degraded = !converged;
  result.iterate = it;
  return result;
}

CVec expand_to_full(const CVec& local, const std::vector<int>& idx, int n) {
  CVec full = CVec::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) full(idx[i]) = local(i);
  return full;
}

}  // namespace

StatCsiOutcome extended_ahb_order(const ChannelSet& channels, const RadioConfig& radio,
                                  const RateConfig& rates, const Tolerances& tol,
                                  DecodingOrder order, const ExtendedAhbOptions& options) {
  radio.validate();
  rates.validate();
  const int n = radio.num_ris_elements;
  const fullcsi::ElementLayout layout = options.layout.value_or(fullcsi::ElementLayout::full(n));
  const double noise = radio.noise_power_watt;

  StatCsiOutcome outcome;
  outcome.order = order;

  double p_iu = radio.p_max_iu_watt;
  double p_ou = radio.p_max_ou_watt;
  std::optional<sca::BeamformingIterate> warm;
  double prev = std::numeric_limits<double>::infinity();
  StatTask task;

  for (int alt = 0; alt < tol.max_alt; ++alt) {
    ++outcome.alternations;
    task = StatTask::from_channels(channels, layout, UserMode::Both, order, p_iu, p_ou, noise,
                                   rates);
    StatTwoLayer two = stat_two_layer(task, tol, options.init_seed, warm);
    if (!two.feasible) {
      outcome.feasible = false;
      outcome.iterate = two.iterate;
      return outcome;
    }
    warm = two.iterate;

    const double z_iu = bilinear(task.beam.q_iu, two.iterate.combiner_gram,
                                 two.iterate.coeff_gram_t);
    const double z_ou = bilinear(task.beam.q_ou, two.iterate.combiner_gram,
                                 two.iterate.coeff_gram_r);
    StatPower p = optimal_power_stat(z_iu, z_ou, noise, rates, task.rate_factor,
                                     radio.p_max_iu_watt, radio.p_max_ou_watt, order);
    if (!p.feasible) {
      outcome.feasible = false;
      outcome.iterate = two.iterate;
      return outcome;
    }
    p_iu = p.p_iu;
    p_ou = p.p_ou;

    const double sop = max_sop_of(task, two.iterate, p_iu, p_ou);
    // Monotone-acceptance safeguard (mirror of the capacity pipeline).
    if (std::isfinite(prev) && sop > prev + 1e-9) break;
    outcome.objective_trace.push_back(sop);
    outcome.iterate = two.iterate;
    outcome.p_iu = p_iu;
    outcome.p_ou = p_ou;
    if (std::abs(sop - prev) <= tol.alt_tol) break;  // probabilities are already O(1)
    prev = sop;
  }

  outcome.degraded = outcome.iterate.degraded;
  outcome.w = sca::rank_one_extract(outcome.iterate.combiner_gram).unit;
  CVec ut_local = sca::rank_one_extract(outcome.iterate.coeff_gram_t).vector;
  CVec ur_local = sca::rank_one_extract(outcome.iterate.coeff_gram_r).vector;
  CVec ut = expand_to_full(ut_local, layout.t_elements, n);
  CVec ur = expand_to_full(ur_local, layout.r_elements, n);
  for (int i = 0; i < n; ++i) {
    const double total = std::norm(ut(i)) + std::norm(ur(i));
    if (total > 1.0) {
      ut(i) /= std::sqrt(total + 1e-12);
      ur(i) /= std::sqrt(total + 1e-12);
    }
  }
  outcome.coeffs = coefficients_from_vectors(ut, ur);

  // Re-settle powers on the extracted vectors.
  const double zv_iu = std::norm((outcome.w.adjoint() * task.beam.q_iu * ut_local)(0));
  const double zv_ou = std::norm((outcome.w.adjoint() * task.beam.q_ou * ur_local)(0));
  if (zv_iu > 0 && zv_ou > 0) {
    StatPower p = optimal_power_stat(zv_iu, zv_ou, noise, rates, task.rate_factor,
                                     radio.p_max_iu_watt, radio.p_max_ou_watt, order);
    if (!p.feasible) {
      outcome.feasible = false;
      return outcome;
    }
    outcome.p_iu = p.p_iu;
    outcome.p_ou = p.p_ou;
  } else {
    outcome.feasible = false;
    return outcome;
  }

  outcome.max_sop =
      max_sop_of(task, outcome.iterate, outcome.p_iu, outcome.p_ou, &outcome.sop_iu,
                 &outcome.sop_ou);
  outcome.feasible = true;
  return outcome;
}

StatCsiOutcome extended_ahb_single(const ChannelSet& channels, const RadioConfig& radio,
                                   const RateConfig& rates, const Tolerances& tol,
                                   fullcsi::UserMode mode, double rate_factor,
                                   const ExtendedAhbOptions& options) {
  radio.validate();
  rates.validate();
  if (mode == UserMode::Both)
    throw std::invalid_argument("extended_ahb_single: pick one user");
  const int n = radio.num_ris_elements;
  const fullcsi::ElementLayout layout = options.layout.value_or(fullcsi::ElementLayout::full(n));
  const double noise = radio.noise_power_watt;
  const bool iu = mode == UserMode::IuOnly;
  const double cap = iu ? radio.p_max_iu_watt : radio.p_max_ou_watt;

  StatCsiOutcome outcome;
  outcome.order = DecodingOrder{iu};
  double p_user = cap;
  std::optional<sca::BeamformingIterate> warm;
  double prev = std::numeric_limits<double>::infinity();
  StatTask task;
  for (int alt = 0; alt < tol.max_alt; ++alt) {
    ++outcome.alternations;
    task = StatTask::from_channels(channels, layout, mode, DecodingOrder{iu},
                                   iu ? p_user : 0.0, iu ? 0.0 : p_user, noise, rates,
                                   rate_factor);
    StatTwoLayer two = stat_two_layer(task, tol, options.init_seed, warm);
    if (!two.feasible) {
      outcome.feasible = false;
      outcome.iterate = two.iterate;
      return outcome;
    }
    warm = two.iterate;
    const CMat& q_user = iu ? task.beam.q_iu : task.beam.q_ou;
    const CMat& gram = iu ? two.iterate.coeff_gram_t : two.iterate.coeff_gram_r;
    const double z = bilinear(q_user, two.iterate.combiner_gram, gram);
    if (z <= 0) {
      outcome.feasible = false;
      outcome.iterate = two.iterate;
      return outcome;
    }
    const double th = std::exp2(rate_factor * (iu ? rates.r_c_iu : rates.r_c_ou)) - 1.0;
    const double p_min = noise * th / z;
    if (p_min > cap * (1.0 + 1e-9)) {
      outcome.feasible = false;
      outcome.iterate = two.iterate;
      return outcome;
    }
    p_user = p_min;
    const double sop = max_sop_of(task, two.iterate, iu ? p_user : 0.0, iu ? 0.0 : p_user);
    // Monotone-acceptance safeguard.
    if (std::isfinite(prev) && sop > prev + 1e-9) break;
    outcome.objective_trace.push_back(sop);
    outcome.iterate = two.iterate;
    if (std::abs(sop - prev) <= tol.alt_tol) break;
    prev = sop;
  }

  outcome.w = sca::rank_one_extract(outcome.iterate.combiner_gram).unit;
  const auto& side_elems = iu ? layout.t_elements : layout.r_elements;
  CVec u_local =
      sca::rank_one_extract(iu ? outcome.iterate.coeff_gram_t : outcome.iterate.coeff_gram_r)
          .vector;
  CVec u_full = expand_to_full(u_local, side_elems, n);
  for (int i = 0; i < n; ++i)
    if (std::norm(u_full(i)) > 1.0) u_full(i) /= std::sqrt(std::norm(u_full(i)) + 1e-12);
  outcome.coeffs = iu ? coefficients_from_vectors(u_full, CVec::Zero(n))
                      : coefficients_from_vectors(CVec::Zero(n), u_full);
  outcome.p_iu = iu ? p_user : 0.0;
  outcome.p_ou = iu ? 0.0 : p_user;
  outcome.max_sop = max_sop_of(task, outcome.iterate, outcome.p_iu, outcome.p_ou,
                               &outcome.sop_iu, &outcome.sop_ou);
  if (iu)
    outcome.max_sop = outcome.sop_iu;
  else
    outcome.max_sop = outcome.sop_ou;
  outcome.feasible = true;
  return outcome;
}

StatCsiOutcome extended_ahb(const ChannelSet& channels, const RadioConfig& radio,
                            const RateConfig& rates, const Tolerances& tol,
                            const ExtendedAhbOptions& options) {
  StatCsiOutcome best;
  bool have = false;
  for (DecodingOrder order : DecodingOrder::both()) {
    StatCsiOutcome cur = extended_ahb_order(channels, radio, rates, tol, order, options);
    if (!have) {
      best = cur;
      have = true;
      continue;
    }
    if (cur.feasible && (!best.feasible || cur.max_sop < best.max_sop)) best = cur;
  }
  return best;
}

}  // namespace statcsi
}  // namespace starsec
