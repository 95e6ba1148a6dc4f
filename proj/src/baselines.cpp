#include "starsec/baselines.hpp"

#include <cmath>

#include "starsec/rng.hpp"
#include "starsec/sca.hpp"

namespace starsec {
namespace baselines {

using fullcsi::ElementLayout;
using fullcsi::UserMode;

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::StarNoma: return "star-noma";
    case SchemeKind::StarOma: return "star-oma";
    case SchemeKind::CRisNoma: return "cris-noma";
    case SchemeKind::CRisOma: return "cris-oma";
    case SchemeKind::RandomPhase: return "random-phase";
  }
  return "unknown";
}

std::optional<SchemeKind> scheme_from_string(const std::string& name) {
  for (SchemeKind k : {SchemeKind::StarNoma, SchemeKind::StarOma, SchemeKind::CRisNoma,
                       SchemeKind::CRisOma, SchemeKind::RandomPhase})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

StarCoefficients random_coefficients(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_coefficients: n must be >= 1");
  Rng rng(seed, {0x52434f45u});
  StarCoefficients c;
  c.beta_t.resize(n);
  c.beta_r.resize(n);
  c.theta_t.resize(n);
  c.theta_r.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = rng.uniform();
    c.beta_t(i) = s;
    c.beta_r(i) = 1.0 - s;
    c.theta_t(i) = rng.uniform(0.0, 2.0 * kPi);
    c.theta_r(i) = rng.uniform(0.0, 2.0 * kPi);
  }
  return c;
}

namespace {

double snap_phase(double theta, int bits) {
  const double step = 2.0 * kPi / std::exp2(bits);
  double snapped = std::round(theta / step) * step;
  snapped = std::fmod(snapped, 2.0 * kPi);
  if (snapped < 0) snapped += 2.0 * kPi;
  return snapped;
}

double snap_amplitude(double beta, int bits) {
  const double levels = std::exp2(bits) - 1.0;
  return std::clamp(std::round(beta * levels) / levels, 0.0, 1.0);
}

}  // namespace

StarCoefficients quantize_coefficients(const StarCoefficients& continuous, int bits) {
  if (bits < 1) throw std::invalid_argument("quantize_coefficients: bits must be >= 1");
  continuous.validate();
  StarCoefficients q = continuous;
  const double step = 1.0 / (std::exp2(bits) - 1.0);
  for (int i = 0; i < q.size(); ++i) {
    q.theta_t(i) = snap_phase(continuous.theta_t(i), bits);
    q.theta_r(i) = snap_phase(continuous.theta_r(i), bits);
    q.beta_t(i) = snap_amplitude(continuous.beta_t(i), bits);
    q.beta_r(i) = snap_amplitude(continuous.beta_r(i), bits);
    while (q.beta_t(i) + q.beta_r(i) > 1.0 + 1e-12) {
      if (q.beta_t(i) >= q.beta_r(i))
        q.beta_t(i) = std::max(0.0, q.beta_t(i) - step);
      else
        q.beta_r(i) = std::max(0.0, q.beta_r(i) - step);
    }
  }
  return q;
}

namespace {

struct EffectiveGains {
  double z_iu = 0.0, z_ou = 0.0, ze_iu = 0.0, ze_ou = 0.0;
};

EffectiveGains gains_at(const CascadedForms& f, const CVec& w, const StarCoefficients& coeffs,
                        bool zero_eve) {
  const CVec ut = coeffs.transmit_vector();
  const CVec ur = coeffs.reflect_vector();
  EffectiveGains g;
  g.z_iu = std::norm((w.adjoint() * f.q_iu * ut)(0));
  g.z_ou = std::norm((w.adjoint() * f.q_ou * ur)(0));
  if (!zero_eve) {
    g.ze_iu = std::norm((f.q_eve_iu.adjoint() * ut)(0));
    g.ze_ou = std::norm((f.q_eve_ou.adjoint() * ur)(0));
  }
  return g;
}

// Receive vector maximizing the first-decoded user's SINR at the given
// operating point: closed-form generalized eigenvector (rank-one numerator).
CVec combiner_for_coeffs(const CascadedForms& f, const StarCoefficients& coeffs,
                         DecodingOrder order, double p_iu, double p_ou, double noise) {
  const CVec ut = coeffs.transmit_vector();
  const CVec ur = coeffs.reflect_vector();
  const CVec a = order.iu_first ? CVec(f.q_iu * ut) : CVec(f.q_ou * ur);
  const CVec b = order.iu_first ? CVec(f.q_ou * ur) : CVec(f.q_iu * ut);
  const double p_int = order.iu_first ? p_ou : p_iu;
  const int m = static_cast<int>(a.size());
  CMat denom = p_int * (b * b.adjoint()) + noise * CMat::Identity(m, m);
  CVec w = denom.ldlt().solve(a);
  const double nrm = w.norm();
  if (!(nrm > 1e-30) || !w.allFinite()) {
    w = CVec::Zero(m);
    w(0) = 1.0;
    return w;
  }
  return w / nrm;
}

SecrecyReport report_at(const EffectiveGains& g, double p_iu, double p_ou, DecodingOrder order,
                        double noise) {
  SecrecyReport rep;
  rep.iu_first = order.iu_first;
  const double int_iu = order.iu_first ? p_ou * g.z_ou : 0.0;
  const double int_ou = order.iu_first ? 0.0 : p_iu * g.z_iu;
  rep.gamma_iu = p_iu * g.z_iu / (int_iu + noise);
  rep.gamma_ou = p_ou * g.z_ou / (int_ou + noise);
  rep.gamma_eve_iu = p_iu * g.ze_iu / noise;
  rep.gamma_eve_ou = p_ou * g.ze_ou / noise;
  rep.secrecy_capacity_iu = secrecy_capacity(rep.gamma_iu, rep.gamma_eve_iu);
  rep.secrecy_capacity_ou = secrecy_capacity(rep.gamma_ou, rep.gamma_eve_ou);
  rep.min_secrecy_capacity = std::min(rep.secrecy_capacity_iu, rep.secrecy_capacity_ou);
  return rep;
}

// Fixed-coefficient capacity metric: closed-form combiner plus the power
// policy, better decoding order kept.
SchemeEvaluation fixed_coeffs_full(const StarCoefficients& coeffs, const ChannelSet& channels,
                                   const RadioConfig& radio, bool zero_eve) {
  const CascadedForms f = cascaded_forms(channels);
  const double noise = radio.noise_power_watt;
  SchemeEvaluation best;
  best.infeasible = true;
  for (DecodingOrder order : DecodingOrder::both()) {
    CVec w = combiner_for_coeffs(f, coeffs, order, radio.p_max_iu_watt, radio.p_max_ou_watt,
                                 noise);
    EffectiveGains g = gains_at(f, w, coeffs, zero_eve);
    if (g.z_iu <= 0 || g.z_ou <= 0) continue;
    fullcsi::PowerPair p = fullcsi::optimal_power_full(g.z_iu, g.z_ou, g.ze_iu, g.ze_ou, noise,
                                                       radio.p_max_iu_watt,
                                                       radio.p_max_ou_watt, order);
    SecrecyReport rep = report_at(g, p.p_iu, p.p_ou, order, noise);
    if (best.infeasible || rep.min_secrecy_capacity > best.metric) {
      best.metric = rep.min_secrecy_capacity;
      best.report = rep;
      best.infeasible = false;
    }
  }
  return best;
}

SchemeEvaluation fixed_coeffs_stat(const StarCoefficients& coeffs, const ChannelSet& channels,
                                   const RadioConfig& radio, const RateConfig& rates) {
  const CascadedForms f = cascaded_forms(channels);
  const double noise = radio.noise_power_watt;
  SchemeEvaluation best;
  best.infeasible = true;
  best.metric = 1.0;
  for (DecodingOrder order : DecodingOrder::both()) {
    CVec w = combiner_for_coeffs(f, coeffs, order, radio.p_max_iu_watt, radio.p_max_ou_watt,
                                 noise);
    EffectiveGains g = gains_at(f, w, coeffs, true);
    if (g.z_iu <= 0 || g.z_ou <= 0) continue;
    statcsi::StatPower p = statcsi::optimal_power_stat(
        g.z_iu, g.z_ou, noise, rates, 1.0, radio.p_max_iu_watt, radio.p_max_ou_watt, order);
    if (!p.feasible) continue;
    statcsi::SopParams sp_iu;
    sp_iu.noise = noise;
    sp_iu.power = p.p_iu;
    sp_iu.large_scale_product = channels.gain_eve * channels.gain_iu;
    sp_iu.rate_gap = rates.gap_iu();
    sp_iu.effective_gain =
        (coeffs.beta_t.array() * channels.h_is_small.cwiseAbs2().array()).sum();
    statcsi::SopParams sp_ou;
    sp_ou.noise = noise;
    sp_ou.power = p.p_ou;
    sp_ou.large_scale_product = channels.gain_eve * channels.gain_ou;
    sp_ou.rate_gap = rates.gap_ou();
    sp_ou.effective_gain =
        (coeffs.beta_r.array() * channels.h_os_small.cwiseAbs2().array()).sum();
    SecrecyReport rep;
    rep.iu_first = order.iu_first;
    rep.sop_iu = statcsi::sop_closed_form(sp_iu);
    rep.sop_ou = statcsi::sop_closed_form(sp_ou);
    rep.max_sop = std::max(*rep.sop_iu, *rep.sop_ou);
    if (best.infeasible || *rep.max_sop < best.metric) {
      best.metric = *rep.max_sop;
      best.report = rep;
      best.infeasible = false;
    }
  }
  return best;
}

// Evaluation at a fixed receive vector and fixed surface coefficients:
// closed-form powers only, better decoding order kept.
SchemeEvaluation fixed_operating_point(const CVec& w, const StarCoefficients& coeffs,
                                       const ChannelSet& channels, const RadioConfig& radio,
                                       bool zero_eve) {
  const CascadedForms f = cascaded_forms(channels);
  const double noise = radio.noise_power_watt;
  SchemeEvaluation best;
  best.infeasible = true;
  EffectiveGains g = gains_at(f, w, coeffs, zero_eve);
  if (g.z_iu <= 0 || g.z_ou <= 0) return best;
  for (DecodingOrder order : DecodingOrder::both()) {
    fullcsi::PowerPair p = fullcsi::optimal_power_full(g.z_iu, g.z_ou, g.ze_iu, g.ze_ou, noise,
                                                       radio.p_max_iu_watt,
                                                       radio.p_max_ou_watt, order);
    SecrecyReport rep = report_at(g, p.p_iu, p.p_ou, order, noise);
    if (best.infeasible || rep.min_secrecy_capacity > best.metric) {
      best.metric = rep.min_secrecy_capacity;
      best.report = rep;
      best.infeasible = false;
    }
  }
  return best;
}

// Half-duration slot of a time-shared scheme after snapping: matched-filter
// combining and full slot power.
double snapped_single_user_rate(const fullcsi::FullCsiOutcome& out, const ChannelSet& channels,
                                const RadioConfig& radio, int bits, bool is_iu) {
  StarCoefficients snapped = quantize_coefficients(out.coeffs, bits);
  const CascadedForms f = cascaded_forms(channels);
  const CVec u = is_iu ? snapped.transmit_vector() : snapped.reflect_vector();
  const CVec eff = is_iu ? CVec(f.q_iu * u) : CVec(f.q_ou * u);
  const double p = is_iu ? radio.p_max_iu_watt : radio.p_max_ou_watt;
  const double gamma = p * eff.squaredNorm() / radio.noise_power_watt;
  const CVec& qe = is_iu ? f.q_eve_iu : f.q_eve_ou;
  const double gamma_e = p * std::norm((qe.adjoint() * u)(0)) / radio.noise_power_watt;
  return 0.5 * secrecy_capacity(gamma, gamma_e);
}

}  // namespace

SchemeEvaluation evaluate_scheme_full(const SchemeSpec& spec, const ChannelSet& channels,
                                      const RadioConfig& radio, const Tolerances& tol,
                                      std::uint64_t seed) {
  const int n = radio.num_ris_elements;
  SchemeEvaluation eval;
  switch (spec.kind) {
    case SchemeKind::StarNoma:
    case SchemeKind::CRisNoma: {
      fullcsi::AhbOptions opt;
      opt.init_seed = seed;
      if (spec.kind == SchemeKind::CRisNoma) opt.layout = ElementLayout::split(n);
      fullcsi::FullCsiOutcome out = fullcsi::ahb_solve(channels, radio, tol, opt);
      if (spec.quantization_bits) {
        // Quantization study: snap the surface, keep the optimized receive
        // vector, re-derive the power policy.
        eval = fixed_operating_point(out.w,
                                     quantize_coefficients(out.coeffs, *spec.quantization_bits),
                                     channels, radio, false);
      } else {
        eval.metric = out.objective;
        eval.report = out.report;
      }
      break;
    }
    case SchemeKind::StarOma:
    case SchemeKind::CRisOma: {
      fullcsi::AhbOptions opt;
      opt.init_seed = seed;
      if (spec.kind == SchemeKind::CRisOma) opt.layout = ElementLayout::split(n);
      fullcsi::FullCsiOutcome iu =
          fullcsi::ahb_solve_single(channels, radio, tol, UserMode::IuOnly, opt);
      fullcsi::FullCsiOutcome ou =
          fullcsi::ahb_solve_single(channels, radio, tol, UserMode::OuOnly, opt);
      double r_iu = 0.5 * iu.objective;
      double r_ou = 0.5 * ou.objective;
      if (spec.quantization_bits) {
        r_iu = snapped_single_user_rate(iu, channels, radio, *spec.quantization_bits, true);
        r_ou = snapped_single_user_rate(ou, channels, radio, *spec.quantization_bits, false);
      }
      eval.metric = std::min(r_iu, r_ou);
      eval.report.iu_first = true;
      eval.report.gamma_iu = iu.report.gamma_iu;
      eval.report.gamma_ou = ou.report.gamma_ou;
      eval.report.gamma_eve_iu = iu.report.gamma_eve_iu;
      eval.report.gamma_eve_ou = ou.report.gamma_eve_ou;
      eval.report.secrecy_capacity_iu = r_iu;
      eval.report.secrecy_capacity_ou = r_ou;
      eval.report.min_secrecy_capacity = eval.metric;
      break;
    }
    case SchemeKind::RandomPhase: {
      StarCoefficients coeffs = random_coefficients(n, seed);
      if (spec.quantization_bits)
        coeffs = quantize_coefficients(coeffs, *spec.quantization_bits);
      eval = fixed_coeffs_full(coeffs, channels, radio, false);
      break;
    }
  }
  return eval;
}

SchemeEvaluation evaluate_scheme_stat(const SchemeSpec& spec, const ChannelSet& channels,
                                      const RadioConfig& radio, const RateConfig& rates,
                                      const Tolerances& tol, std::uint64_t seed) {
  const int n = radio.num_ris_elements;
  SchemeEvaluation eval;
  switch (spec.kind) {
    case SchemeKind::StarNoma:
    case SchemeKind::CRisNoma: {
      statcsi::ExtendedAhbOptions opt;
      opt.init_seed = seed;
      if (spec.kind == SchemeKind::CRisNoma) opt.layout = ElementLayout::split(n);
      statcsi::StatCsiOutcome out = statcsi::extended_ahb(channels, radio, rates, tol, opt);
      eval.infeasible = !out.feasible;
      eval.metric = out.feasible ? out.max_sop : 1.0;
      eval.report.iu_first = out.order.iu_first;
      eval.report.sop_iu = out.sop_iu;
      eval.report.sop_ou = out.sop_ou;
      eval.report.max_sop = eval.metric;
      break;
    }
    case SchemeKind::StarOma:
    case SchemeKind::CRisOma: {
      statcsi::ExtendedAhbOptions opt;
      opt.init_seed = seed;
      if (spec.kind == SchemeKind::CRisOma) opt.layout = ElementLayout::split(n);
      // Two half-duration slots double the effective rate requirements.
      statcsi::StatCsiOutcome iu = statcsi::extended_ahb_single(channels, radio, rates, tol,
                                                                UserMode::IuOnly, 2.0, opt);
      statcsi::StatCsiOutcome ou = statcsi::extended_ahb_single(channels, radio, rates, tol,
                                                                UserMode::OuOnly, 2.0, opt);
      eval.infeasible = !(iu.feasible && ou.feasible);
      const double sop_iu = iu.feasible ? iu.sop_iu : 1.0;
      const double sop_ou = ou.feasible ? ou.sop_ou : 1.0;
      eval.metric = std::max(sop_iu, sop_ou);
      eval.report.iu_first = true;
      eval.report.sop_iu = sop_iu;
      eval.report.sop_ou = sop_ou;
      eval.report.max_sop = eval.metric;
      break;
    }
    case SchemeKind::RandomPhase: {
      StarCoefficients coeffs = random_coefficients(n, seed);
      if (spec.quantization_bits)
        coeffs = quantize_coefficients(coeffs, *spec.quantization_bits);
      eval = fixed_coeffs_stat(coeffs, channels, radio, rates);
      if (eval.infeasible) eval.metric = 1.0;
      break;
    }
  }
  return eval;
}

double transmission_rate_no_eve(const ChannelSet& channels, const RadioConfig& radio,
                                const Tolerances& tol, std::uint64_t seed,
                                std::optional<int> quantization_bits) {
  fullcsi::AhbOptions opt;
  opt.init_seed = seed;
  opt.zero_eavesdropper = true;
  fullcsi::FullCsiOutcome out = fullcsi::ahb_solve(channels, radio, tol, opt);
  if (!quantization_bits) return out.objective;

  SchemeEvaluation eval = fixed_operating_point(
      out.w, quantize_coefficients(out.coeffs, *quantization_bits), channels, radio, true);
  return eval.infeasible ? 0.0 : eval.metric;
}

}  // namespace baselines
}  // namespace starsec
