#include "starsec/fullcsi.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lifted_builder.hpp"
#include "starsec/rng.hpp"

namespace starsec {
namespace fullcsi {

using conic::LinExpr;
using lifted::MatrixVar;

ElementLayout ElementLayout::full(int n) {
  ElementLayout l;
  l.t_elements.resize(n);
  l.r_elements.resize(n);
  std::iota(l.t_elements.begin(), l.t_elements.end(), 0);
  std::iota(l.r_elements.begin(), l.r_elements.end(), 0);
  return l;
}

ElementLayout ElementLayout::split(int n) {
  ElementLayout l;
  for (int i = 0; i < n / 2; ++i) l.t_elements.push_back(i);
  for (int i = n / 2; i < n; ++i) l.r_elements.push_back(i);
  return l;
}

namespace {

CMat restrict_columns(const CMat& m, const std::vector<int>& cols) {
  CMat out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(i) = m.col(cols[i]);
  return out;
}

CVec restrict_entries(const CVec& v, const std::vector<int>& idx) {
  CVec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

double clamp0(double v) { return std::max(0.0, v); }

// Exact bilinear trace Tr(q^H W q U), clamped against round-off.
double bilinear(const CMat& q, const CMat& w, const CMat& u) {
  if (q.cols() == 0 || u.rows() == 0 || w.rows() == 0) return 0.0;
  return clamp0((q.adjoint() * w * q * u).trace().real());
}

double leakage(const CVec& qe, const CMat& u) {
  if (qe.size() == 0 || u.rows() == 0) return 0.0;
  return clamp0((qe.adjoint() * u * qe)(0).real());
}

}  // namespace

BeamformingTask BeamformingTask::from_channels(const ChannelSet& channels,
                                               const ElementLayout& layout, UserMode mode,
                                               DecodingOrder order, double p_iu, double p_ou,
                                               double noise, bool zero_eavesdropper) {
  CascadedForms f = cascaded_forms(channels);
  BeamformingTask task;
  task.q_iu = restrict_columns(f.q_iu, layout.t_elements);
  task.q_ou = restrict_columns(f.q_ou, layout.r_elements);
  task.q_eve_iu = restrict_entries(f.q_eve_iu, layout.t_elements);
  task.q_eve_ou = restrict_entries(f.q_eve_ou, layout.r_elements);
  if (zero_eavesdropper) {
    task.q_eve_iu.setZero();
    task.q_eve_ou.setZero();
  }
  task.layout = layout;
  task.mode = mode;
  task.order = order;
  task.p_iu = p_iu;
  task.p_ou = p_ou;
  task.noise = noise;
  return task;
}

namespace {

// Builder-side normalization. Each user's cascade is scaled so its bilinear
// slack value comes out near unity; the raw noise-normalized values span
// many orders of magnitude at high power, which wrecks the conditioning of
// the subproblems. `gamma_iu`/`gamma_ou` convert back to noise-normalized
// units. Eavesdropper cascades stay noise-normalized (their quadratic forms
// are the physical leakage SNRs).
struct ScaledTask {
  CMat q_iu, q_ou;
  CVec qe_iu, qe_ou;
  double gamma_iu = 1.0;
  double gamma_ou = 1.0;
  bool has_iu = true, has_ou = true;

  explicit ScaledTask(const BeamformingTask& task) {
    has_iu = task.mode != UserMode::OuOnly;
    has_ou = task.mode != UserMode::IuOnly;
    const double si2 = task.p_iu / task.noise;
    const double so2 = task.p_ou / task.noise;
    if (has_iu) gamma_iu = std::max(1.0, si2 * task.q_iu.squaredNorm());
    if (has_ou) gamma_ou = std::max(1.0, so2 * task.q_ou.squaredNorm());
    q_iu = std::sqrt(si2 / gamma_iu) * task.q_iu;
    q_ou = std::sqrt(so2 / gamma_ou) * task.q_ou;
    qe_iu = std::sqrt(si2) * task.q_eve_iu;
    qe_ou = std::sqrt(so2) * task.q_eve_ou;
  }
};

void check_local_feasible(const BeamformingTask& task, const sca::BeamformingIterate& local) {
  const auto& lt = local.local_coeff_t;
  const auto& lr = local.local_coeff_r;
  for (std::size_t i = 0; i < task.layout.t_elements.size(); ++i) {
    double total = lt.rows() ? lt(i, i).real() : 0.0;
    auto it = std::find(task.layout.r_elements.begin(), task.layout.r_elements.end(),
                        task.layout.t_elements[i]);
    if (it != task.layout.r_elements.end() && lr.rows())
      total += lr(it - task.layout.r_elements.begin(), it - task.layout.r_elements.begin()).real();
    if (total > 1.0 + 1e-8)
      throw std::invalid_argument("build_problem24: local point violates the energy constraint");
  }
}

}  // namespace

LiftedProblem build_problem24(const BeamformingTask& task, const sca::BeamformingIterate& local,
                              double mu, double tau) {
  if (mu < 0 || tau <= 0) throw std::invalid_argument("build_problem24: require mu >= 0, tau > 0");
  check_local_feasible(task, local);
  const ScaledTask st(task);
  const bool both = task.mode == UserMode::Both;
  const bool iu_strong = task.order.iu_first;

  conic::ProgramBuilder pb;
  LiftedProblem out;

  const int m = static_cast<int>(task.q_iu.rows());
  MatrixVar wv = lifted::add_hermitian_var(pb, m);
  out.w_start = wv.start;
  out.w_side = wv.side;

  MatrixVar utv, urv;
  if (st.has_iu) {
    utv = lifted::add_hermitian_var(pb, static_cast<int>(st.q_iu.cols()));
    out.ut_start = utv.start;
    out.ut_side = utv.side;
  }
  if (st.has_ou) {
    urv = lifted::add_hermitian_var(pb, static_cast<int>(st.q_ou.cols()));
    out.ur_start = urv.start;
    out.ur_side = urv.side;
  }

  // Core scalar slacks.
  if (st.has_iu) out.lb_iu = pb.add_variable();
  if (st.has_ou) out.lb_ou = pb.add_variable();
  if (both) {
    out.ub_iu = pb.add_variable();
    out.ub_ou = pb.add_variable();
    out.strong_sinr = pb.add_variable();
  }
  if (st.has_iu) out.rank_t = pb.add_variable(tau);
  if (st.has_ou) out.rank_r = pb.add_variable(tau);
  out.gap = pb.add_variable(-1.0);
  out.core_scalars = pb.num_variables() - wv.dim() - (st.has_iu ? utv.dim() : 0) -
                     (st.has_ou ? urv.dim() : 0);

  // Receive Gram normalization Tr(W) = 1.
  LinExpr trace_row = lifted::complex_trace(wv);
  trace_row.constant = -1.0;
  pb.add_equality(trace_row);

  // Per-element energy conservation.
  lifted::add_energy_rows(pb, st.has_iu ? task.layout.t_elements : std::vector<int>{},
                          st.has_ou ? task.layout.r_elements : std::vector<int>{}, utv, urv);

  // Polarization bounds for the active signal terms.
  if (st.has_iu) {
    lifted::CascadeData casc(st.q_iu);
    lifted::PolarizationLocal loc(casc, local.local_combiner, local.local_coeff_t);
    lifted::add_polarization_lower(pb, casc, wv, utv, loc, out.lb_iu);
    if (both) lifted::add_polarization_upper(pb, casc, wv, utv, loc, out.ub_iu);
  }
  if (st.has_ou) {
    lifted::CascadeData casc(st.q_ou);
    lifted::PolarizationLocal loc(casc, local.local_combiner, local.local_coeff_r);
    lifted::add_polarization_lower(pb, casc, wv, urv, loc, out.lb_ou);
    if (both) lifted::add_polarization_upper(pb, casc, wv, urv, loc, out.ub_ou);
  }

  const double g_strong = iu_strong ? st.gamma_iu : st.gamma_ou;
  const double g_weak = iu_strong ? st.gamma_ou : st.gamma_iu;
  if (both) {
    const int lb_strong = iu_strong ? out.lb_iu : out.lb_ou;
    const int ub_weak = iu_strong ? out.ub_ou : out.ub_iu;

    // Successive-decoding order constraint in conservative linear form
    // (noise-normalized units on both sides).
    LinExpr sic = LinExpr::var(lb_strong, g_strong);
    sic.add(ub_weak, -g_weak);
    pb.add_nonneg(sic);

    // Product upper bound feeding the strong-user SINR slack:
    // g_s*lb_strong >= (1/2)(weight*(g_w*ub_weak+1)^2 + phi^2/weight).
    const double weight = local.amgm_weight;
    if (weight <= 0) throw std::invalid_argument("build_problem24: nonpositive tangency weight");
    const int epi_g = pb.add_variable();
    {
      LinExpr gterm = LinExpr::var(ub_weak, g_weak);
      gterm.constant += 1.0;
      pb.add_quad_epigraph({gterm}, LinExpr::var(epi_g));
    }
    const int epi_phi = pb.add_variable();
    pb.add_quad_epigraph({LinExpr::var(out.strong_sinr)}, LinExpr::var(epi_phi));
    LinExpr prod = LinExpr::var(lb_strong, g_strong);
    prod.add(epi_g, -0.5 * weight);
    prod.add(epi_phi, -0.5 / weight);
    pb.add_nonneg(prod);
  }

  // Dinkelbach epigraph rows for the two capacity ratios.
  {
    const CVec& qe_strong = iu_strong ? st.qe_iu : st.qe_ou;
    const CVec& qe_weak = iu_strong ? st.qe_ou : st.qe_iu;
    const MatrixVar& u_strong = iu_strong ? utv : urv;
    const MatrixVar& u_weak = iu_strong ? urv : utv;

    if (both) {
      LinExpr row = LinExpr::var(out.strong_sinr);
      LinExpr leak = lifted::herm_inner(u_strong, CMat(qe_strong * qe_strong.adjoint()));
      leak *= -mu;
      row += leak;
      row.add(out.gap, -1.0);
      row.constant += 1.0 - mu;
      pb.add_nonneg(row);

      const int lb_weak = iu_strong ? out.lb_ou : out.lb_iu;
      LinExpr row2 = LinExpr::var(lb_weak, g_weak);
      LinExpr leak2 = lifted::herm_inner(u_weak, CMat(qe_weak * qe_weak.adjoint()));
      leak2 *= -mu;
      row2 += leak2;
      row2.add(out.gap, -1.0);
      row2.constant += 1.0 - mu;
      pb.add_nonneg(row2);
    } else {
      const bool iu = task.mode == UserMode::IuOnly;
      const int lb = iu ? out.lb_iu : out.lb_ou;
      const MatrixVar& uv = iu ? utv : urv;
      const CVec& qe = iu ? st.qe_iu : st.qe_ou;
      LinExpr row = LinExpr::var(lb, iu ? st.gamma_iu : st.gamma_ou);
      LinExpr leak = lifted::herm_inner(uv, CMat(qe * qe.adjoint()));
      leak *= -mu;
      row += leak;
      row.add(out.gap, -1.0);
      row.constant += 1.0 - mu;
      pb.add_nonneg(row);
    }
  }

  // Rank-one penalties.
  if (st.has_iu) lifted::add_rank_penalty(pb, utv, local.top_vec_t, out.rank_t);
  if (st.has_ou) lifted::add_rank_penalty(pb, urv, local.top_vec_r, out.rank_r);

  // Nonnegativity of the scalar slacks.
  for (int v : {out.lb_iu, out.lb_ou, out.ub_iu, out.ub_ou, out.strong_sinr, out.rank_t,
                out.rank_r, out.gap})
    if (v >= 0) pb.add_nonneg(LinExpr::var(v));

  out.gamma0_iu = st.gamma_iu;
  out.gamma0_ou = st.gamma_ou;
  out.soc_blocks = pb.num_soc_blocks();
  out.program = pb.build();
  return out;
}

double dinkelbach_mu(const BeamformingTask& task, const sca::BeamformingIterate& iterate) {
  const ScaledTask st(task);
  if (task.mode != UserMode::Both) {
    const bool iu = task.mode == UserMode::IuOnly;
    const double lb = iu ? iterate.sig_lb_iu : iterate.sig_lb_ou;
    const double ge = iu ? leakage(st.qe_iu, iterate.coeff_gram_t)
                         : leakage(st.qe_ou, iterate.coeff_gram_r);
    return clamp0((1.0 + lb) / (1.0 + ge));
  }
  const bool iu_strong = task.order.iu_first;
  const double ge_strong = iu_strong ? leakage(st.qe_iu, iterate.coeff_gram_t)
                                     : leakage(st.qe_ou, iterate.coeff_gram_r);
  const double ge_weak = iu_strong ? leakage(st.qe_ou, iterate.coeff_gram_r)
                                   : leakage(st.qe_iu, iterate.coeff_gram_t);
  const double lb_weak = iu_strong ? iterate.sig_lb_ou : iterate.sig_lb_iu;
  const double r1 = (1.0 + iterate.strong_sinr_lb) / (1.0 + ge_strong);
  const double r2 = (1.0 + lb_weak) / (1.0 + ge_weak);
  return clamp0(std::min(r1, r2));
}

namespace {

CMat extract_matrix(const Vec& x, int start, int side) {
  Vec seg = x.segment(start, conic::svec_dim(side));
  return conic::hermitian_unembed(conic::smat(seg));
}

}  // namespace

void sanitize_iterate(const BeamformingTask& task, sca::BeamformingIterate& it) {
  if (it.combiner_gram.rows()) {
    it.combiner_gram = conic::psd_project(it.combiner_gram);
    const double tr = it.combiner_gram.trace().real();
    if (tr > 1e-12) it.combiner_gram /= tr;
  }
  if (it.coeff_gram_t.rows()) it.coeff_gram_t = conic::psd_project(it.coeff_gram_t);
  if (it.coeff_gram_r.rows()) it.coeff_gram_r = conic::psd_project(it.coeff_gram_r);

  double worst = 1.0;
  for (std::size_t i = 0; i < task.layout.t_elements.size() && it.coeff_gram_t.rows(); ++i) {
    double total = it.coeff_gram_t(i, i).real();
    auto rit = std::find(task.layout.r_elements.begin(), task.layout.r_elements.end(),
                         task.layout.t_elements[i]);
    if (rit != task.layout.r_elements.end() && it.coeff_gram_r.rows())
      total += it.coeff_gram_r(rit - task.layout.r_elements.begin(),
                               rit - task.layout.r_elements.begin())
                   .real();
    worst = std::max(worst, total);
  }
  for (Eigen::Index i = 0; i < it.coeff_gram_r.rows(); ++i)
    worst = std::max(worst, it.coeff_gram_r(i, i).real());
  for (Eigen::Index i = 0; i < it.coeff_gram_t.rows(); ++i)
    worst = std::max(worst, it.coeff_gram_t(i, i).real());
  if (worst > 1.0) {
    const double shrink = 1.0 / (worst + 1e-12);
    if (it.coeff_gram_t.rows()) it.coeff_gram_t *= shrink;
    if (it.coeff_gram_r.rows()) it.coeff_gram_r *= shrink;
  }
  it.local_combiner = it.combiner_gram;
  it.local_coeff_t = it.coeff_gram_t;
  it.local_coeff_r = it.coeff_gram_r;
}

sca::BeamformingIterate make_initial_iterate(const BeamformingTask& task, std::uint64_t seed,
                                             double strong_bias) {
  const ScaledTask st(task);
  const int m = static_cast<int>(task.q_iu.rows());
  const int n_full = static_cast<int>(
      std::max(task.layout.t_elements.empty() ? 0 : task.layout.t_elements.back() + 1,
               task.layout.r_elements.empty() ? 0 : task.layout.r_elements.back() + 1));
  const bool iu_strong = task.order.iu_first;
  const double w_iu = task.mode == UserMode::Both ? (iu_strong ? strong_bias : 1.0 - strong_bias)
                                                  : 1.0;
  const double w_ou = task.mode == UserMode::Both ? (iu_strong ? 1.0 - strong_bias : strong_bias)
                                                  : 1.0;

  // Maximum-ratio style combiner from the summed cascades (padded to the
  // full element count so both layouts are handled uniformly).
  CMat sum = CMat::Zero(m, std::max(n_full, 1));
  if (st.has_iu)
    for (std::size_t i = 0; i < task.layout.t_elements.size(); ++i)
      sum.col(task.layout.t_elements[i]) += w_iu * st.q_iu.col(i);
  if (st.has_ou)
    for (std::size_t i = 0; i < task.layout.r_elements.size(); ++i)
      sum.col(task.layout.r_elements[i]) += w_ou * st.q_ou.col(i);
  Eigen::JacobiSVD<CMat> svd(sum, Eigen::ComputeThinU);
  CVec w0;
  if (sum.cwiseAbs().maxCoeff() > 0) {
    w0 = svd.matrixU().col(0);
  } else {
    w0 = CVec::Zero(m);
    w0(0) = 1.0;
  }

  sca::BeamformingIterate it;
  it.combiner_gram = w0 * w0.adjoint();

  Rng rng(seed, {0x494e4954u});
  auto coeff_start = [&](int count, double energy) {
    CVec u(count);
    for (int i = 0; i < count; ++i)
      u(i) = std::sqrt(energy) * std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    return u;
  };
  if (st.has_iu) {
    CVec ut = coeff_start(static_cast<int>(task.layout.t_elements.size()),
                          task.mode == UserMode::Both ? w_iu : 0.5);
    it.coeff_gram_t = ut * ut.adjoint();
    it.top_vec_t = ut / ut.norm();
  }
  if (st.has_ou) {
    CVec ur = coeff_start(static_cast<int>(task.layout.r_elements.size()),
                          task.mode == UserMode::Both ? w_ou : 0.5);
    it.coeff_gram_r = ur * ur.adjoint();
    it.top_vec_r = ur / ur.norm();
  }
  it.local_combiner = it.combiner_gram;
  it.local_coeff_t = it.coeff_gram_t;
  it.local_coeff_r = it.coeff_gram_r;
  return it;
}

namespace {

// Normalized signal terms of the local point; used to seed the slack values
// of a fresh (or re-powered) two-layer run.
void refresh_slacks(const BeamformingTask& task, sca::BeamformingIterate& it) {
  const ScaledTask st(task);
  it.sig_lb_iu =
      st.has_iu ? st.gamma_iu * bilinear(st.q_iu, it.local_combiner, it.local_coeff_t) : 0.0;
  it.sig_lb_ou =
      st.has_ou ? st.gamma_ou * bilinear(st.q_ou, it.local_combiner, it.local_coeff_r) : 0.0;
  it.sig_ub_iu = it.sig_lb_iu;
  it.sig_ub_ou = it.sig_lb_ou;
  if (task.mode == UserMode::Both) {
    const bool iu_strong = task.order.iu_first;
    const double t_strong = iu_strong ? it.sig_lb_iu : it.sig_lb_ou;
    const double t_weak = iu_strong ? it.sig_ub_ou : it.sig_ub_iu;
    it.strong_sinr_lb = t_strong / (t_weak + 1.0);
    it.amgm_weight = std::max(it.strong_sinr_lb / (t_weak + 1.0), 1e-9);
  } else {
    it.strong_sinr_lb = 0.0;
    it.amgm_weight = 1.0;
  }
  it.dinkelbach_ratio = 0.0;
  it.dinkelbach_gap = 0.0;
}

}  // namespace

namespace {

TwoLayerResult run_two_layer(const BeamformingTask& task, const Tolerances& tol,
                             sca::BeamformingIterate it, bool warm) {
  TwoLayerResult result;
  refresh_slacks(task, it);

  // The ratio starts from zero on a fresh run; a warm restart can resume
  // from the ratio the warm point already certifies.
  double mu = warm ? dinkelbach_mu(task, it) : 0.0;
  double tau = tol.penalty_init;

  const auto ranks_ok = [&](const sca::BeamformingIterate& cur) {
    const double need = 1.0 - tol.penalty_tol;
    if (cur.combiner_gram.rows() && sca::rank_one_extract(cur.combiner_gram).ratio < need)
      return false;
    if (cur.coeff_gram_t.rows() && sca::rank_one_extract(cur.coeff_gram_t).ratio < need)
      return false;
    if (cur.coeff_gram_r.rows() && sca::rank_one_extract(cur.coeff_gram_r).ratio < need)
      return false;
    return true;
  };

  bool converged = false;
  for (int outer = 0; outer < tol.max_outer; ++outer) {
    ++result.outer_iterations;
    double gap_prev = std::numeric_limits<double>::infinity();
    for (int inner = 0; inner < tol.max_inner; ++inner) {
      ++result.inner_iterations;
      LiftedProblem lp = build_problem24(task, it, mu, tau);
      conic::ConeSolution sol = lifted::solve_lifted(lp.program);
      if (sol.status != conic::SolveStatus::Optimal) {
        const double score =
            std::max({sol.primal_residual, sol.dual_residual, sol.duality_gap});
        if (sol.status == conic::SolveStatus::MaxIterations && score < 5e-5) {
          // Accept a slightly loose iterate; the SCA loop self-corrects.
        } else {
          if (const char* dump = std::getenv("STARSEC_DUMP_FAILED")) {
            std::ofstream os(dump);
            conic::dump_program(lp.program, os);
          }
          std::ostringstream msg;
          msg << "two_layer_solve: subproblem " << conic::to_string(sol.status)
              << " at inner iteration " << result.inner_iterations << " (outer " << outer + 1
              << ", residuals " << score << ")";
          if (sol.status == conic::SolveStatus::PrimalInfeasible)
            throw SubproblemInfeasible(msg.str());
          throw std::runtime_error(msg.str());
        }
      }

      it.combiner_gram = extract_matrix(sol.x, lp.w_start, lp.w_side);
      if (lp.ut_start >= 0) it.coeff_gram_t = extract_matrix(sol.x, lp.ut_start, lp.ut_side);
      if (lp.ur_start >= 0) it.coeff_gram_r = extract_matrix(sol.x, lp.ur_start, lp.ur_side);
      sanitize_iterate(task, it);
      if (lp.lb_iu >= 0) it.sig_lb_iu = lp.gamma0_iu * sol.x(lp.lb_iu);
      if (lp.lb_ou >= 0) it.sig_lb_ou = lp.gamma0_ou * sol.x(lp.lb_ou);
      if (lp.ub_iu >= 0) it.sig_ub_iu = lp.gamma0_iu * sol.x(lp.ub_iu);
      if (lp.ub_ou >= 0) it.sig_ub_ou = lp.gamma0_ou * sol.x(lp.ub_ou);
      if (lp.strong_sinr >= 0) it.strong_sinr_lb = sol.x(lp.strong_sinr);
      if (lp.rank_t >= 0) it.rank_gap_t = sol.x(lp.rank_t);
      if (lp.rank_r >= 0) it.rank_gap_r = sol.x(lp.rank_r);
      it.dinkelbach_gap = sol.x(lp.gap);
      it.penalty_scale = tau;
      result.gap_trace.push_back(it.dinkelbach_gap);

      // Parameter updates for the next round.
      mu = dinkelbach_mu(task, it);
      it.dinkelbach_ratio = mu;
      if (task.mode == UserMode::Both) {
        const double t_weak = task.order.iu_first ? it.sig_ub_ou : it.sig_ub_iu;
        it.amgm_weight = std::max(it.strong_sinr_lb / (t_weak + 1.0), 1e-9);
      }
      if (it.coeff_gram_t.rows())
        it.top_vec_t = sca::rank_one_extract(it.coeff_gram_t).unit;
      if (it.coeff_gram_r.rows())
        it.top_vec_r = sca::rank_one_extract(it.coeff_gram_r).unit;

      if (std::getenv("STARSEC_TRACE_INNER")) {
        std::fprintf(stderr,
                     "[inner %2d outer %d] xi=%.6g mu=%.6g phi=%.6g lbI=%.6g lbO=%.6g ubI=%.6g "
                     "ubO=%.6g rt=%.3g rr=%.3g tau=%.3g\n",
                     result.inner_iterations, outer + 1, it.dinkelbach_gap, mu,
                     it.strong_sinr_lb, it.sig_lb_iu, it.sig_lb_ou, it.sig_ub_iu, it.sig_ub_ou,
                     it.rank_gap_t, it.rank_gap_r, tau);
      }
      // The gap slack lives on the scale of the ratio numerator 1 + phi;
      // measuring its change against that scale makes the threshold an
      // (approximate) capacity increment, independent of the operating SNR.
      const double gap_scale = std::max(1.0, 1.0 + it.strong_sinr_lb);
      if (std::abs(it.dinkelbach_gap - gap_prev) <= tol.inner_tol * gap_scale) break;
      gap_prev = it.dinkelbach_gap;
    }

    const double penalty_sum = clamp0(it.rank_gap_t) + clamp0(it.rank_gap_r);
    if (penalty_sum <= tol.penalty_tol && ranks_ok(it)) {
      converged = true;
      break;
    }
    tau *= tol.penalty_growth;
  }
  it.degraded = !converged;
  result.iterate = it;
  return result;
}

}  // namespace

TwoLayerResult two_layer_solve(const BeamformingTask& task, const Tolerances& tol,
                               std::uint64_t init_seed,
                               const std::optional<sca::BeamformingIterate>& warm_start) {
  tol.validate();
  if (warm_start) return run_two_layer(task, tol, *warm_start, true);
  // A fresh start around a poor local point can make the conservative
  // surrogate infeasible for the chosen decoding order; retry with the
  // energy split and combiner skewed toward the first-decoded user.
  const double biases[] = {0.5, 0.85, 0.97};
  for (std::size_t attempt = 0; attempt < std::size(biases); ++attempt) {
    try {
      return run_two_layer(
          task, tol, make_initial_iterate(task, init_seed + attempt, biases[attempt]), false);
    } catch (const SubproblemInfeasible&) {
      if (attempt + 1 == std::size(biases)) throw;
    }
  }
  throw std::logic_error("two_layer_solve: unreachable");
}

PowerPair optimal_power_full(double z_iu, double z_ou, double z_eve_iu, double z_eve_ou,
                             double noise, double p_max_iu, double p_max_ou,
                             DecodingOrder order) {
  if (z_iu <= 0 || z_ou <= 0)
    throw std::domain_error("optimal_power_full: degenerate beamforming (zero signal gain)");
  if (noise <= 0 || p_max_iu <= 0 || p_max_ou <= 0)
    throw std::domain_error("optimal_power_full: nonpositive noise or power cap");

  // Normalize gains by the noise power; work with unit noise.
  const double zi = z_iu / noise, zo = z_ou / noise;
  const double zei = z_eve_iu / noise, zeo = z_eve_ou / noise;

  // Roles: the first-decoded user transmits at its cap; the second user's
  // power balances the two capacity ratios.
  const double zf = order.iu_first ? zi : zo;    // first (interfered) user
  const double zs = order.iu_first ? zo : zi;    // second (interference-free)
  const double zef = order.iu_first ? zei : zeo;
  const double zes = order.iu_first ? zeo : zei;
  const double cap_f = order.iu_first ? p_max_iu : p_max_ou;
  const double cap_s = order.iu_first ? p_max_ou : p_max_iu;

  const auto ratio_first = [&](double ps) {
    return (cap_f * zf + ps * zs + 1.0) / ((cap_f * zef + 1.0) * (ps * zs + 1.0));
  };
  const auto ratio_second = [&](double ps) { return (ps * zs + 1.0) / (ps * zes + 1.0); };

  double crossing = std::numeric_limits<double>::infinity();
  if (ratio_first(cap_s) < ratio_second(cap_s)) {
    // Unique crossing of the decreasing/increasing pair inside (0, cap_s).
    const double a = zs * zes - (cap_f * zef + 1.0) * zs * zs;
    const double b = zes * (cap_f * zf + 1.0) + zs - 2.0 * zs * (cap_f * zef + 1.0);
    const double c = cap_f * (zf - zef);
    double root = -1.0;
    if (std::abs(a) > 1e-300) {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        for (double cand : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
          if (cand > 0 && cand <= cap_s * (1.0 + 1e-9)) {
            if (root < 0 || std::abs(ratio_first(cand) - ratio_second(cand)) <
                                std::abs(ratio_first(root) - ratio_second(root)))
              root = cand;
          }
        }
      }
    } else if (b != 0.0) {
      const double cand = -c / b;
      if (cand > 0 && cand <= cap_s * (1.0 + 1e-9)) root = cand;
    }
    if (root < 0) {
      // Bisection fallback on the monotone difference.
      double lo = 0.0, hi = cap_s;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ratio_first(mid) >= ratio_second(mid))
          lo = mid;
        else
          hi = mid;
      }
      root = 0.5 * (lo + hi);
    }
    crossing = std::max(0.0, root);
  }

  const double sic_cap = cap_f * zf / zs;
  const double p_second = std::min({crossing, sic_cap, cap_s});
  PowerPair out;
  if (order.iu_first) {
    out.p_iu = cap_f;
    out.p_ou = p_second;
  } else {
    out.p_ou = cap_f;
    out.p_iu = p_second;
  }
  return out;
}

double min_secrecy_capacity(const BeamformingTask& task, const sca::BeamformingIterate& it,
                            double p_iu, double p_ou) {
  const double noise = task.noise;
  const double z_iu = bilinear(task.q_iu, it.combiner_gram, it.coeff_gram_t);
  const double z_ou = bilinear(task.q_ou, it.combiner_gram, it.coeff_gram_r);
  const double ze_iu = leakage(task.q_eve_iu, it.coeff_gram_t);
  const double ze_ou = leakage(task.q_eve_ou, it.coeff_gram_r);

  double r_min = std::numeric_limits<double>::infinity();
  if (task.mode != UserMode::OuOnly) {
    const double interference = (task.mode == UserMode::Both && task.order.iu_first)
                                    ? p_ou * z_ou
                                    : 0.0;
    const double gamma = p_iu * z_iu / (interference + noise);
    const double gamma_e = p_iu * ze_iu / noise;
    r_min = std::min(r_min, secrecy_capacity(gamma, gamma_e));
  }
  if (task.mode != UserMode::IuOnly) {
    const double interference = (task.mode == UserMode::Both && !task.order.iu_first)
                                    ? p_iu * z_iu
                                    : 0.0;
    const double gamma = p_ou * z_ou / (interference + noise);
    const double gamma_e = p_ou * ze_ou / noise;
    r_min = std::min(r_min, secrecy_capacity(gamma, gamma_e));
  }
  return r_min;
}

namespace {

CVec expand_to_full(const CVec& local, const std::vector<int>& idx, int n) {
  CVec full = CVec::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) full(idx[i]) = local(i);
  return full;
}

}  // namespace

FullCsiOutcome ahb_solve_order(const ChannelSet& channels, const RadioConfig& radio,
                               const Tolerances& tol, DecodingOrder order,
                               const AhbOptions& options) {
  radio.validate();
  const int n = radio.num_ris_elements;
  const ElementLayout layout = options.layout.value_or(ElementLayout::full(n));
  const double noise = radio.noise_power_watt;

  FullCsiOutcome outcome;
  outcome.order = order;

  double p_iu = radio.p_max_iu_watt;
  double p_ou = radio.p_max_ou_watt;
  std::optional<sca::BeamformingIterate> warm;
  double r_prev = std::numeric_limits<double>::infinity();
  BeamformingTask task;

  for (int alt = 0; alt < tol.max_alt; ++alt) {
    ++outcome.alternations;
    task = BeamformingTask::from_channels(channels, layout, UserMode::Both, order, p_iu, p_ou,
                                          noise, options.zero_eavesdropper);
    TwoLayerResult two = two_layer_solve(task, tol, options.init_seed, warm);
    warm = two.iterate;

    const double z_iu = bilinear(task.q_iu, two.iterate.combiner_gram, two.iterate.coeff_gram_t);
    const double z_ou = bilinear(task.q_ou, two.iterate.combiner_gram, two.iterate.coeff_gram_r);
    const double ze_iu = leakage(task.q_eve_iu, two.iterate.coeff_gram_t);
    const double ze_ou = leakage(task.q_eve_ou, two.iterate.coeff_gram_r);
    PowerPair p = optimal_power_full(z_iu, z_ou, ze_iu, ze_ou, noise, radio.p_max_iu_watt,
                                     radio.p_max_ou_watt, order);
    p_iu = p.p_iu;
    p_ou = p.p_ou;

    const double r = min_secrecy_capacity(task, two.iterate, p_iu, p_ou);
    // Monotone-acceptance safeguard: with inexact subproblem solves a stage
    // can fail to improve; stop at the best accepted point instead of
    // recording a dip.
    if (std::isfinite(r_prev) && r < r_prev - 1e-9) break;
    outcome.objective_trace.push_back(r);
    outcome.iterate = two.iterate;
    outcome.p_iu = p_iu;
    outcome.p_ou = p_ou;
    if (std::isfinite(r_prev) &&
        std::abs(r - r_prev) <= tol.alt_tol * std::max(1.0, std::abs(r_prev)))
      break;
    r_prev = r;
  }

  // Extract rank-one factors and settle the final operating point on them.
  outcome.degraded = outcome.iterate.degraded;
  auto wext = sca::rank_one_extract(outcome.iterate.combiner_gram);
  outcome.w = wext.unit;
  CVec ut_local = sca::rank_one_extract(outcome.iterate.coeff_gram_t).vector;
  CVec ur_local = sca::rank_one_extract(outcome.iterate.coeff_gram_r).vector;
  CVec ut = expand_to_full(ut_local, layout.t_elements, n);
  CVec ur = expand_to_full(ur_local, layout.r_elements, n);
  // Energy repair for extraction round-off.
  for (int i = 0; i < n; ++i) {
    const double total = std::norm(ut(i)) + std::norm(ur(i));
    if (total > 1.0) {
      ut(i) /= std::sqrt(total + 1e-12);
      ur(i) /= std::sqrt(total + 1e-12);
    }
  }
  outcome.coeffs = coefficients_from_vectors(ut, ur);

  const double zv_iu =
      task.q_iu.cols() ? std::norm((outcome.w.adjoint() * task.q_iu * ut_local)(0)) : 0.0;
  const double zv_ou =
      task.q_ou.cols() ? std::norm((outcome.w.adjoint() * task.q_ou * ur_local)(0)) : 0.0;
  const double zev_iu =
      task.q_eve_iu.size() ? std::norm((task.q_eve_iu.adjoint() * ut_local)(0)) : 0.0;
  const double zev_ou =
      task.q_eve_ou.size() ? std::norm((task.q_eve_ou.adjoint() * ur_local)(0)) : 0.0;
  if (zv_iu > 0 && zv_ou > 0) {
    PowerPair p = optimal_power_full(zv_iu, zv_ou, zev_iu, zev_ou, noise, radio.p_max_iu_watt,
                                     radio.p_max_ou_watt, order);
    outcome.p_iu = p.p_iu;
    outcome.p_ou = p.p_ou;
  } else {
    outcome.p_iu = radio.p_max_iu_watt;
    outcome.p_ou = radio.p_max_ou_watt;
  }

  SecrecyReport rep;
  rep.iu_first = order.iu_first;
  const double int_iu = order.iu_first ? outcome.p_ou * zv_ou : 0.0;
  const double int_ou = order.iu_first ? 0.0 : outcome.p_iu * zv_iu;
  rep.gamma_iu = outcome.p_iu * zv_iu / (int_iu + noise);
  rep.gamma_ou = outcome.p_ou * zv_ou / (int_ou + noise);
  rep.gamma_eve_iu = outcome.p_iu * zev_iu / noise;
  rep.gamma_eve_ou = outcome.p_ou * zev_ou / noise;
  rep.secrecy_capacity_iu = secrecy_capacity(rep.gamma_iu, rep.gamma_eve_iu);
  rep.secrecy_capacity_ou = secrecy_capacity(rep.gamma_ou, rep.gamma_eve_ou);
  rep.min_secrecy_capacity = std::min(rep.secrecy_capacity_iu, rep.secrecy_capacity_ou);
  outcome.report = rep;
  outcome.objective = rep.min_secrecy_capacity;
  return outcome;
}

FullCsiOutcome ahb_solve_single(const ChannelSet& channels, const RadioConfig& radio,
                                const Tolerances& tol, UserMode mode,
                                const AhbOptions& options) {
  radio.validate();
  if (mode == UserMode::Both)
    throw std::invalid_argument("ahb_solve_single: pick one user");
  const int n = radio.num_ris_elements;
  const ElementLayout layout = options.layout.value_or(ElementLayout::full(n));
  const double noise = radio.noise_power_watt;
  const bool iu = mode == UserMode::IuOnly;
  const double p_user = iu ? radio.p_max_iu_watt : radio.p_max_ou_watt;

  FullCsiOutcome outcome;
  outcome.order = DecodingOrder{iu};
  BeamformingTask task = BeamformingTask::from_channels(
      channels, layout, mode, DecodingOrder{iu}, iu ? p_user : 0.0, iu ? 0.0 : p_user, noise,
      options.zero_eavesdropper);
  // Capacity grows with power whenever positive secrecy is possible, so the
  // single user transmits at its cap and one joint-beamforming stage remains.
  TwoLayerResult two = two_layer_solve(task, tol, options.init_seed);
  outcome.iterate = two.iterate;
  outcome.alternations = 1;
  outcome.degraded = two.iterate.degraded;
  outcome.objective_trace.push_back(
      min_secrecy_capacity(task, two.iterate, task.p_iu, task.p_ou));
  outcome.p_iu = task.p_iu;
  outcome.p_ou = task.p_ou;

  outcome.w = sca::rank_one_extract(outcome.iterate.combiner_gram).unit;
  const auto& side_elems = iu ? layout.t_elements : layout.r_elements;
  const CMat& q_user = iu ? task.q_iu : task.q_ou;
  const CVec& q_eve = iu ? task.q_eve_iu : task.q_eve_ou;
  CVec u_local = sca::rank_one_extract(iu ? outcome.iterate.coeff_gram_t
                                          : outcome.iterate.coeff_gram_r)
                     .vector;
  CVec u_full = expand_to_full(u_local, side_elems, n);
  for (int i = 0; i < n; ++i)
    if (std::norm(u_full(i)) > 1.0) u_full(i) /= std::sqrt(std::norm(u_full(i)) + 1e-12);
  outcome.coeffs = iu ? coefficients_from_vectors(u_full, CVec::Zero(n))
                      : coefficients_from_vectors(CVec::Zero(n), u_full);

  const double zv = std::norm((outcome.w.adjoint() * q_user * u_local)(0));
  const double zev = q_eve.size() ? std::norm((q_eve.adjoint() * u_local)(0)) : 0.0;
  SecrecyReport rep;
  rep.iu_first = iu;
  const double gamma = p_user * zv / noise;
  const double gamma_e = p_user * zev / noise;
  if (iu) {
    rep.gamma_iu = gamma;
    rep.gamma_eve_iu = gamma_e;
    rep.secrecy_capacity_iu = secrecy_capacity(gamma, gamma_e);
    rep.min_secrecy_capacity = rep.secrecy_capacity_iu;
  } else {
    rep.gamma_ou = gamma;
    rep.gamma_eve_ou = gamma_e;
    rep.secrecy_capacity_ou = secrecy_capacity(gamma, gamma_e);
    rep.min_secrecy_capacity = rep.secrecy_capacity_ou;
  }
  outcome.report = rep;
  outcome.objective = rep.min_secrecy_capacity;
  return outcome;
}

FullCsiOutcome ahb_solve(const ChannelSet& channels, const RadioConfig& radio,
                         const Tolerances& tol, const AhbOptions& options) {
  FullCsiOutcome best;
  bool have = false;
  std::optional<SubproblemInfeasible> failure;
  for (DecodingOrder order : DecodingOrder::both()) {
    try {
      FullCsiOutcome cur = ahb_solve_order(channels, radio, tol, order, options);
      if (!have || cur.objective > best.objective) {
        best = cur;
        have = true;
      }
    } catch (const SubproblemInfeasible& e) {
      // The convexified landscape of this decoding order admits no feasible
      // start on this realization; the other order decides the outcome.
      failure = e;
    }
  }
  if (!have) throw *failure;
  return best;
}

}  // namespace fullcsi
}  // namespace starsec
