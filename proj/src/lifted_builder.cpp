#include "lifted_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>


namespace starsec {
namespace lifted {

using conic::LinExpr;
using conic::ProgramBuilder;

MatrixVar add_hermitian_var(ProgramBuilder& pb, int complex_side) {
  MatrixVar mv;
  mv.side = 2 * complex_side;
  mv.start = pb.add_variables(conic::svec_dim(mv.side));
  pb.add_psd_variable_block(mv.start, mv.side);
  return mv;
}

LinExpr herm_inner(const MatrixVar& var, const CMat& c) {
  Vec coeff = conic::svec(conic::hermitian_embed(c));
  LinExpr e;
  for (int i = 0; i < coeff.size(); ++i)
    if (coeff(i) != 0.0) e.add(var.start + i, 0.5 * coeff(i));
  return e;
}

LinExpr complex_trace(const MatrixVar& var) {
  LinExpr e;
  for (int c = 0; c < var.side; ++c) e.add(var.start + diag_index(c, var.side), 0.5);
  return e;
}

LinExpr complex_diag(const MatrixVar& var, int c) {
  const int k = var.side / 2;
  LinExpr e;
  e.add(var.start + diag_index(c, var.side), 0.5);
  e.add(var.start + diag_index(c + k, var.side), 0.5);
  return e;
}

CascadeData::CascadeData(const CMat& cascade) : q(cascade) {
  emb = conic::complex_embed(cascade);
  kmap = conic::congruence_coefficients(emb);
}

PolarizationLocal::PolarizationLocal(const CascadeData& casc, const CMat& w_local,
                                     const CMat& u_local) {
  const Mat xw = conic::hermitian_embed(w_local);
  const Mat xu = conic::hermitian_embed(u_local);
  const Mat a = casc.emb.transpose() * xw * casc.emb;
  const double s = 1.0 / std::sqrt(2.0);
  f_plus = conic::svec(Mat(s * (a + xu)));
  f_minus = conic::svec(Mat(s * (a - xu)));
}

namespace {

// Affine svec entries of (Q^T Xw Q + sign * Xu)/sqrt(2).
std::vector<LinExpr> combination_entries(const CascadeData& casc, const MatrixVar& w_var,
                                         const MatrixVar& u_var, double sign) {
  const double s = 1.0 / std::sqrt(2.0);
  const int out_dim = static_cast<int>(casc.kmap.rows());
  std::vector<LinExpr> rows(out_dim);
  for (int r = 0; r < out_dim; ++r) {
    LinExpr& e = rows[r];
    for (int cidx = 0; cidx < casc.kmap.cols(); ++cidx) {
      const double v = casc.kmap(r, cidx);
      if (v != 0.0) e.add(w_var.start + cidx, s * v);
    }
    e.add(u_var.start + r, sign * s);
  }
  return rows;
}

// <f, (Q^T Xw Q + sign*Xu)/sqrt(2)> as a linear expression.
LinExpr inner_with_combination(const Vec& f, const CascadeData& casc, const MatrixVar& w_var,
                               const MatrixVar& u_var, double sign) {
  const double s = 1.0 / std::sqrt(2.0);
  Vec on_w = casc.kmap.transpose() * f;
  LinExpr e;
  for (int i = 0; i < on_w.size(); ++i)
    if (on_w(i) != 0.0) e.add(w_var.start + i, s * on_w(i));
  for (int i = 0; i < f.size(); ++i)
    if (f(i) != 0.0) e.add(u_var.start + i, sign * s * f(i));
  return e;
}

}  // namespace

void add_polarization_lower(ProgramBuilder& pb, const CascadeData& casc,
                            const MatrixVar& w_var, const MatrixVar& u_var,
                            const PolarizationLocal& local, int lb_var) {
  const int epi = pb.add_variable();
  pb.add_quad_epigraph(combination_entries(casc, w_var, u_var, -1.0), LinExpr::var(epi));
  LinExpr row = inner_with_combination(local.f_plus, casc, w_var, u_var, +1.0);
  row *= 2.0;
  row.constant -= local.f_plus.squaredNorm();
  row.add(epi, -1.0);
  row.add(lb_var, -4.0);
  pb.add_nonneg(row);
}

void add_polarization_upper(ProgramBuilder& pb, const CascadeData& casc,
                            const MatrixVar& w_var, const MatrixVar& u_var,
                            const PolarizationLocal& local, int ub_var) {
  const int epi = pb.add_variable();
  pb.add_quad_epigraph(combination_entries(casc, w_var, u_var, +1.0), LinExpr::var(epi));
  LinExpr row = inner_with_combination(local.f_minus, casc, w_var, u_var, -1.0);
  row *= 2.0;
  row.constant -= local.f_minus.squaredNorm();
  LinExpr full = LinExpr::var(ub_var, 4.0);
  full += row;
  full.add(epi, -1.0);
  pb.add_nonneg(full);
}

void add_rank_penalty(ProgramBuilder& pb, const MatrixVar& u_var, const CVec& top,
                      int rank_gap_var) {
  const int k = static_cast<int>(top.size());
  CMat deflate = CMat::Identity(k, k) - top * top.adjoint();
  LinExpr row = LinExpr::var(rank_gap_var);
  LinExpr inner = herm_inner(u_var, deflate);
  inner *= -1.0;
  row += inner;
  pb.add_nonneg(row);
}

void add_energy_rows(ProgramBuilder& pb, const std::vector<int>& t_elements,
                     const std::vector<int>& r_elements, const MatrixVar& ut_var,
                     const MatrixVar& ur_var) {
  auto local_index = [](const std::vector<int>& v, int global) {
    auto it = std::find(v.begin(), v.end(), global);
    return it == v.end() ? -1 : static_cast<int>(it - v.begin());
  };
  std::vector<int> all = t_elements;
  for (int g : r_elements)
    if (local_index(all, g) < 0) all.push_back(g);
  std::sort(all.begin(), all.end());
  for (int g : all) {
    const int ti = local_index(t_elements, g);
    const int ri = local_index(r_elements, g);
    LinExpr row(1.0);
    if (ti >= 0) {
      LinExpr d = complex_diag(ut_var, ti);
      d *= -1.0;
      row += d;
    }
    if (ri >= 0) {
      LinExpr d = complex_diag(ur_var, ri);
      d *= -1.0;
      row += d;
    }
    pb.add_nonneg(row);
  }
}

conic::ConeSolution solve_lifted(const conic::ConeProgram& program) {
  conic::SolveOptions opts;
  conic::ConeSolution sol = conic::solve(program, opts);
  if (sol.status == conic::SolveStatus::Optimal ||
      sol.status == conic::SolveStatus::PrimalInfeasible ||
      sol.status == conic::SolveStatus::DualInfeasible)
    return sol;
  if (residual_score(sol) <= 5e-5) return sol;  // callers accept this band
  if (std::getenv("STARSEC_TRACE_ESCALATE"))
    std::fprintf(stderr, "[escalate] score %.2e\n", residual_score(sol));
  opts.extended_precision = true;
  conic::ConeSolution retry = conic::solve(program, opts);
  if (retry.status == conic::SolveStatus::Optimal ||
      residual_score(retry) < residual_score(sol))
    return retry;
  return sol;
}

}  // namespace lifted
}  // namespace starsec
