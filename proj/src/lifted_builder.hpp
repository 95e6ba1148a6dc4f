// Internal helpers shared by the full-CSI and statistical-CSI problem
// builders: embedded Hermitian matrix variables, polarization bound rows,
// surface energy constraints, and rank-penalty rows. All cascades entering
// here are pre-scaled by sqrt(power)/noise_std so slack values are the
// noise-normalized signal terms.
#pragma once

#include <vector>

#include "starsec/common.hpp"
#include "starsec/conic.hpp"

namespace starsec {
namespace lifted {

struct MatrixVar {
  int start = -1;  // first svec index in the variable vector
  int side = 0;    // embedded (real) side = 2x complex side
  int dim() const { return conic::svec_dim(side); }
};

// svec index of diagonal entry (c, c) for a matrix of the given side.
inline int diag_index(int c, int side) { return c * side - c * (c - 1) / 2; }

// Adds an embedded Hermitian PSD matrix variable of complex side k.
MatrixVar add_hermitian_var(conic::ProgramBuilder& pb, int complex_side);

// Linear expression (1/2) <emb(C), X> == Re Tr(C U) for Hermitian data C.
conic::LinExpr herm_inner(const MatrixVar& var, const CMat& c);

// Real trace of the embedded matrix scaled by 1/2 == complex trace.
conic::LinExpr complex_trace(const MatrixVar& var);

// (1/2)(X(c,c) + X(c+k,c+k)): the complex diagonal entry.
conic::LinExpr complex_diag(const MatrixVar& var, int c);

// One cascaded link with its embedding and congruence map onto svec space.
struct CascadeData {
  CMat q;    // scaled complex cascade, M x Ns
  Mat emb;   // 2M x 2Ns real embedding
  Mat kmap;  // svec(emb^T Xw emb) = kmap * svec(Xw)

  explicit CascadeData(const CMat& cascade);
};

// Local-point data for one polarization pair (cascade, U-side matrix).
struct PolarizationLocal {
  Vec f_plus;   // svec((Q^T Xw~ Q + Xu~)/sqrt(2))
  Vec f_minus;  // svec((Q^T Xw~ Q - Xu~)/sqrt(2))

  PolarizationLocal(const CascadeData& casc, const CMat& w_local, const CMat& u_local);
};

// Lower bound: adds the epigraph SOC for || (Q^T Xw Q - Xu)/sqrt(2) ||^2 and
// the linear row  2<f~+, f+> - ||f~+||^2 - epi - 4*lb >= 0.
void add_polarization_lower(conic::ProgramBuilder& pb, const CascadeData& casc,
                            const MatrixVar& w_var, const MatrixVar& u_var,
                            const PolarizationLocal& local, int lb_var);

// Upper bound: epigraph SOC for the plus term and
// 4*ub + 2<f~-, f-> - ||f~-||^2 - epi >= 0.
void add_polarization_upper(conic::ProgramBuilder& pb, const CascadeData& casc,
                            const MatrixVar& w_var, const MatrixVar& u_var,
                            const PolarizationLocal& local, int ub_var);

// DC rank-one penalty row: rank_gap >= Re Tr(U (I - top top^H)).
void add_rank_penalty(conic::ProgramBuilder& pb, const MatrixVar& u_var, const CVec& top,
                      int rank_gap_var);

// Per-element energy rows given the element index sets of both sides
// (global indices; elements on both sides share one row).
void add_energy_rows(conic::ProgramBuilder& pb, const std::vector<int>& t_elements,
                     const std::vector<int>& r_elements, const MatrixVar& ut_var,
                     const MatrixVar& ur_var);

// Solves a lifted subproblem, escalating to the extended-precision KKT path
// when the double-precision run stalls short of tolerance.
conic::ConeSolution solve_lifted(const conic::ConeProgram& program);

inline double residual_score(const conic::ConeSolution& sol) {
  return std::max({sol.primal_residual, sol.dual_residual, sol.duality_gap});
}

}  // namespace lifted
}  // namespace starsec
