#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <vector>

#include "starsec/common.hpp"

namespace starsec {
namespace conic {

// ---------------------------------------------------------------------------
// Symmetric-matrix vectorization and complex embedding helpers
// ---------------------------------------------------------------------------

inline int svec_dim(int side) { return side * (side + 1) / 2; }

// Scaled vectorization of the lower triangle (column-major, off-diagonal
// entries scaled by sqrt(2)) so that svec(X) . svec(Y) = <X, Y>_F.
Vec svec(const Mat& x);
Mat smat(const Vec& v);

// Real embedding [[Re, -Im], [Im, Re]] of an arbitrary complex matrix; it is
// a ring homomorphism (products and adjoints map to products and transposes).
Mat complex_embed(const CMat& a);

// Real symmetric embedding [[A, -B], [B, A]] of a Hermitian matrix A + iB.
// Eigenvalues are duplicated and the trace doubles; unembed applies the
// factor-1/2 projection back to the Hermitian part.
Mat hermitian_embed(const CMat& h);
CMat hermitian_unembed(const Mat& t);

// Nearest (Frobenius) positive semidefinite matrix via eigenvalue clipping.
Mat psd_project(const Mat& symmetric);
CMat psd_project(const CMat& hermitian);

// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
std::pair<double, CVec> leading_eigenvector(const CMat& hermitian);

// Coefficient matrix K of the congruence map: svec(B^T X B) = K svec(X)
// for symmetric X of side B.rows(); output side is B.cols().
Mat congruence_coefficients(const Mat& b);

// ---------------------------------------------------------------------------
// Cone program in standard form  min c.x  s.t.  A x + s = b,  s in K
// ---------------------------------------------------------------------------

enum class ConeKind { Zero, NonNeg, SecondOrder, Psd };

struct ConeBlock {
  ConeKind kind;
  int size;  // NonNeg/SecondOrder/Zero: row count; Psd: matrix side

  int rows() const { return kind == ConeKind::Psd ? svec_dim(size) : size; }
};

struct ConeProgram {
  int num_vars = 0;
  Vec objective;                               // c
  Eigen::SparseMatrix<double> constraint;      // A
  Vec rhs;                                     // b
  std::vector<ConeBlock> cones;

  int num_rows() const { return static_cast<int>(rhs.size()); }
  // Throws std::invalid_argument on inconsistent dimensions or block sizes.
  void validate() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations };

const char* to_string(SolveStatus status);

struct ConeSolution {
  Vec x;
  Vec y;  // dual multipliers, one per constraint row
  Vec s;  // slacks, one per constraint row (zero rows have s = 0)
  SolveStatus status = SolveStatus::MaxIterations;
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  double duality_gap = 0.0;      // relative
  double objective = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  double tolerance = 1e-6;  // relative primal/dual residual and gap target
  int max_iterations = 100;
  bool verbose = false;
  // Factorize the reduced KKT system in extended precision; slower but
  // rides out the ill-conditioned endgame of hard instances.
  bool extended_precision = false;
};

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling over the NonNeg/SecondOrder/Psd cones.
ConeSolution solve(const ConeProgram& program, const SolveOptions& options = {});

// Debug capture format (plain text, round-trips exactly at 17 digits).
void dump_program(const ConeProgram& program, std::ostream& os);
ConeProgram load_program(std::istream& is);

// ---------------------------------------------------------------------------
// Incremental construction helper
// ---------------------------------------------------------------------------

// A linear expression sum_i coeff_i x_i + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  static LinExpr var(int index, double coeff = 1.0) {
    LinExpr e;
    e.terms.emplace_back(index, coeff);
    return e;
  }
  LinExpr& add(int index, double coeff) {
    terms.emplace_back(index, coeff);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator*=(double k);
};

class ProgramBuilder {
 public:
  int add_variable(double objective_coeff = 0.0);
  int add_variables(int count);
  void set_objective(int var, double coeff);

  // expr == 0 and expr >= 0 rows.
  void add_equality(const LinExpr& expr);
  void add_nonneg(const LinExpr& expr);
  // ||v||^2 <= t via a second-order cone of dimension v.size() + 2.
  void add_quad_epigraph(const std::vector<LinExpr>& v, const LinExpr& t);
  // Marks a contiguous svec variable range [start, start + svec_dim(side))
  // as a PSD matrix block.
  void add_psd_variable_block(int start_var, int side);
  // General PSD constraint smat(b_block - A_block x) >= 0 from per-entry
  // svec expressions (used by generic SDP tests).
  void add_psd_rows(const std::vector<LinExpr>& svec_entries, int side);

  int num_variables() const { return num_vars_; }
  int num_soc_blocks() const { return soc_blocks_; }

  ConeProgram build() const;

 private:
  void push_rows(ConeKind kind, int size, const std::vector<LinExpr>& exprs);

  int num_vars_ = 0;
  int soc_blocks_ = 0;
  std::vector<double> obj_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
  std::vector<ConeBlock> cones_;
};

}  // namespace conic
}  // namespace starsec
