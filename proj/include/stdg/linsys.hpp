#pragma once

#include <Eigen/Dense>

#include <vector>

namespace stdg {

/// Square block-sparse matrix with uniform dense blocks. Each block row keeps
/// its few column blocks in insertion order.
class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;
  BlockSparseMatrix(int num_blocks, int block_dim);

  int num_blocks() const { return static_cast<int>(rows_.size()); }
  int block_dim() const { return dim_; }
  int size() const { return num_blocks() * dim_; }

  /// Block (i, j), created as zero if absent.
  Eigen::MatrixXd& block(int i, int j);
  /// nullptr when (i, j) is structurally zero.
  const Eigen::MatrixXd* find(int i, int j) const;
  void add_to_block(int i, int j, const Eigen::MatrixXd& value);

  int blocks_in_row(int i) const { return static_cast<int>(rows_[i].cols.size()); }
  const std::vector<int>& row_columns(int i) const { return rows_[i].cols; }
  const std::vector<Eigen::MatrixXd>& row_blocks(int i) const { return rows_[i].blocks; }

  Eigen::MatrixXd to_dense() const;
  /// max |A(i,j) - A(j,i)^T| over stored blocks
  double symmetry_defect() const;

 private:
  struct Row {
    std::vector<int> cols;
    std::vector<Eigen::MatrixXd> blocks;
  };
  int dim_ = 0;
  std::vector<Row> rows_;
};

/// y = A x. Throws std::invalid_argument on a dimension mismatch.
Eigen::VectorXd matvec(const BlockSparseMatrix& a, const Eigen::VectorXd& x);
void matvec(const BlockSparseMatrix& a, const Eigen::VectorXd& x, Eigen::VectorXd& y);

/// Removes the component along the all-ones vector.
void project_constant_mode(Eigen::VectorXd& x);

/// Inverse of the diagonal blocks, factorised once.
class BlockJacobi {
 public:
  BlockJacobi() = default;
  explicit BlockJacobi(const BlockSparseMatrix& a);
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;
  bool empty() const { return inv_.empty(); }

 private:
  int dim_ = 0;
  std::vector<Eigen::MatrixXd> inv_;
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;  // recomputed from the returned iterate
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  bool project_constant = false;
  const BlockJacobi* preconditioner = nullptr;  // built on the fly when null
};

struct SolveResult {
  Eigen::VectorXd x;
  CgReport report;
};

/// Preconditioned conjugate gradients for symmetric positive (semi-)definite A.
/// With project_constant the constant mode is removed from b, the residuals and
/// the iterate.
SolveResult cg_solve(const BlockSparseMatrix& a, const Eigen::VectorXd& b, const SolveOptions& opts,
                     const Eigen::VectorXd* x0 = nullptr);

/// Right-preconditioned BiCGSTAB for the non-symmetric momentum system.
SolveResult bicgstab_solve(const BlockSparseMatrix& a, const Eigen::VectorXd& b, const SolveOptions& opts,
                           const Eigen::VectorXd* x0 = nullptr);

}  // namespace stdg
