#pragma once

#include "shellreg/types.hpp"

#include <Eigen/Sparse>

#include <memory>

namespace shellreg {

/// Sparse Cholesky for symmetric positive definite systems whose sparsity
/// pattern stays fixed while the values change (active-set iterations).
///
/// Uses the supernodal CHOLMOD factorization when the BLAS it runs on passes
/// a start-up probe, the simplicial one otherwise.
class SpdSolver {
 public:
  SpdSolver();
  ~SpdSolver();
  SpdSolver(const SpdSolver&) = delete;
  SpdSolver& operator=(const SpdSolver&) = delete;

  void analyze(const Eigen::SparseMatrix<double>& a);
  /// Throws SingularSystem when the matrix is not positive definite.
  void factorize(const Eigen::SparseMatrix<double>& a);
  void compute(const Eigen::SparseMatrix<double>& a) {
    analyze(a);
    factorize(a);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Whether the supernodal factorization produces correct factors here.
bool supernodal_cholesky_works();

/// Call first thing in main().  Some OpenBLAS builds pick a broken kernel set
/// on recent AVX-512 CPUs; when the probe fails and no kernel set was chosen
/// explicitly, the process re-executes itself with OPENBLAS_CORETYPE=Haswell.
void prepare_linear_algebra(char** argv);

}  // namespace shellreg
