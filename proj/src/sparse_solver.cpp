#include "shellreg/sparse_solver.hpp"

#include <Eigen/CholmodSupport>

#include <cstdlib>
#include <unistd.h>
#include <variant>
#include <vector>

namespace shellreg {

namespace {

using Sparse = Eigen::SparseMatrix<double>;
using Supernodal = Eigen::CholmodSupernodalLLT<Sparse>;
using Simplicial = Eigen::CholmodSimplicialLLT<Sparse>;

template <class Solver>
void configure(Solver& s) {
  auto& c = s.cholmod();
  c.print = 0;
  c.nmethods = 1;
  c.method[0].ordering = CHOLMOD_METIS;
  c.postorder = 1;
}

bool probe_supernodal() {
  // 5-point Laplacian on a 40 x 40 grid: large enough to produce supernodes
  // that go through the dense BLAS/LAPACK kernels.
  const int n = 40, size = n * n;
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = i * n + j;
      t.emplace_back(k, k, 4.0);
      if (i + 1 < n) {
        t.emplace_back(k, k + n, -1.0);
        t.emplace_back(k + n, k, -1.0);
      }
      if (j + 1 < n) {
        t.emplace_back(k, k + 1, -1.0);
        t.emplace_back(k + 1, k, -1.0);
      }
    }
  Sparse a(size, size);
  a.setFromTriplets(t.begin(), t.end());
  Supernodal s;
  configure(s);
  s.compute(a);
  if (s.info() != Eigen::Success) return false;
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(size, 1.0, 2.0);
  const Eigen::VectorXd x = s.solve(b);
  return (a * x - b).norm() <= 1e-10 * b.norm();
}

}  // namespace

bool supernodal_cholesky_works() {
  static const bool ok = probe_supernodal();
  return ok;
}

void prepare_linear_algebra(char** argv) {
  if (supernodal_cholesky_works()) return;
#if defined(__x86_64__)
  if (std::getenv("OPENBLAS_CORETYPE") == nullptr && __builtin_cpu_supports("avx2")) {
    setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    execv("/proc/self/exe", argv);
    // exec failed: carry on with the simplicial fallback
  }
#endif
  (void)argv;
}

struct SpdSolver::Impl {
  std::variant<std::unique_ptr<Supernodal>, std::unique_ptr<Simplicial>> solver;
};

SpdSolver::SpdSolver() : impl_(std::make_unique<Impl>()) {
  if (supernodal_cholesky_works()) {
    auto s = std::make_unique<Supernodal>();
    configure(*s);
    impl_->solver = std::move(s);
  } else {
    auto s = std::make_unique<Simplicial>();
    configure(*s);
    impl_->solver = std::move(s);
  }
}

SpdSolver::~SpdSolver() = default;

void SpdSolver::analyze(const Sparse& a) {
  std::visit([&](auto& s) { s->analyzePattern(a); }, impl_->solver);
}

void SpdSolver::factorize(const Sparse& a) {
  const bool ok = std::visit(
      [&](auto& s) {
        s->factorize(a);
        return s->info() == Eigen::Success;
      },
      impl_->solver);
  if (!ok) throw Error(ErrorCode::SingularSystem, "matrix is not positive definite");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  return std::visit([&](const auto& s) -> Eigen::VectorXd { return s->solve(b); }, impl_->solver);
}

}  // namespace shellreg
