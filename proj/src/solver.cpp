#include "tdbem/solver.hpp"

#include <cmath>
#include <string>

#include "tdbem/format.hpp"

namespace tdbem {

SingularBlockError::SingularBlockError(int block, double rcond)
    : std::runtime_error("diagonal block " + std::to_string(block) + " is singular to working precision (rcond " +
                         format_real(rcond) + ")"),
      block_(block) {}

namespace {

Eigen::PartialPivLU<Eigen::MatrixXd> factor(const Eigen::MatrixXd& block, int index, double threshold) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(block);
  const double rc = lu.rcond();
  if (!(rc >= threshold)) throw SingularBlockError(index, rc);
  return lu;
}

}  // namespace

Solution block_forward_solve(const BlockSystem& sys, const SolveOptions& opt) {
  const int n = sys.num_intervals();
  const int m = sys.num_dofs();
  Solution sol;
  sol.alpha.assign(n, Eigen::VectorXd::Zero(m));
  if (m == 0) return sol;
  const bool reuse = opt.reuse_factorization && sys.toeplitz();
  Eigen::PartialPivLU<Eigen::MatrixXd> shared;
  if (reuse) shared = factor(sys.block(0, 0), 0, opt.rcond_threshold);
  Eigen::VectorXd b(m);
  for (int row = 0; row < n; ++row) {
    b = sys.rhs(row);
    for (int col = 0; col < row; ++col) b.noalias() -= sys.block(row, col) * sol.alpha[col];
    if (reuse) {
      sol.alpha[row] = shared.solve(b);
    } else {
      sol.alpha[row] = factor(sys.block(row, row), row, opt.rcond_threshold).solve(b);
    }
  }
  return sol;
}

double block_residual(const BlockSystem& sys, const Solution& sol) {
  double beta2 = 0.0;
  for (int row = 0; row < sys.num_intervals(); ++row) beta2 += sys.rhs(row).squaredNorm();
  const double beta = std::sqrt(beta2);
  double worst = 0.0;
  for (int row = 0; row < sys.num_intervals(); ++row) {
    Eigen::VectorXd r = -sys.rhs(row);
    for (int col = 0; col <= row; ++col) r.noalias() += sys.block(row, col) * sol.alpha[col];
    worst = std::max(worst, r.norm());
  }
  return beta > 0.0 ? worst / beta : worst;
}

double discrete_energy(const BlockSystem& sys, const Solution& sol) {
  double e = 0.0;
  for (int row = 0; row < sys.num_intervals(); ++row) e += sol.alpha[row].dot(sys.rhs(row));
  return e;
}

double squared_energy_error(double energy, double reference) { return std::abs(reference - energy); }

}  // namespace tdbem
