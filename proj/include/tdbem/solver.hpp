#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "tdbem/assembly.hpp"

namespace tdbem {

// Galerkin coefficients alpha^{(i)}_j, one spatial vector per time basis function.
struct Solution {
  std::vector<Eigen::VectorXd> alpha;

  int num_intervals() const { return static_cast<int>(alpha.size()); }
  int num_dofs() const { return alpha.empty() ? 0 : static_cast<int>(alpha.front().size()); }
};

class SingularBlockError : public std::runtime_error {
 public:
  SingularBlockError(int block, double rcond);
  int block() const { return block_; }

 private:
  int block_;
};

struct SolveOptions {
  // Use a single factorization of the diagonal block on Toeplitz systems.
  bool reuse_factorization = true;
  double rcond_threshold = 1e-14;
};

Solution block_forward_solve(const BlockSystem& sys, const SolveOptions& opt = {});

// max over rows of ||sum_i E_{row,i} alpha^{(i)} - beta^{(row)}|| / ||beta||.
double block_residual(const BlockSystem& sys, const Solution& sol);

// E_h = sum alpha . beta.
double discrete_energy(const BlockSystem& sys, const Solution& sol);

double squared_energy_error(double energy, double reference);

}  // namespace tdbem
