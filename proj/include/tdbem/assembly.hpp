#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tdbem/datum.hpp"
#include "tdbem/mesh.hpp"
#include "tdbem/quadrature.hpp"

namespace tdbem {

// How two elements of one mesh relate; decides the inner quadrature.
struct PairRelation {
  enum Kind { coincident, touching, separated } kind = separated;
  // Shared endpoint (0 = start, 1 = end) on the test / trial element.
  int test_end = -1;
  int trial_end = -1;
};

PairRelation classify_pair(const SpatialMesh& mesh, int test, int trial);

// Local 2x2 matrix L(a, b) = int_test int_trial N_a(x) N_b(y) H[lag - r] K(x, y, lag)
// with K the curly-brace part of the matrix kernel and N_0, N_1 the start/end
// hat restrictions. Zero for lag <= 0.
Eigen::Matrix2d pair_kernel(const Segment& test, const Segment& trial, const PairRelation& rel, double lag,
                            const QuadratureConfig& cfg);

// Global M x M matrix of the same double integral against hat functions.
Eigen::MatrixXd kernel_matrix(const SpatialMesh& mesh, double lag, const QuadratureConfig& cfg);

// Block E_{row, col} of the Galerkin matrix (row >= col).
Eigen::MatrixXd assemble_block(int row, int col, const SpatialMesh& space, const TimeMesh& time,
                               const QuadratureConfig& cfg);

// beta^{(row)}_j = int f phi_j d_t nu_row.
Eigen::VectorXd assemble_rhs(int row, const SpatialMesh& space, const TimeMesh& time, const Datum& f);

struct AssemblyStats {
  long long entries_computed = 0;
  long long entries_copied = 0;
  int lags_computed = 0;
  int lags_reused = 0;
  int blocks_computed = 0;
  int blocks_copied = 0;
};

// Block lower-triangular space-time system. Kernel matrices are cached per
// distinct time lag t_a - t_b; blocks are second differences of them.
class BlockSystem {
 public:
  BlockSystem(SpatialMesh space, TimeMesh time, Datum datum, QuadratureConfig cfg);

  const SpatialMesh& space() const { return space_; }
  const TimeMesh& time() const { return time_; }
  const Datum& datum() const { return datum_; }
  const QuadratureConfig& quadrature() const { return cfg_; }
  int num_dofs() const { return space_.num_dofs(); }
  int num_intervals() const { return time_.num_intervals(); }

  // Blocks satisfy E_{i, i'} = E_{i - i', 0}; only block row 0 is stored.
  bool toeplitz() const { return toeplitz_; }
  const Eigen::MatrixXd& block(int row, int col) const;
  const Eigen::VectorXd& rhs(int row) const { return rhs_[row]; }

  // Refinement generation per spatial dof and per time interval when its
  // rows/columns were last recomputed.
  int epoch() const { return epoch_; }
  const std::vector<int>& dof_epoch() const { return dof_epoch_; }
  const std::vector<int>& interval_epoch() const { return interval_epoch_; }
  const AssemblyStats& last_stats() const { return stats_; }

  void update_after_space_refinement(const SpaceRefinement& ref);
  void update_after_time_refinement(const TimeRefinement& ref);
  // Replaces the datum; blocks are untouched.
  void set_datum(const Datum& f);

  const std::vector<double>& cached_lags() const { return lags_; }

 private:
  int find_lag(double lag) const;
  const Eigen::MatrixXd* lag_matrix(double lag) const;
  void ensure_lags();
  Eigen::MatrixXd combine_block(int row, int col) const;
  void rebuild_blocks(const TimeProvenance* prov, const std::vector<Eigen::MatrixXd>* old_blocks, bool old_toeplitz);
  void rebuild_rhs();
  int block_index(int row, int col) const;

  SpatialMesh space_;
  TimeMesh time_;
  Datum datum_;
  QuadratureConfig cfg_;
  bool toeplitz_ = false;
  std::vector<double> lags_;
  std::vector<Eigen::MatrixXd> lag_mats_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::VectorXd> rhs_;
  int epoch_ = 0;
  std::vector<int> dof_epoch_;
  std::vector<int> interval_epoch_;
  AssemblyStats stats_;
};

BlockSystem assemble_system(const SpatialMesh& space, const TimeMesh& time, const Datum& f,
                            const QuadratureConfig& cfg);

}  // namespace tdbem
