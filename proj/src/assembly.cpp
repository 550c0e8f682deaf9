#include "tdbem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tdbem/kernel.hpp"
#include "tdbem/parallel.hpp"

namespace tdbem {

namespace {

// Halving layers in front of a substituted outer piece next to a cone point.
constexpr int kOuterConeLayers = 3;

double point_segment_distance(const Vec2& p, const Segment& seg) {
  const Vec2 d = seg.b - seg.a;
  const double s = std::clamp(dot(p - seg.a, d) / dot(d, d), 0.0, 1.0);
  return distance(p, seg.point(s));
}

// Distance between two non-crossing segments.
double segment_distance(const Segment& u, const Segment& v) {
  return std::min({point_segment_distance(u.a, v), point_segment_distance(u.b, v), point_segment_distance(v.a, u),
                   point_segment_distance(v.b, u)});
}

// Parameter on `test` closest to `trial`, with the distance.
std::pair<double, double> closest_parameter(const Segment& test, const Segment& trial) {
  const Vec2 d = test.b - test.a;
  const double len2 = dot(d, d);
  double best_s = 0.0;
  double best = point_segment_distance(test.a, trial);
  for (double s : {1.0, std::clamp(dot(trial.a - test.a, d) / len2, 0.0, 1.0),
                   std::clamp(dot(trial.b - test.a, d) / len2, 0.0, 1.0)}) {
    const double dist = point_segment_distance(test.point(s), trial);
    if (dist < best) {
      best = dist;
      best_s = s;
    }
  }
  return {best_s, best};
}

bool canonical_first(const Segment& u, const Segment& v) {
  const Vec2 mu = u.midpoint();
  const Vec2 mv = v.midpoint();
  return mu.x < mv.x || (mu.x == mv.x && mu.y < mv.y);
}

// Element-pair local matrices for one lag, row-major over (test, trial).
struct PairTable {
  int n = 0;
  std::vector<Eigen::Matrix2d> local;
  std::vector<char> have;

  const Eigen::Matrix2d& at(int test, int trial) const { return local[static_cast<std::size_t>(test) * n + trial]; }
};

// Fills the pairs with a test or trial element flagged in `active` (all
// pairs when active is empty). Separated pairs are computed once in the
// canonical orientation and transposed.
PairTable compute_pairs(const SpatialMesh& mesh, double lag, const QuadratureConfig& cfg,
                        const std::vector<char>& active) {
  PairTable table;
  const int n = mesh.num_elements();
  table.n = n;
  table.local.assign(static_cast<std::size_t>(n) * n, Eigen::Matrix2d::Zero());
  table.have.assign(static_cast<std::size_t>(n) * n, 0);
  auto needed = [&](int a, int b) { return active.empty() || active[a] || active[b]; };

  parallel_for(n, [&](int kt) {
    const Segment test = mesh.element(kt);
    for (int k = 0; k < n; ++k) {
      if (!needed(kt, k)) continue;
      const PairRelation rel = classify_pair(mesh, kt, k);
      const Segment trial = mesh.element(k);
      if (rel.kind == PairRelation::separated && !canonical_first(test, trial)) continue;
      table.local[static_cast<std::size_t>(kt) * n + k] = pair_kernel(test, trial, rel, lag, cfg);
      table.have[static_cast<std::size_t>(kt) * n + k] = 1;
    }
  });
  for (int kt = 0; kt < n; ++kt)
    for (int k = 0; k < n; ++k) {
      const std::size_t idx = static_cast<std::size_t>(kt) * n + k;
      if (table.have[idx] || !needed(kt, k)) continue;
      table.local[idx] = table.local[static_cast<std::size_t>(k) * n + kt].transpose();
      table.have[idx] = 1;
    }
  return table;
}

int local_index(const SpatialMesh& mesh, int element, int dof) {
  return mesh.element_nodes(element)[0] == mesh.node_of_dof(dof) ? 0 : 1;
}

double matrix_entry(const SpatialMesh& mesh, const PairTable& table, int jt, int j) {
  double sum = 0.0;
  for (int kt : mesh.dof_support(jt)) {
    const int a = local_index(mesh, kt, jt);
    for (int k : mesh.dof_support(j)) sum += table.at(kt, k)(a, local_index(mesh, k, j));
  }
  return sum;
}

Eigen::MatrixXd combine(const TimeMesh& time, int row, int col, const auto& kernel_at) {
  const double c = 1.0 / (2.0 * std::numbers::pi * time.step(row) * time.step(col));
  Eigen::MatrixXd out;
  bool init = false;
  // Sign of (-1)^(gamma + delta) for the knot pair (row + gamma, col + delta),
  // with an overall minus.
  const int knots[4][3] = {{row + 1, col, +1}, {row, col + 1, +1}, {row, col, -1}, {row + 1, col + 1, -1}};
  for (const auto& [a, b, sign] : knots) {
    if (a <= b) continue;
    const Eigen::MatrixXd& m = kernel_at(a, b);
    if (!init) {
      out = (sign * c) * m;
      init = true;
    } else {
      out += (sign * c) * m;
    }
  }
  return out;
}

}  // namespace

PairRelation classify_pair(const SpatialMesh& mesh, int test, int trial) {
  PairRelation rel;
  if (test == trial) {
    rel.kind = PairRelation::coincident;
    return rel;
  }
  const auto& u = mesh.element_nodes(test);
  const auto& v = mesh.element_nodes(trial);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (u[a] == v[b]) {
        rel.kind = PairRelation::touching;
        rel.test_end = a;
        rel.trial_end = b;
        return rel;
      }
  return rel;
}

Eigen::Matrix2d pair_kernel(const Segment& test, const Segment& trial, const PairRelation& rel, double lag,
                            const QuadratureConfig& cfg) {
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  if (!(lag > 0.0)) return out;
  if (rel.kind == PairRelation::separated && !(segment_distance(test, trial) < lag)) return out;

  const double len = test.length();
  const double inner_layer = std::ldexp(1.0, -cfg.grading_levels);
  std::vector<Breakpoint> cuts;
  for (const Vec2& c : {trial.a, trial.b})
    add_cone_cuts(cuts, test.a, test.b, c, lag, 0.0, inner_layer);

  // Points where the cone first reaches the interior of the trial element.
  if (rel.kind != PairRelation::coincident) {
    const Vec2 e = trial.b - trial.a;
    const double el = norm(e);
    const double h0 = cross(e, test.a - trial.a) / el;
    const double h1 = cross(e, test.b - trial.a) / el - h0;
    if (h1 != 0.0)
      for (double target : {lag, -lag}) {
        double s = (target - h0) / h1;
        const double foot = dot(test.point(s) - trial.a, e) / (el * el);
        if (!(foot > 0.0 && foot < 1.0)) continue;
        if (s > 0.0 && s < 1.0) {
          if (s < inner_layer) s = 0.0;
          if (s > 1.0 - inner_layer) s = 1.0;
          cuts.push_back({s, true});
        } else {
          const double end = s <= 0.0 ? 0.0 : 1.0;
          if (std::abs(s - end) < inner_layer) cuts.push_back({end, true});
        }
      }
  }

  // Canonical layers at shared nodes, so that the outer nodes are the same
  // for all pairs sharing a test element and a node.
  std::vector<int> graded_ends;
  if (rel.kind == PairRelation::coincident) graded_ends = {0, 1};
  if (rel.kind == PairRelation::touching) graded_ends = {rel.test_end};
  for (int end : graded_ends) {
    std::erase_if(cuts, [&](const Breakpoint& b) {
      return end == 0 ? b.s < inner_layer : b.s > 1.0 - inner_layer;
    });
    for (int m = 1; m <= cfg.grading_levels; ++m) {
      const double w = std::ldexp(1.0, -m);
      cuts.push_back({end == 0 ? w : 1.0 - w, false});
    }
  }
  if (rel.kind == PairRelation::separated) {
    const auto [s_close, gap] = closest_parameter(test, trial);
    // Pieces no longer than a quarter of their distance to the trial element.
    add_point_grading(cuts, s_close, gap / len, 0.25, inner_layer);
  }

  const GaussRule& rule = gauss_rule(cfg.outer_order);
  for (const QuadPiece& p : build_pieces(std::move(cuts), kOuterConeLayers)) {
    for_each_node(p, rule, cfg.cone_shrink, [&](double s, double w) {
      const SegmentMoments m =
          rel.kind == PairRelation::coincident
              ? finite_part_moments(trial, s, lag, KernelKind::matrix, cfg)
              : lightcone_moments(trial, test.point(s), test.normal, lag, KernelKind::matrix, cfg);
      const double n0 = m.m0 - m.m1;
      const double n1 = m.m1;
      const double t0 = (1.0 - s) * w * len;
      const double t1 = s * w * len;
      out(0, 0) += t0 * n0;
      out(0, 1) += t0 * n1;
      out(1, 0) += t1 * n0;
      out(1, 1) += t1 * n1;
    });
  }
  return out;
}

Eigen::MatrixXd kernel_matrix(const SpatialMesh& mesh, double lag, const QuadratureConfig& cfg) {
  const int m = mesh.num_dofs();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  if (!(lag > 0.0)) return out;
  const PairTable table = compute_pairs(mesh, lag, cfg, {});
  for (int jt = 0; jt < m; ++jt)
    for (int j = 0; j < m; ++j) out(jt, j) = matrix_entry(mesh, table, jt, j);
  return out;
}

Eigen::MatrixXd assemble_block(int row, int col, const SpatialMesh& space, const TimeMesh& time,
                               const QuadratureConfig& cfg) {
  const int n = time.num_intervals();
  if (row < 0 || col < 0 || row >= n || col >= n) throw std::out_of_range("block index out of range");
  if (row < col) {
    // Every lag of the block is non-positive: causality.
    return Eigen::MatrixXd::Zero(space.num_dofs(), space.num_dofs());
  }
  std::vector<std::pair<std::pair<int, int>, Eigen::MatrixXd>> cache;
  auto kernel_at = [&](int a, int b) -> const Eigen::MatrixXd& {
    for (const auto& [key, mat] : cache)
      if (key == std::make_pair(a, b)) return mat;
    cache.push_back({{a, b}, kernel_matrix(space, time.knot(a) - time.knot(b), cfg)});
    return cache.back().second;
  };
  return combine(time, row, col, kernel_at);
}

Eigen::VectorXd assemble_rhs(int row, const SpatialMesh& space, const TimeMesh& time, const Datum& f) {
  const double g = f.time_average(time.knot(row), time.knot(row + 1));
  Eigen::VectorXd beta(space.num_dofs());
  for (int j = 0; j < space.num_dofs(); ++j) {
    double s = 0.0;
    for (int k : space.dof_support(j)) s += f.space_factor(space, k) * 0.5 * space.element_length(k);
    beta[j] = s * g;
  }
  return beta;
}

BlockSystem::BlockSystem(SpatialMesh space, TimeMesh time, Datum datum, QuadratureConfig cfg)
    : space_(std::move(space)), time_(std::move(time)), datum_(datum), cfg_(cfg) {
  validate(cfg_);
  toeplitz_ = time_.is_uniform();
  dof_epoch_.assign(space_.num_dofs(), 0);
  interval_epoch_.assign(time_.num_intervals(), 0);
  ensure_lags();
  rebuild_blocks(nullptr, nullptr, false);
  rebuild_rhs();
}

int BlockSystem::find_lag(double lag) const {
  const double tol = 1e-12 * time_.final_time();
  auto it = std::lower_bound(lags_.begin(), lags_.end(), lag - tol);
  if (it != lags_.end() && std::abs(*it - lag) <= tol) return static_cast<int>(it - lags_.begin());
  return -1;
}

const Eigen::MatrixXd* BlockSystem::lag_matrix(double lag) const {
  const int idx = find_lag(lag);
  return idx < 0 ? nullptr : &lag_mats_[idx];
}

void BlockSystem::ensure_lags() {
  const int n = time_.num_intervals();
  std::vector<double> wanted;
  if (toeplitz_) {
    for (int a = 1; a <= n; ++a) wanted.push_back(time_.knot(a));
  } else {
    for (int a = 1; a <= n; ++a)
      for (int b = 0; b < a; ++b) wanted.push_back(time_.knot(a) - time_.knot(b));
  }
  std::sort(wanted.begin(), wanted.end());
  const double tol = 1e-12 * time_.final_time();
  std::vector<double> distinct;
  for (double lag : wanted)
    if (distinct.empty() || lag - distinct.back() > tol) distinct.push_back(lag);
  std::vector<double> missing;
  for (double lag : distinct)
    if (find_lag(lag) < 0) missing.push_back(lag);
  stats_.lags_reused = static_cast<int>(distinct.size() - missing.size());

  std::vector<Eigen::MatrixXd> mats(missing.size());
  for (std::size_t q = 0; q < missing.size(); ++q) mats[q] = kernel_matrix(space_, missing[q], cfg_);
  stats_.lags_computed = static_cast<int>(missing.size());
  stats_.entries_computed += static_cast<long long>(missing.size()) * num_dofs() * num_dofs();

  std::vector<double> lags;
  std::vector<Eigen::MatrixXd> lag_mats;
  std::size_t p = 0, q = 0;
  while (p < lags_.size() || q < missing.size()) {
    if (q == missing.size() || (p < lags_.size() && lags_[p] < missing[q])) {
      lags.push_back(lags_[p]);
      lag_mats.push_back(std::move(lag_mats_[p]));
      ++p;
    } else {
      lags.push_back(missing[q]);
      lag_mats.push_back(std::move(mats[q]));
      ++q;
    }
  }
  lags_ = std::move(lags);
  lag_mats_ = std::move(lag_mats);
}

int BlockSystem::block_index(int row, int col) const {
  if (toeplitz_) return row - col;
  return row * (row + 1) / 2 + col;
}

const Eigen::MatrixXd& BlockSystem::block(int row, int col) const {
  if (row < col || col < 0 || row >= num_intervals()) throw std::out_of_range("block index out of range");
  return blocks_[block_index(row, col)];
}

Eigen::MatrixXd BlockSystem::combine_block(int row, int col) const {
  auto kernel_at = [&](int a, int b) -> const Eigen::MatrixXd& {
    const Eigen::MatrixXd* m = lag_matrix(time_.knot(a) - time_.knot(b));
    if (!m) throw std::logic_error("kernel matrix for a time lag is missing");
    return *m;
  };
  return combine(time_, row, col, kernel_at);
}

void BlockSystem::rebuild_blocks(const TimeProvenance* prov, const std::vector<Eigen::MatrixXd>* old_blocks,
                                 bool old_toeplitz) {
  const int n = num_intervals();
  stats_.blocks_computed = stats_.blocks_copied = 0;
  blocks_.clear();
  if (toeplitz_) {
    for (int m = 0; m < n; ++m) blocks_.push_back(combine_block(m, 0));
    stats_.blocks_computed = n;
    return;
  }
  blocks_.resize(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int row = 0; row < n; ++row)
    for (int col = 0; col <= row; ++col) {
      Eigen::MatrixXd& dst = blocks_[block_index(row, col)];
      if (prov && old_blocks && prov->part[row] == 0 && prov->part[col] == 0) {
        const int orow = prov->old_interval[row];
        const int ocol = prov->old_interval[col];
        const int oidx = old_toeplitz ? orow - ocol : orow * (orow + 1) / 2 + ocol;
        dst = (*old_blocks)[oidx];
        ++stats_.blocks_copied;
      } else {
        dst = combine_block(row, col);
        ++stats_.blocks_computed;
      }
    }
}

void BlockSystem::rebuild_rhs() {
  rhs_.clear();
  for (int row = 0; row < num_intervals(); ++row) rhs_.push_back(assemble_rhs(row, space_, time_, datum_));
}

void BlockSystem::set_datum(const Datum& f) {
  datum_ = f;
  rebuild_rhs();
}

void BlockSystem::update_after_space_refinement(const SpaceRefinement& ref) {
  const SpaceProvenance& prov = ref.provenance;
  if (prov.old_num_dofs != num_dofs() || static_cast<int>(prov.status.size()) != ref.mesh.num_dofs() ||
      static_cast<int>(prov.old_element.size()) != ref.mesh.num_elements())
    throw std::invalid_argument("stale spatial provenance");
  stats_ = {};
  if (prov.is_identity() && ref.mesh.num_elements() == space_.num_elements()) {
    stats_.entries_copied = static_cast<long long>(lags_.size()) * num_dofs() * num_dofs();
    return;
  }
  ++epoch_;
  const SpatialMesh& mesh = ref.mesh;
  const int m = mesh.num_dofs();
  std::vector<char> changed_dof(m, 0);
  std::vector<char> active(mesh.num_elements(), 0);
  std::vector<int> dof_epoch(m);
  for (int j = 0; j < m; ++j) {
    if (prov.status[j] == DofStatus::unchanged) {
      dof_epoch[j] = dof_epoch_[prov.old_dof[j]];
      continue;
    }
    changed_dof[j] = 1;
    dof_epoch[j] = epoch_;
    for (int k : mesh.dof_support(j)) active[k] = 1;
  }

  for (std::size_t q = 0; q < lags_.size(); ++q) {
    const PairTable table = compute_pairs(mesh, lags_[q], cfg_, active);
    const Eigen::MatrixXd& old = lag_mats_[q];
    Eigen::MatrixXd next(m, m);
    for (int jt = 0; jt < m; ++jt)
      for (int j = 0; j < m; ++j) {
        if (!changed_dof[jt] && !changed_dof[j]) {
          next(jt, j) = old(prov.old_dof[jt], prov.old_dof[j]);
          ++stats_.entries_copied;
        } else {
          next(jt, j) = matrix_entry(mesh, table, jt, j);
          ++stats_.entries_computed;
        }
      }
    lag_mats_[q] = std::move(next);
  }
  stats_.lags_reused = static_cast<int>(lags_.size());
  space_ = mesh;
  dof_epoch_ = std::move(dof_epoch);
  rebuild_blocks(nullptr, nullptr, false);
  rebuild_rhs();
}

void BlockSystem::update_after_time_refinement(const TimeRefinement& ref) {
  const TimeProvenance& prov = ref.provenance;
  if (prov.old_num_intervals != num_intervals() ||
      static_cast<int>(prov.old_interval.size()) != ref.mesh.num_intervals())
    throw std::invalid_argument("stale temporal provenance");
  stats_ = {};
  if (prov.is_identity()) {
    stats_.blocks_copied = static_cast<int>(blocks_.size());
    return;
  }
  ++epoch_;
  std::vector<Eigen::MatrixXd> old_blocks = std::move(blocks_);
  const bool old_toeplitz = toeplitz_;
  time_ = ref.mesh;
  toeplitz_ = time_.is_uniform();
  std::vector<int> interval_epoch(num_intervals());
  for (int i = 0; i < num_intervals(); ++i)
    interval_epoch[i] = prov.part[i] == 0 ? interval_epoch_[prov.old_interval[i]] : epoch_;
  interval_epoch_ = std::move(interval_epoch);
  ensure_lags();
  rebuild_blocks(&prov, &old_blocks, old_toeplitz);
  rebuild_rhs();
}

BlockSystem assemble_system(const SpatialMesh& space, const TimeMesh& time, const Datum& f,
                            const QuadratureConfig& cfg) {
  return BlockSystem(space, time, f, cfg);
}

}  // namespace tdbem
