#include "tdbem/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace tdbem {

namespace {

using Clock = std::chrono::steady_clock;

std::set<int> all_indices(int n) {
  std::set<int> s;
  for (int k = 0; k < n; ++k) s.insert(s.end(), k);
  return s;
}

LevelRecord make_record(int level, const BlockSystem& sys, const Solution& sol, const Problem& problem,
                        AdaptMode mode, double total, double walltime) {
  LevelRecord r;
  r.level = level;
  r.m_gamma = sys.num_dofs();
  r.n_t = sys.num_intervals();
  r.dofs = static_cast<long long>(r.m_gamma) * r.n_t;
  r.energy = discrete_energy(sys, sol);
  r.sq_energy_error = squared_energy_error(r.energy, problem.reference_energy);
  r.indicator_total = total;
  r.memory = memory_statistic(r.m_gamma, r.n_t, mode != AdaptMode::time_adaptive);
  r.memory_s = std::numeric_limits<double>::quiet_NaN();
  r.walltime_s = walltime;
  r.min_h = sys.space().min_element_length();
  const auto [hi, lo] = cfl_extrema(sys.space(), sys.time());
  r.max_cfl = hi;
  r.min_cfl = lo;
  return r;
}

// Which mesh a loop adapts and how the other one follows.
enum class Drive { space, time };

std::vector<LevelRecord> drive_loop(const AdaptConfig& cfg, const Problem& problem, const LevelObserver& observer,
                                    Drive drive, bool mark_everything) {
  validate(cfg);
  validate(problem.indicator);
  std::vector<LevelRecord> records;
  BlockSystem sys(problem.space, problem.time, problem.datum, problem.quadrature);
  const auto [cfl_max0, cfl_min0] = cfl_extrema(sys.space(), sys.time());
  const bool keep = cfg.companion_rule == CompanionRule::keep_cfl;
  double carried = 0.0;

  for (int level = 0;; ++level) {
    const auto start = Clock::now();
    const Solution sol = block_forward_solve(sys, cfg.solve);
    const IndicatorField field = compute_indicators(sys, sol, problem.indicator);
    const double solve_time = std::chrono::duration<double>(Clock::now() - start).count();
    LevelRecord rec = make_record(level, sys, sol, problem, cfg.mode, field.total, carried + solve_time);
    const std::vector<double>& eta = drive == Drive::space ? field.eta_space : field.eta_time;
    const std::set<int> marked =
        mark_everything ? all_indices(static_cast<int>(eta.size())) : mark(eta, cfg.theta);

    if (field.total < cfg.epsilon) {
      rec.stop = StopReason::epsilon;
    } else if (level + 1 >= cfg.max_levels) {
      rec.stop = StopReason::level_cap;
    } else {
      rec.marked = static_cast<int>(marked.size());
    }
    if (rec.stop != StopReason::none) {
      records.push_back(rec);
      if (observer) observer(records.back(), sys, sol, field);
      break;
    }

    // Refinement of the next level; walltime covers it.
    const auto refine_start = Clock::now();
    std::optional<SpaceRefinement> sref;
    std::optional<TimeRefinement> tref;
    try {
      if (drive == Drive::space) {
        sref = bisect_spatial(sys.space(), marked, cfg.floor);
        if (keep) {
          TimeMesh time = sys.time();
          while (cfl_extrema(sref->mesh, time).first > cfl_max0 * (1.0 + 1e-12)) {
            if (!tref) {
              tref = bisect_temporal(time, all_indices(time.num_intervals()), cfg.floor);
            } else {
              // Compose successive halvings into one provenance.
              TimeRefinement next = bisect_temporal(tref->mesh, all_indices(tref->mesh.num_intervals()), cfg.floor);
              for (int i = 0; i < next.mesh.num_intervals(); ++i) {
                const int mid = next.provenance.old_interval[i];
                next.provenance.old_interval[i] = tref->provenance.old_interval[mid];
                next.provenance.part[i] = 1;
              }
              next.provenance.old_num_intervals = tref->provenance.old_num_intervals;
              tref = std::move(next);
            }
            time = tref->mesh;
          }
        }
      } else {
        tref = bisect_temporal(sys.time(), marked, cfg.floor);
        if (keep) {
          SpatialMesh space = sys.space();
          std::optional<SpaceRefinement> acc;
          while (cfl_extrema(space, tref->mesh).second < cfl_min0 * (1.0 - 1e-12)) {
            SpaceRefinement next = bisect_spatial(space, all_indices(space.num_elements()), cfg.floor);
            if (acc) {
              // Compose: a dof unchanged twice stays unchanged.
              for (int j = 0; j < next.mesh.num_dofs(); ++j) {
                if (next.provenance.status[j] == DofStatus::created) continue;
                const int mid = next.provenance.old_dof[j];
                if (acc->provenance.status[mid] == DofStatus::created) {
                  next.provenance.status[j] = DofStatus::created;
                  next.provenance.old_dof[j] = -1;
                } else {
                  if (acc->provenance.status[mid] == DofStatus::modified)
                    next.provenance.status[j] = DofStatus::modified;
                  next.provenance.old_dof[j] = acc->provenance.old_dof[mid];
                }
              }
              for (int& e : next.provenance.old_element) e = acc->provenance.old_element[e];
              next.provenance.old_num_dofs = acc->provenance.old_num_dofs;
            }
            acc = std::move(next);
            space = acc->mesh;
          }
          sref = std::move(acc);
        }
      }
    } catch (const MeshFloorError&) {
      rec.stop = StopReason::mesh_floor;
      rec.marked = 0;
      records.push_back(rec);
      if (observer) observer(records.back(), sys, sol, field);
      break;
    }
    records.push_back(rec);
    if (observer) observer(records.back(), sys, sol, field);
    if (sref) sys.update_after_space_refinement(*sref);
    if (tref) sys.update_after_time_refinement(*tref);
    carried = std::chrono::duration<double>(Clock::now() - refine_start).count();
  }
  return records;
}

}  // namespace

AdaptMode parse_adapt_mode(std::string_view name) {
  if (name == "space_adaptive") return AdaptMode::space_adaptive;
  if (name == "time_adaptive") return AdaptMode::time_adaptive;
  if (name == "uniform") return AdaptMode::uniform;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

CompanionRule parse_companion_rule(std::string_view name) {
  if (name == "keep_cfl") return CompanionRule::keep_cfl;
  if (name == "fixed_other_mesh") return CompanionRule::fixed_other_mesh;
  throw std::invalid_argument("unknown companion rule '" + std::string(name) + "'");
}

UniformAxis parse_uniform_axis(std::string_view name) {
  if (name == "space") return UniformAxis::space;
  if (name == "time") return UniformAxis::time;
  throw std::invalid_argument("unknown uniform axis '" + std::string(name) + "'");
}

std::string_view to_string(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::space_adaptive: return "space_adaptive";
    case AdaptMode::time_adaptive: return "time_adaptive";
    case AdaptMode::uniform: return "uniform";
  }
  return "uniform";
}

std::string_view to_string(CompanionRule rule) {
  return rule == CompanionRule::keep_cfl ? "keep_cfl" : "fixed_other_mesh";
}

std::string_view to_string(UniformAxis axis) { return axis == UniformAxis::space ? "space" : "time"; }

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::none: return "none";
    case StopReason::epsilon: return "epsilon";
    case StopReason::level_cap: return "level_cap";
    case StopReason::mesh_floor: return "mesh_floor";
  }
  return "none";
}

void validate(const AdaptConfig& cfg) {
  if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  if (!(cfg.epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  if (cfg.max_levels < 1) throw std::invalid_argument("max_levels must be at least 1");
  if (!(cfg.floor.min_element_length > 0.0) || !(cfg.floor.min_time_step > 0.0))
    throw std::invalid_argument("mesh floors must be positive");
}

std::set<int> mark(const std::vector<double>& eta, double theta) {
  std::set<int> out;
  if (eta.empty()) return out;
  const double top = *std::max_element(eta.begin(), eta.end());
  for (std::size_t k = 0; k < eta.size(); ++k)
    if (eta[k] > theta * top) out.insert(static_cast<int>(k));
  return out;
}

std::vector<LevelRecord> space_adaptive_loop(const AdaptConfig& cfg, const Problem& problem,
                                             const LevelObserver& observer) {
  return drive_loop(cfg, problem, observer, Drive::space, false);
}

std::vector<LevelRecord> time_adaptive_loop(const AdaptConfig& cfg, const Problem& problem,
                                            const LevelObserver& observer) {
  return drive_loop(cfg, problem, observer, Drive::time, false);
}

std::vector<LevelRecord> uniform_loop(const AdaptConfig& cfg, const Problem& problem, const LevelObserver& observer) {
  return drive_loop(cfg, problem, observer, cfg.uniform_axis == UniformAxis::space ? Drive::space : Drive::time, true);
}

std::vector<LevelRecord> run_loop(const AdaptConfig& cfg, const Problem& problem, const LevelObserver& observer) {
  switch (cfg.mode) {
    case AdaptMode::space_adaptive: return space_adaptive_loop(cfg, problem, observer);
    case AdaptMode::time_adaptive: return time_adaptive_loop(cfg, problem, observer);
    case AdaptMode::uniform: return uniform_loop(cfg, problem, observer);
  }
  return {};
}

double memory_statistic(int m_gamma, int n_t, bool toeplitz) {
  const double m2 = static_cast<double>(m_gamma) * m_gamma;
  return toeplitz ? m2 * n_t : m2 * n_t * (n_t + 1.0) / 2.0;
}

double memory_savings(const LevelRecord& record, const LevelRecord& baseline, AdaptMode mode) {
  const double ma = memory_statistic(record.m_gamma, record.n_t, mode != AdaptMode::time_adaptive);
  const double mu = memory_statistic(baseline.m_gamma, baseline.n_t, true);
  return 1.0 - ma / mu;
}

double matched_uniform_memory(const std::vector<LevelRecord>& baseline, double sq_error) {
  std::vector<std::pair<double, double>> pts;
  for (const LevelRecord& r : baseline)
    if (r.sq_energy_error > 0.0)
      pts.push_back({std::log(r.sq_energy_error), std::log(memory_statistic(r.m_gamma, r.n_t, true))});
  if (pts.empty()) throw std::invalid_argument("baseline has no level with positive error");
  if (pts.size() == 1) return std::exp(pts.front().second);
  std::sort(pts.begin(), pts.end());
  const double e = std::log(sq_error);
  std::size_t k = 0;
  while (k + 2 < pts.size() && e > pts[k + 1].first) ++k;
  const auto [e0, m0] = pts[k];
  const auto [e1, m1] = pts[k + 1];
  if (e1 == e0) return std::exp(0.5 * (m0 + m1));
  return std::exp(m0 + (m1 - m0) * (e - e0) / (e1 - e0));
}

void apply_memory_baseline(std::vector<LevelRecord>& records, const std::vector<LevelRecord>& baseline) {
  for (LevelRecord& r : records) {
    if (!(r.sq_energy_error > 0.0)) continue;
    r.memory_s = 1.0 - r.memory / matched_uniform_memory(baseline, r.sq_energy_error);
  }
}

}  // namespace tdbem
