#pragma once

#include <functional>
#include <set>
#include <string_view>
#include <vector>

#include "tdbem/assembly.hpp"
#include "tdbem/estimator.hpp"
#include "tdbem/solver.hpp"

namespace tdbem {

enum class AdaptMode { space_adaptive, time_adaptive, uniform };
enum class CompanionRule { keep_cfl, fixed_other_mesh };
// Dimension refined by uniform mode; the companion rule handles the other.
enum class UniformAxis { space, time };
enum class StopReason { none, epsilon, level_cap, mesh_floor };

AdaptMode parse_adapt_mode(std::string_view name);
CompanionRule parse_companion_rule(std::string_view name);
UniformAxis parse_uniform_axis(std::string_view name);
std::string_view to_string(AdaptMode mode);
std::string_view to_string(CompanionRule rule);
std::string_view to_string(UniformAxis axis);
std::string_view to_string(StopReason reason);

struct AdaptConfig {
  AdaptMode mode = AdaptMode::space_adaptive;
  double theta = 0.4;
  double epsilon = 0.0;
  int max_levels = 5;
  CompanionRule companion_rule = CompanionRule::keep_cfl;
  UniformAxis uniform_axis = UniformAxis::space;
  MeshFloor floor;
  SolveOptions solve;
};

void validate(const AdaptConfig& cfg);

// Initial discretization and data of one run.
struct Problem {
  SpatialMesh space;
  TimeMesh time;
  Datum datum;
  double reference_energy = 0.0;
  QuadratureConfig quadrature;
  IndicatorConfig indicator;
};

struct LevelRecord {
  int level = 0;
  int m_gamma = 0;
  int n_t = 0;
  long long dofs = 0;
  double energy = 0.0;
  double sq_energy_error = 0.0;
  double indicator_total = 0.0;
  int marked = 0;
  // Matrix storage count for this run's mode (memory_statistic).
  double memory = 0.0;
  // 1 - memory / matched uniform memory; NaN until a baseline is applied.
  double memory_s = 0.0;
  double walltime_s = 0.0;
  double min_h = 0.0;
  double max_cfl = 0.0;
  double min_cfl = 0.0;
  StopReason stop = StopReason::none;
};

// { k : eta_k > theta max eta }.
std::set<int> mark(const std::vector<double>& eta, double theta);

// Per level after solve and estimate, before refinement.
using LevelObserver =
    std::function<void(const LevelRecord&, const BlockSystem&, const Solution&, const IndicatorField&)>;

std::vector<LevelRecord> space_adaptive_loop(const AdaptConfig& cfg, const Problem& problem,
                                             const LevelObserver& observer = {});
std::vector<LevelRecord> time_adaptive_loop(const AdaptConfig& cfg, const Problem& problem,
                                            const LevelObserver& observer = {});
std::vector<LevelRecord> uniform_loop(const AdaptConfig& cfg, const Problem& problem,
                                      const LevelObserver& observer = {});
// Dispatches on cfg.mode.
std::vector<LevelRecord> run_loop(const AdaptConfig& cfg, const Problem& problem, const LevelObserver& observer = {});

// Matrix storage: M^2 N with Toeplitz blocks, M^2 N (N + 1) / 2 otherwise.
double memory_statistic(int m_gamma, int n_t, bool toeplitz);
// S = 1 - M_a / M_u with M_a by mode (time mode drops the Toeplitz structure)
// and M_u = M_u_Gamma^2 N_u_T.
double memory_savings(const LevelRecord& record, const LevelRecord& baseline, AdaptMode mode);
// Uniform-run memory at the given squared error, interpolating log memory
// against log error between bracketing baseline levels (linear extrapolation
// from the two nearest levels outside their range).
double matched_uniform_memory(const std::vector<LevelRecord>& baseline, double sq_error);
// Fills memory_s of every record from a uniform baseline run.
void apply_memory_baseline(std::vector<LevelRecord>& records, const std::vector<LevelRecord>& baseline);

}  // namespace tdbem
