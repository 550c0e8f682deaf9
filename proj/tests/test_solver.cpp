#include <cmath>

#include "doctest.h"
#include "tdbem/experiment.hpp"
#include "tdbem/solver.hpp"

using namespace tdbem;

namespace {

BlockSystem preset_system(const std::string& name) {
  const Problem p = make_problem(default_options(name));
  return assemble_system(p.space, p.time, p.datum, p.quadrature);
}

double max_diff(const Solution& a, const Solution& b) {
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < a.num_intervals(); ++i) {
    worst = std::max(worst, (a.alpha[i] - b.alpha[i]).cwiseAbs().maxCoeff());
    scale = std::max(scale, a.alpha[i].cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

}  // namespace

TEST_CASE("single interval is one dense solve") {
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 6);
  const BlockSystem sys = assemble_system(m, TimeMesh::uniform(0.4, 1), {}, {});
  const Solution sol = block_forward_solve(sys);
  REQUIRE(sol.num_intervals() == 1);
  CHECK(sol.num_dofs() == 5);
  const Eigen::VectorXd direct = sys.block(0, 0).partialPivLu().solve(sys.rhs(0));
  CHECK((sol.alpha[0] - direct).norm() <= 1e-14 * direct.norm());
}

TEST_CASE("block residual on the coarse crack") {
  const BlockSystem sys = preset_system("straight_crack");
  REQUIRE(sys.num_dofs() == 9);
  REQUIRE(sys.num_intervals() == 20);
  const Solution sol = block_forward_solve(sys);
  CHECK(block_residual(sys, sol) <= 1e-10);
  CHECK(discrete_energy(sys, sol) > 0.0);
}

TEST_CASE("Toeplitz fast path equals the generic path") {
  for (const char* name : {"straight_crack", "angular_crack"}) {
    const BlockSystem sys = preset_system(name);
    REQUIRE(sys.toeplitz());
    const Solution fast = block_forward_solve(sys);
    const Solution generic = block_forward_solve(sys, SolveOptions{.reuse_factorization = false});
    CHECK(max_diff(fast, generic) <= 1e-12);
  }
  // A graded mesh never takes the fast path.
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 6);
  const BlockSystem graded = assemble_system(m, TimeMesh(std::vector<double>{0.0, 0.1, 0.15, 0.3}), {}, {});
  const Solution a = block_forward_solve(graded);
  CHECK(block_residual(graded, a) <= 1e-10);
}

TEST_CASE("zero datum gives zero energy") {
  const SpatialMesh m = build_geometry(GeometryPreset::circle, 8);
  const BlockSystem sys = assemble_system(m, TimeMesh::uniform(0.5, 4), Datum{.scale = 0.0}, {});
  const Solution sol = block_forward_solve(sys);
  for (const Eigen::VectorXd& a : sol.alpha) CHECK(a.norm() == 0.0);
  CHECK(discrete_energy(sys, sol) == 0.0);
}

TEST_CASE("linearity in the datum") {
  const Problem p = make_problem(default_options("triangle"));
  const BlockSystem one = assemble_system(p.space, p.time, p.datum, p.quadrature);
  Datum twice = p.datum;
  twice.scale = 2.0;
  BlockSystem two = one;
  two.set_datum(twice);
  const Solution s1 = block_forward_solve(one);
  const Solution s2 = block_forward_solve(two);
  for (int i = 0; i < s1.num_intervals(); ++i)
    CHECK((s2.alpha[i] - 2.0 * s1.alpha[i]).norm() <= 1e-10 * (2.0 * s1.alpha[i]).norm() + 1e-300);
  const double e1 = discrete_energy(one, s1);
  CHECK(std::abs(discrete_energy(two, s2) - 4.0 * e1) <= 1e-10 * 4.0 * e1);
}

TEST_CASE("singular diagonal blocks are reported") {
  const BlockSystem sys = preset_system("straight_crack");
  try {
    block_forward_solve(sys, SolveOptions{.rcond_threshold = 2.0});
    FAIL("expected SingularBlockError");
  } catch (const SingularBlockError& e) {
    CHECK(e.block() == 0);
  }
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 4);
  const BlockSystem graded = assemble_system(m, TimeMesh(std::vector<double>{0.0, 0.1, 0.3}), {}, {});
  CHECK_THROWS_AS(block_forward_solve(graded, SolveOptions{.rcond_threshold = 2.0}), SingularBlockError);
}

TEST_CASE("squared energy error") {
  CHECK(squared_energy_error(0.79280, 0.79280) == 0.0);
  CHECK(squared_energy_error(0.78, 0.79280) == doctest::Approx(0.0128).epsilon(1e-12));
  CHECK(squared_energy_error(0.80, 0.79280) == doctest::Approx(0.0072).epsilon(1e-12));
}

TEST_CASE("crack energies approach the reference under uniform refinement") {
  AdaptConfig cfg;
  cfg.mode = AdaptMode::uniform;
  cfg.max_levels = 4;
  const Problem p = make_problem(default_options("straight_crack"));
  const std::vector<LevelRecord> levels = uniform_loop(cfg, p);
  REQUIRE(levels.size() == 4);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    INFO("M ", levels[k].m_gamma, " N ", levels[k].n_t, " E ", levels[k].energy);
    CHECK(levels[k].energy > 0.0);
    if (k > 0) CHECK(levels[k].sq_energy_error < levels[k - 1].sq_energy_error);
  }
  CHECK(levels.back().m_gamma == 79);
  CHECK(levels.back().n_t == 160);
}

TEST_CASE("circle energies approach the reference under uniform time refinement") {
  RunOptions opt = default_options("circle");
  AdaptConfig cfg = opt.adapt;
  cfg.mode = AdaptMode::uniform;
  cfg.max_levels = 3;
  const std::vector<LevelRecord> levels = uniform_loop(cfg, make_problem(opt));
  REQUIRE(levels.size() == 3);
  for (std::size_t k = 1; k < levels.size(); ++k) {
    CHECK(levels[k].m_gamma == 32);
    CHECK(levels[k].n_t == 2 * levels[k - 1].n_t);
    CHECK(std::abs(levels[k].energy - 1.777) < std::abs(levels[k - 1].energy - 1.777));
  }
}
