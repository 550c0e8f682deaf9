#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "tdbem/assembly.hpp"

using namespace tdbem;

namespace {

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

// A system built from scratch on the same meshes.
void check_equals_full(const BlockSystem& sys, double tol) {
  const BlockSystem full = assemble_system(sys.space(), sys.time(), sys.datum(), sys.quadrature());
  for (int row = 0; row < sys.num_intervals(); ++row)
    for (int col = 0; col <= row; ++col) CHECK(rel_diff(sys.block(row, col), full.block(row, col)) <= tol);
}

}  // namespace

TEST_CASE("two-element crack block against the space-time oracle") {
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 2);
  for (double dt : {1.0, 0.5, 0.3, 0.05}) {
    const Eigen::MatrixXd e = assemble_block(0, 0, m, TimeMesh::uniform(dt, 1), {});
    REQUIRE(e.rows() == 1);
    const double want = oracle::crack_two_element_block(dt);
    CHECK(std::abs(e(0, 0) - want) <= 1e-4 * std::abs(want));
  }
}

TEST_CASE("diagonal block uses the single positive lag") {
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 6);
  const TimeMesh t(std::vector<double>{0.0, 0.1, 0.25, 0.3});
  const QuadratureConfig cfg;
  for (int i = 0; i < 3; ++i) {
    const double dt = t.step(i);
    const Eigen::MatrixXd want = kernel_matrix(m, dt, cfg) / (2.0 * std::numbers::pi * dt * dt);
    CHECK(rel_diff(assemble_block(i, i, m, t, cfg), want) <= 1e-14);
  }
}

TEST_CASE("causality") {
  const SpatialMesh m = build_geometry(GeometryPreset::circle, 8);
  const TimeMesh t = TimeMesh::uniform(1.0, 4);
  CHECK(assemble_block(0, 2, m, t, {}).norm() == 0.0);
  CHECK(kernel_matrix(m, 0.0, {}).norm() == 0.0);
  CHECK(kernel_matrix(m, -0.3, {}).norm() == 0.0);
  CHECK_THROWS_AS(assemble_block(4, 0, m, t, {}), std::out_of_range);
  CHECK_THROWS_AS(assemble_block(0, -1, m, t, {}), std::out_of_range);
}

TEST_CASE("Toeplitz structure on uniform time meshes") {
  const SpatialMesh m = build_geometry(GeometryPreset::angular_crack, 8);
  const TimeMesh t = TimeMesh::uniform(0.5, 5);
  const QuadratureConfig cfg;
  for (int i = 0; i + 1 < 5; ++i)
    CHECK(rel_diff(assemble_block(i + 1, 1, m, t, cfg), assemble_block(i, 0, m, t, cfg)) <= 1e-12);
  const BlockSystem sys = assemble_system(m, t, {}, cfg);
  CHECK(sys.toeplitz());
  for (int row = 0; row < 5; ++row)
    for (int col = 0; col <= row; ++col)
      CHECK(rel_diff(sys.block(row, col), assemble_block(row, col, m, t, cfg)) <= 1e-12);
  CHECK_FALSE(assemble_system(m, TimeMesh(std::vector<double>{0.0, 0.1, 0.3}), {}, cfg).toeplitz());
}

TEST_CASE("kernel matrices are symmetric") {
  const Eigen::MatrixXd flat = kernel_matrix(build_geometry(GeometryPreset::straight_crack, 6), 0.2, {});
  CHECK((flat - flat.transpose()).norm() <= 1e-12 * flat.norm());
  // Corner pairs integrate the two orientations with different rules.
  const Eigen::MatrixXd tri = kernel_matrix(build_geometry(GeometryPreset::equilateral_triangle, 6), 0.2, {});
  CHECK((tri - tri.transpose()).norm() <= 1e-6 * tri.norm());
}

TEST_CASE("heaviside datum on the crack") {
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 8);
  const TimeMesh t = TimeMesh::uniform(1.0, 4);
  for (int row = 0; row < 4; ++row) {
    const Eigen::VectorXd beta = assemble_rhs(row, m, t, Datum{});
    for (int j = 0; j < m.num_dofs(); ++j) CHECK(beta[j] == doctest::Approx(0.125).epsilon(1e-14));
  }
}

TEST_CASE("power-exponential time factors") {
  const SpatialMesh m = build_geometry(GeometryPreset::circle, 16);
  const TimeMesh t(std::vector<double>{0.0, 0.01, 0.05, 0.2, 0.7, 2.0});
  const Datum f{SpaceProfile::normal_x, TimeProfile::power_exp};
  for (int i = 0; i < t.num_intervals(); ++i) {
    const double want = oracle::power_exp_average(t.knot(i), t.knot(i + 1));
    CHECK(std::abs(f.time_average(t.knot(i), t.knot(i + 1)) - want) <= 1e-8 * want);
  }
  // Spatial factor is the x component of the normal, times h / 2 per side.
  const Eigen::VectorXd beta = assemble_rhs(0, m, t, f);
  const double g = f.time_average(0.0, 0.01);
  for (int j = 0; j < m.num_dofs(); ++j) {
    double want = 0.0;
    for (int k : m.dof_support(j)) want += m.normal(k).x * 0.5 * m.element_length(k);
    CHECK(beta[j] == doctest::Approx(want * g).epsilon(1e-13).scale(1e-12));
  }
}

TEST_CASE("side jump datum on the triangle") {
  const SpatialMesh m = build_geometry(GeometryPreset::equilateral_triangle, 6);
  const TimeMesh t = TimeMesh::uniform(0.5, 5);
  const Datum f{SpaceProfile::side_jump, TimeProfile::sine_ramp};
  const double h = m.element_length(0);
  const double g_last = f.time_average(0.4, 0.5);
  CHECK(g_last == doctest::Approx(1.0));
  const Eigen::VectorXd beta = assemble_rhs(4, m, t, f);
  for (int j = 0; j < m.num_dofs(); ++j) {
    const std::vector<int> sup = m.dof_support(j);
    const int s0 = m.side(sup[0]), s1 = m.side(sup[1]);
    auto a = [](int side) { return side == 1 ? 1.0 : side == 2 ? -1.0 : 0.0; };
    CHECK(beta[j] == doctest::Approx(0.5 * h * (a(s0) + a(s1))).scale(1e-15));
  }
  // The vertex between S0 and S1 only sees the S1 half of its hat.
  int vertex = -1;
  for (int j = 0; j < m.num_dofs(); ++j) {
    const std::vector<int> sup = m.dof_support(j);
    if ((m.side(sup[0]) == 0 && m.side(sup[1]) == 1) || (m.side(sup[0]) == 1 && m.side(sup[1]) == 0)) vertex = j;
  }
  REQUIRE(vertex >= 0);
  CHECK(beta[vertex] == doctest::Approx(0.5 * h));
  // sin(4 pi t)^2 averages to 1/2 over [0, 1/8].
  CHECK(f.time_average(0.0, 0.125) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("incremental space update touches three rows and columns") {
  const SpatialMesh m = build_geometry(GeometryPreset::straight_crack, 4);
  const TimeMesh t = TimeMesh::uniform(1.0, 4);
  BlockSystem sys = assemble_system(m, t, {}, {});
  const std::vector<Eigen::MatrixXd> before = [&] {
    std::vector<Eigen::MatrixXd> out;
    for (int r = 0; r < 4; ++r) out.push_back(sys.block(r, 0));
    return out;
  }();
  const SpaceRefinement ref = bisect_spatial(m, {1});
  sys.update_after_space_refinement(ref);
  REQUIRE(sys.num_dofs() == 4);
  const SpaceProvenance& prov = ref.provenance;
  int changed = 0;
  for (int j = 0; j < 4; ++j) changed += sys.dof_epoch()[j] == sys.epoch();
  CHECK(changed == 3);
  for (int r = 0; r < 4; ++r)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        if (prov.status[a] != DofStatus::unchanged || prov.status[b] != DofStatus::unchanged) continue;
        CHECK(sys.block(r, 0)(a, b) == before[r](prov.old_dof[a], prov.old_dof[b]));
      }
  check_equals_full(sys, 1e-12);
}

TEST_CASE("identity updates leave the system untouched") {
  const SpatialMesh m = build_geometry(GeometryPreset::circle, 8);
  const TimeMesh t = TimeMesh::uniform(1.0, 3);
  BlockSystem sys = assemble_system(m, t, {}, {});
  const Eigen::MatrixXd b10 = sys.block(1, 0);
  sys.update_after_space_refinement(bisect_spatial(m, {}));
  sys.update_after_time_refinement(bisect_temporal(t, {}));
  CHECK(sys.epoch() == 0);
  CHECK(sys.block(1, 0) == b10);
  CHECK(sys.toeplitz());
  CHECK_THROWS_AS(sys.update_after_space_refinement(bisect_spatial(build_geometry(GeometryPreset::circle, 6), {})),
                  std::invalid_argument);
}

TEST_CASE("incremental updates match full reassembly") {
  SpatialMesh m = build_geometry(GeometryPreset::equilateral_triangle, 6);
  TimeMesh t = TimeMesh::uniform(0.3, 3);
  BlockSystem sys = assemble_system(m, t, Datum{SpaceProfile::side_jump, TimeProfile::sine_ramp}, {});
  SpaceRefinement sr = bisect_spatial(m, {0, 4});
  sys.update_after_space_refinement(sr);
  check_equals_full(sys, 1e-12);
  TimeRefinement tr = bisect_temporal(t, {1});
  sys.update_after_time_refinement(tr);
  CHECK_FALSE(sys.toeplitz());
  CHECK(sys.num_intervals() == 4);
  CHECK(sys.last_stats().blocks_copied == 3);
  CHECK(sys.last_stats().blocks_computed == 7);
  check_equals_full(sys, 1e-12);
  sys.update_after_space_refinement(bisect_spatial(sr.mesh, {2}));
  sys.update_after_time_refinement(bisect_temporal(tr.mesh, {0, 3}));
  check_equals_full(sys, 1e-12);
  for (int r = 0; r < sys.num_intervals(); ++r) {
    const Eigen::VectorXd want = assemble_rhs(r, sys.space(), sys.time(), sys.datum());
    CHECK((sys.rhs(r) - want).norm() <= 1e-15 * (1.0 + want.norm()));
  }
}
