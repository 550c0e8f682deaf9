#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdbem/geometry.hpp"

namespace tdbem {

enum class Topology { open_arc, closed_curve };

enum class GeometryPreset { straight_crack, angular_crack, equilateral_triangle, circle };

GeometryPreset parse_geometry_preset(std::string_view name);
std::string_view to_string(GeometryPreset preset);

// Thrown when a bisection would produce an element or a time step below
// the configured floor.
class MeshFloorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshFloor {
  double min_element_length = 1e-6;
  double min_time_step = 1e-6;
};

// Analytic circle used to project midpoints of bisected chords.
struct CircleShape {
  Vec2 center;
  double radius = 0.0;
};

// Ordered chain of straight segments. Element k joins nodes k and k+1
// (wrapping around for closed curves). Nodes on an open arc at the two
// tips carry no degree of freedom.
class SpatialMesh {
 public:
  SpatialMesh(std::vector<Vec2> nodes, Topology topology, std::vector<int> side_ids,
              std::optional<CircleShape> circle = std::nullopt);

  Topology topology() const { return topology_; }
  bool closed() const { return topology_ == Topology::closed_curve; }
  const std::optional<CircleShape>& circle() const { return circle_; }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_dofs() const { return num_dofs_; }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const Vec2& node(int n) const { return nodes_[n]; }
  const std::array<int, 2>& element_nodes(int k) const { return elements_[k]; }
  Segment element(int k) const;
  double element_length(int k) const { return lengths_[k]; }
  const Vec2& normal(int k) const { return normals_[k]; }
  // Sub-curve the element belongs to (S0, S1, ... of the preset).
  int side(int k) const { return side_ids_[k]; }

  // -1 for nodes without a degree of freedom.
  int dof_of_node(int n) const { return dof_map_[n]; }
  // Degrees of freedom of the start and end node of element k.
  std::array<int, 2> element_dofs(int k) const;
  // Elements on which the hat function of dof j is nonzero, in curve order.
  std::vector<int> dof_support(int j) const;
  int node_of_dof(int j) const { return dof_nodes_[j]; }

  double total_length() const;
  double min_element_length() const;
  double max_element_length() const;

 private:
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 2>> elements_;
  Topology topology_;
  std::vector<int> side_ids_;
  std::optional<CircleShape> circle_;
  std::vector<Vec2> normals_;
  std::vector<double> lengths_;
  std::vector<int> dof_map_;
  std::vector<int> dof_nodes_;
  int num_dofs_ = 0;
};

class TimeMesh {
 public:
  explicit TimeMesh(std::vector<double> knots);
  static TimeMesh uniform(double final_time, int intervals);

  int num_intervals() const { return static_cast<int>(knots_.size()) - 1; }
  const std::vector<double>& knots() const { return knots_; }
  double knot(int i) const { return knots_[i]; }
  double step(int i) const { return knots_[i + 1] - knots_[i]; }
  double final_time() const { return knots_.back(); }
  double min_step() const;
  double max_step() const;
  // All steps equal to relative tolerance 1e-12.
  bool is_uniform() const;

 private:
  std::vector<double> knots_;
};

// Tensor-product boxes I_i x Gamma_j.
struct BoxGrid {
  const SpatialMesh& space;
  const TimeMesh& time;

  int num_boxes() const { return space.num_elements() * time.num_intervals(); }
  double measure(int i, int j) const { return time.step(i) * space.element_length(j); }
  double diameter(int i, int j) const;
};

SpatialMesh build_geometry(GeometryPreset preset, int n_elements);

enum class DofStatus { unchanged, modified, created };

struct SpaceProvenance {
  // Indexed by dof of the refined mesh.
  std::vector<DofStatus> status;
  // Old dof index for unchanged/modified dofs, -1 for created ones.
  std::vector<int> old_dof;
  // Old element each new element descends from.
  std::vector<int> old_element;
  int old_num_dofs = 0;

  bool is_identity() const;
  int count(DofStatus s) const;
};

struct SpaceRefinement {
  SpatialMesh mesh;
  SpaceProvenance provenance;
};

SpaceRefinement bisect_spatial(const SpatialMesh& mesh, const std::set<int>& marked,
                               const MeshFloor& floor = {});

struct TimeProvenance {
  // Indexed by interval of the refined mesh: originating old interval.
  std::vector<int> old_interval;
  // 0 for untouched intervals, 1/2 for the first/second half of a split one.
  std::vector<int> part;
  int old_num_intervals = 0;

  bool is_identity() const;
};

struct TimeRefinement {
  TimeMesh mesh;
  TimeProvenance provenance;
};

TimeRefinement bisect_temporal(const TimeMesh& mesh, const std::set<int>& marked,
                               const MeshFloor& floor = {});

// (max, min) over all (i, j) of dt_i / h_j.
std::pair<double, double> cfl_extrema(const SpatialMesh& space, const TimeMesh& time);

void write_space_snapshot(std::ostream& out, const SpatialMesh& mesh);
void write_time_snapshot(std::ostream& out, const TimeMesh& mesh);

}  // namespace tdbem
