#include "tdbem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "tdbem/format.hpp"

namespace tdbem {

GeometryPreset parse_geometry_preset(std::string_view name) {
  if (name == "straight_crack") return GeometryPreset::straight_crack;
  if (name == "angular_crack") return GeometryPreset::angular_crack;
  if (name == "equilateral_triangle" || name == "triangle") return GeometryPreset::equilateral_triangle;
  if (name == "circle") return GeometryPreset::circle;
  throw std::invalid_argument("unknown geometry preset '" + std::string(name) + "'");
}

std::string_view to_string(GeometryPreset preset) {
  switch (preset) {
    case GeometryPreset::straight_crack: return "straight_crack";
    case GeometryPreset::angular_crack: return "angular_crack";
    case GeometryPreset::equilateral_triangle: return "equilateral_triangle";
    case GeometryPreset::circle: return "circle";
  }
  return "unknown";
}

SpatialMesh::SpatialMesh(std::vector<Vec2> nodes, Topology topology, std::vector<int> side_ids,
                         std::optional<CircleShape> circle)
    : nodes_(std::move(nodes)), topology_(topology), side_ids_(std::move(side_ids)), circle_(circle) {
  const int n = num_nodes();
  const int n_el = closed() ? n : n - 1;
  if (n_el < 1 || (closed() && n < 3)) throw std::invalid_argument("mesh needs at least one element");
  if (static_cast<int>(side_ids_.size()) != n_el)
    throw std::invalid_argument("side id count does not match element count");

  elements_.reserve(n_el);
  for (int k = 0; k < n_el; ++k) elements_.push_back({k, (k + 1) % n});

  for (const auto& [ia, ib] : elements_) {
    const Vec2 d = nodes_[ib] - nodes_[ia];
    const double h = norm(d);
    if (!(h > 0.0)) throw std::invalid_argument("degenerate element of zero length");
    lengths_.push_back(h);
    normals_.push_back(Vec2{d.y, -d.x} / h);
  }

  dof_map_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!closed() && (i == 0 || i == n - 1)) continue;
    dof_map_[i] = num_dofs_++;
    dof_nodes_.push_back(i);
  }
}

Segment SpatialMesh::element(int k) const {
  const auto& [ia, ib] = elements_[k];
  return Segment{nodes_[ia], nodes_[ib], normals_[k]};
}

std::array<int, 2> SpatialMesh::element_dofs(int k) const {
  const auto& [ia, ib] = elements_[k];
  return {dof_map_[ia], dof_map_[ib]};
}

std::vector<int> SpatialMesh::dof_support(int j) const {
  const int node = dof_nodes_[j];
  const int n_el = num_elements();
  if (closed()) return {(node - 1 + n_el) % n_el, node};
  return {node - 1, node};
}

double SpatialMesh::total_length() const {
  double s = 0.0;
  for (double h : lengths_) s += h;
  return s;
}

double SpatialMesh::min_element_length() const { return *std::min_element(lengths_.begin(), lengths_.end()); }
double SpatialMesh::max_element_length() const { return *std::max_element(lengths_.begin(), lengths_.end()); }

TimeMesh::TimeMesh(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw std::invalid_argument("time mesh needs at least one interval");
  if (knots_.front() != 0.0) throw std::invalid_argument("time mesh must start at t = 0");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("time knots must be strictly increasing");
}

TimeMesh TimeMesh::uniform(double final_time, int intervals) {
  if (!(final_time > 0.0) || intervals < 1) throw std::invalid_argument("invalid uniform time mesh");
  std::vector<double> knots(intervals + 1);
  for (int i = 0; i <= intervals; ++i) knots[i] = final_time * i / intervals;
  knots.back() = final_time;
  return TimeMesh(std::move(knots));
}

double TimeMesh::min_step() const {
  double m = step(0);
  for (int i = 1; i < num_intervals(); ++i) m = std::min(m, step(i));
  return m;
}

double TimeMesh::max_step() const {
  double m = step(0);
  for (int i = 1; i < num_intervals(); ++i) m = std::max(m, step(i));
  return m;
}

bool TimeMesh::is_uniform() const {
  const double ref = final_time() / num_intervals();
  for (int i = 0; i < num_intervals(); ++i)
    if (std::abs(step(i) - ref) > 1e-12 * ref) return false;
  return true;
}

double BoxGrid::diameter(int i, int j) const {
  return std::hypot(time.step(i), space.element_length(j));
}

namespace {

void append_line(std::vector<Vec2>& nodes, std::vector<int>& sides, Vec2 from, Vec2 to, int n, int side) {
  for (int k = 0; k < n; ++k) {
    nodes.push_back(from + (to - from) * (static_cast<double>(k) / n));
    sides.push_back(side);
  }
}

}  // namespace

SpatialMesh build_geometry(GeometryPreset preset, int n_elements) {
  if (n_elements < 1) throw std::invalid_argument("element count must be positive");
  const double apex = 0.1 * std::tan(std::numbers::pi / 3.0);
  std::vector<Vec2> nodes;
  std::vector<int> sides;
  switch (preset) {
    case GeometryPreset::straight_crack: {
      append_line(nodes, sides, {-0.5, 0.0}, {0.5, 0.0}, n_elements, 0);
      nodes.push_back({0.5, 0.0});
      return SpatialMesh(std::move(nodes), Topology::open_arc, std::move(sides));
    }
    case GeometryPreset::angular_crack: {
      if (n_elements % 2 != 0) throw std::invalid_argument("angular crack needs an even element count");
      const int per_side = n_elements / 2;
      append_line(nodes, sides, {-0.1, 0.0}, {0.0, apex}, per_side, 1);
      append_line(nodes, sides, {0.0, apex}, {0.1, 0.0}, per_side, 2);
      nodes.push_back({0.1, 0.0});
      return SpatialMesh(std::move(nodes), Topology::open_arc, std::move(sides));
    }
    case GeometryPreset::equilateral_triangle: {
      if (n_elements % 3 != 0) throw std::invalid_argument("triangle needs an element count divisible by 3");
      const int per_side = n_elements / 3;
      append_line(nodes, sides, {-0.1, 0.0}, {0.1, 0.0}, per_side, 0);
      append_line(nodes, sides, {0.1, 0.0}, {0.0, apex}, per_side, 1);
      append_line(nodes, sides, {0.0, apex}, {-0.1, 0.0}, per_side, 2);
      return SpatialMesh(std::move(nodes), Topology::closed_curve, std::move(sides));
    }
    case GeometryPreset::circle: {
      if (n_elements < 3) throw std::invalid_argument("circle needs at least 3 elements");
      const CircleShape c{{0.0, 0.0}, 0.5};
      for (int k = 0; k < n_elements; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / n_elements;
        nodes.push_back({c.radius * std::cos(phi), c.radius * std::sin(phi)});
        sides.push_back(0);
      }
      return SpatialMesh(std::move(nodes), Topology::closed_curve, std::move(sides), c);
    }
  }
  throw std::invalid_argument("unknown geometry preset");
}

bool SpaceProvenance::is_identity() const {
  return std::all_of(status.begin(), status.end(), [](DofStatus s) { return s == DofStatus::unchanged; }) &&
         static_cast<int>(status.size()) == old_num_dofs;
}

int SpaceProvenance::count(DofStatus s) const {
  return static_cast<int>(std::count(status.begin(), status.end(), s));
}

SpaceRefinement bisect_spatial(const SpatialMesh& mesh, const std::set<int>& marked, const MeshFloor& floor) {
  const int n_el = mesh.num_elements();
  for (int k : marked) {
    if (k < 0 || k >= n_el) throw std::out_of_range("marked element index out of range");
    if (0.5 * mesh.element_length(k) < floor.min_element_length)
      throw MeshFloorError("spatial bisection would produce an element shorter than " +
                           format_real(floor.min_element_length));
  }

  std::vector<Vec2> nodes;
  std::vector<int> sides;
  std::vector<int> old_element;
  // For every new node: originating old node, or -1 for inserted midpoints.
  std::vector<int> origin;
  for (int k = 0; k < n_el; ++k) {
    const auto [ia, ib] = mesh.element_nodes(k);
    nodes.push_back(mesh.node(ia));
    origin.push_back(ia);
    sides.push_back(mesh.side(k));
    old_element.push_back(k);
    if (marked.count(k)) {
      Vec2 mid = (mesh.node(ia) + mesh.node(ib)) * 0.5;
      if (const auto& c = mesh.circle()) {
        const Vec2 d = mid - c->center;
        mid = c->center + d * (c->radius / norm(d));
      }
      nodes.push_back(mid);
      origin.push_back(-1);
      sides.push_back(mesh.side(k));
      old_element.push_back(k);
    }
  }
  if (!mesh.closed()) {
    nodes.push_back(mesh.node(mesh.num_nodes() - 1));
    origin.push_back(mesh.num_nodes() - 1);
  }

  SpatialMesh refined(std::move(nodes), mesh.topology(), std::move(sides), mesh.circle());

  // Old nodes touching a split element get a modified hat function.
  std::vector<char> touched(mesh.num_nodes(), 0);
  for (int k : marked) {
    const auto [ia, ib] = mesh.element_nodes(k);
    touched[ia] = touched[ib] = 1;
  }

  SpaceProvenance prov;
  prov.old_num_dofs = mesh.num_dofs();
  prov.old_element = std::move(old_element);
  for (int j = 0; j < refined.num_dofs(); ++j) {
    const int src = origin[refined.node_of_dof(j)];
    if (src < 0) {
      prov.status.push_back(DofStatus::created);
      prov.old_dof.push_back(-1);
    } else {
      prov.status.push_back(touched[src] ? DofStatus::modified : DofStatus::unchanged);
      prov.old_dof.push_back(mesh.dof_of_node(src));
    }
  }
  return {std::move(refined), std::move(prov)};
}

bool TimeProvenance::is_identity() const {
  return static_cast<int>(old_interval.size()) == old_num_intervals &&
         std::all_of(part.begin(), part.end(), [](int p) { return p == 0; });
}

TimeRefinement bisect_temporal(const TimeMesh& mesh, const std::set<int>& marked, const MeshFloor& floor) {
  const int n = mesh.num_intervals();
  for (int i : marked) {
    if (i < 0 || i >= n) throw std::out_of_range("marked interval index out of range");
    if (0.5 * mesh.step(i) < floor.min_time_step)
      throw MeshFloorError("temporal bisection would produce a step shorter than " +
                           format_real(floor.min_time_step));
  }
  std::vector<double> knots{0.0};
  TimeProvenance prov;
  prov.old_num_intervals = n;
  for (int i = 0; i < n; ++i) {
    if (marked.count(i)) {
      knots.push_back(0.5 * (mesh.knot(i) + mesh.knot(i + 1)));
      prov.old_interval.push_back(i);
      prov.part.push_back(1);
      prov.old_interval.push_back(i);
      prov.part.push_back(2);
    } else {
      prov.old_interval.push_back(i);
      prov.part.push_back(0);
    }
    knots.push_back(mesh.knot(i + 1));
  }
  return {TimeMesh(std::move(knots)), std::move(prov)};
}

std::pair<double, double> cfl_extrema(const SpatialMesh& space, const TimeMesh& time) {
  // Ratio extrema are attained at the extreme steps and lengths.
  return {time.max_step() / space.min_element_length(), time.min_step() / space.max_element_length()};
}

void write_space_snapshot(std::ostream& out, const SpatialMesh& mesh) {
  for (const auto& p : mesh.nodes()) out << format_real(p.x) << ' ' << format_real(p.y) << '\n';
}

void write_time_snapshot(std::ostream& out, const TimeMesh& mesh) {
  for (double t : mesh.knots()) out << format_real(t) << '\n';
}

}  // namespace tdbem
