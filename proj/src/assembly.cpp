#include "invit/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "invit/error.hpp"
#include "invit/format.hpp"

namespace invit {

namespace {

constexpr double kMinTriangleArea = 1e-14;

double checked_area(const Mesh& mesh, Index t) {
  const double area = mesh.signed_area(t);
  if (!(area >= kMinTriangleArea)) {
    throw InvalidInput("degenerate triangle " + std::to_string(t) + " (area " + format_g17(area) + ")");
  }
  return area;
}

}  // namespace

BoundaryProfile BoundaryProfile::constant(const Mesh& mesh, double h, BoundaryTag scope) {
  BoundaryProfile p;
  p.scope = scope;
  p.vertices = mesh.boundary_vertices(scope);
  p.values.assign(p.vertices.size(), h);
  p.require_positive();
  return p;
}

BoundaryProfile BoundaryProfile::from_nodal(const Mesh& mesh, std::span<const double> nodal,
                                            BoundaryTag scope) {
  if (nodal.size() != mesh.num_vertices()) throw InvalidInput("profile vector has wrong length");
  BoundaryProfile p;
  p.scope = scope;
  p.vertices = mesh.boundary_vertices(scope);
  p.values.reserve(p.vertices.size());
  for (Index v : p.vertices) p.values.push_back(nodal[v]);
  return p;
}

double BoundaryProfile::at(Index vertex) const {
  const auto it = std::lower_bound(vertices.begin(), vertices.end(), vertex);
  if (it == vertices.end() || *it != vertex) {
    throw InvalidInput("vertex " + std::to_string(vertex) + " is not covered by the profile");
  }
  return values[static_cast<std::size_t>(it - vertices.begin())];
}

Vector BoundaryProfile::nodal(std::size_t num_vertices) const {
  Vector out(num_vertices, 0.0);
  for (std::size_t i = 0; i < vertices.size(); ++i) out[vertices[i]] = values[i];
  return out;
}

void BoundaryProfile::require_positive() const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw InvalidInput("insulation h must be strictly positive; vertex " + std::to_string(vertices[i]) +
                         " has h = " + format_g17(values[i]));
    }
  }
}

DirichletConstraint DirichletConstraint::from_mesh(const Mesh& mesh) {
  return {mesh.boundary_vertices(BoundaryTag::DirichletInner)};
}

bool DirichletConstraint::contains(Index v) const {
  return std::binary_search(vertices.begin(), vertices.end(), v);
}

SymSparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> entries;
  entries.reserve(6 * mesh.triangles.size());
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const double area = checked_area(mesh, t);
    const auto& tri = mesh.triangles[t];
    double b[3];
    double c[3];
    for (int i = 0; i < 3; ++i) {
      const Point& pj = mesh.vertices[tri[(i + 1) % 3]];
      const Point& pk = mesh.vertices[tri[(i + 2) % 3]];
      b[i] = pj.y - pk.y;
      c[i] = pk.x - pj.x;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        entries.push_back({tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)});
      }
    }
  }
  return SymSparseMatrix::from_upper_triplets(mesh.num_vertices(), std::move(entries));
}

SymSparseMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> entries;
  entries.reserve(6 * mesh.triangles.size());
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const double area = checked_area(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        entries.push_back({tri[i], tri[j], (i == j ? 2.0 : 1.0) * area / 12.0});
      }
    }
  }
  return SymSparseMatrix::from_upper_triplets(mesh.num_vertices(), std::move(entries));
}

SymSparseMatrix assemble_boundary_mass(const Mesh& mesh, const BoundaryProfile& profile) {
  profile.require_positive();
  std::vector<Triplet> entries;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != profile.scope) continue;
    for (Index v : e.v) entries.push_back({v, v, e.length / (2.0 * profile.at(v))});
  }
  return SymSparseMatrix::from_upper_triplets(mesh.num_vertices(), std::move(entries));
}

double boundary_l1(const Mesh& mesh, std::span<const double> u) {
  double sum = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    sum += 0.5 * e.length * (std::abs(u[e.v[0]]) + std::abs(u[e.v[1]]));
  }
  return sum;
}

double profile_mass(const Mesh& mesh, const BoundaryProfile& profile) {
  double sum = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != profile.scope) continue;
    sum += 0.5 * e.length * (profile.at(e.v[0]) + profile.at(e.v[1]));
  }
  return sum;
}

BoundaryProfile optimal_profile(const Mesh& mesh, std::span<const double> u, double mass) {
  if (!(mass > 0.0)) throw InvalidInput("insulation mass must be positive, got " + format_g17(mass));
  const double trace = boundary_l1(mesh, u);
  if (!(trace > 0.0)) throw DegenerateProfile("iterate vanishes on the boundary; profile undefined");
  BoundaryProfile p;
  p.scope = BoundaryTag::RobinAll;
  p.vertices = mesh.boundary_vertices();
  p.values.reserve(p.vertices.size());
  for (Index v : p.vertices) p.values.push_back(mass * std::abs(u[v]) / trace);
  return p;
}

SymSparseMatrix apply_constraint(const SymSparseMatrix& a, const DirichletConstraint& c) {
  const std::size_t n = a.dimension();
  std::vector<char> fixed(n, 0);
  for (Index v : c.vertices) {
    if (v >= n) throw InvalidInput("constrained vertex " + std::to_string(v) + " outside matrix");
    fixed[v] = 1;
  }
  const auto rows = a.row_offsets();
  const auto cols = a.column_indices();
  const auto vals = a.values();
  std::vector<Triplet> entries;
  entries.reserve(vals.size() / 2 + n);
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) {
      entries.push_back({i, i, 1.0});
      continue;
    }
    for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) {
      if (cols[p] >= i && !fixed[cols[p]]) entries.push_back({i, cols[p], vals[p]});
    }
  }
  return SymSparseMatrix::from_upper_triplets(n, std::move(entries));
}

void constrain_rhs(std::span<double> b, const DirichletConstraint& c) {
  for (Index v : c.vertices) b[v] = 0.0;
}

}  // namespace invit
