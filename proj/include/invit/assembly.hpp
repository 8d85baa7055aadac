#pragma once

#include <span>
#include <vector>

#include "invit/mesh.hpp"
#include "invit/sparse.hpp"

namespace invit {

/// Insulation thickness h sampled at the boundary vertices of one tag.
struct BoundaryProfile {
  BoundaryTag scope = BoundaryTag::RobinAll;
  std::vector<Index> vertices;  // sorted
  Vector values;                // h at vertices[i]

  static BoundaryProfile constant(const Mesh& mesh, double h, BoundaryTag scope = BoundaryTag::RobinAll);
  /// Takes h from a nodal vector (entries away from the scope are ignored).
  static BoundaryProfile from_nodal(const Mesh& mesh, std::span<const double> nodal,
                                    BoundaryTag scope = BoundaryTag::RobinAll);

  /// h at a covered vertex; InvalidInput otherwise.
  double at(Index vertex) const;
  /// Scatter to a vector of length num_vertices, zero off the boundary.
  Vector nodal(std::size_t num_vertices) const;
  /// Throws InvalidInput naming the first vertex with h <= 0.
  void require_positive() const;
};

/// Vertices on Gamma_D, i.e. incident to DirichletInner edges.
struct DirichletConstraint {
  std::vector<Index> vertices;  // sorted

  static DirichletConstraint from_mesh(const Mesh& mesh);
  bool empty() const noexcept { return vertices.empty(); }
  bool contains(Index v) const;
};

/// P1 stiffness matrix, the Galerkin form of the Dirichlet energy.
SymSparseMatrix assemble_stiffness(const Mesh& mesh);

/// Consistent P1 mass matrix.
SymSparseMatrix assemble_mass(const Mesh& mesh);

/// Diagonal boundary mass for the integral of u*v/h over edges of
/// `profile.scope`, by the vertex-lumped trapezoidal rule: an edge (i,j) of
/// length L adds L/(2 h_i) at (i,i) and L/(2 h_j) at (j,j).
SymSparseMatrix assemble_boundary_mass(const Mesh& mesh, const BoundaryProfile& profile);

/// Trapezoidal integral of |u| over the whole boundary. Shares the quadrature
/// of assemble_boundary_mass, so the Cauchy-Schwarz equality for the optimal
/// profile holds exactly in the discrete setting.
double boundary_l1(const Mesh& mesh, std::span<const double> u);

/// Trapezoidal integral of h over the edges of its scope.
double profile_mass(const Mesh& mesh, const BoundaryProfile& profile);

/// The mass-m profile minimising the boundary term for u:
/// h = m |u| / boundary_l1(u). DegenerateProfile if u vanishes on the boundary.
BoundaryProfile optimal_profile(const Mesh& mesh, std::span<const double> u, double mass);

/// Symmetric elimination: constrained rows and columns zeroed, unit diagonal.
SymSparseMatrix apply_constraint(const SymSparseMatrix& a, const DirichletConstraint& c);

/// Zeroes the constrained entries of a right-hand side (or iterate).
void constrain_rhs(std::span<double> b, const DirichletConstraint& c);

}  // namespace invit
