#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace invit {

using Index = std::size_t;

/// Role of a boundary edge in the eigenproblem.
enum class BoundaryTag { RobinAll, DirichletInner, NeumannOuter };

std::string_view to_string(BoundaryTag tag);
std::optional<BoundaryTag> parse_tag(std::string_view text);

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Boundary edge with its (precomputed) length, the discrete boundary measure.
struct BoundaryEdge {
  std::array<Index, 2> v{};
  BoundaryTag tag = BoundaryTag::RobinAll;
  double length = 0.0;

  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Conforming 2D triangulation with tagged boundary edges.
///
/// Triangles are stored counterclockwise. Every boundary edge lies on exactly
/// one triangle, and the edges of each tag form closed cycles.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<Index, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;

  std::size_t num_vertices() const noexcept { return vertices.size(); }
  bool has_tag(BoundaryTag tag) const noexcept;

  /// Sorted, deduplicated vertices touched by edges of `tag`.
  std::vector<Index> boundary_vertices(BoundaryTag tag) const;
  /// Sorted, deduplicated vertices on any boundary edge.
  std::vector<Index> boundary_vertices() const;

  double signed_area(Index triangle) const;
  double total_area() const;
  double boundary_length() const;

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Structured (n+1)^2-vertex grid on [0,1]^2, each cell split along its
/// lower-left/upper-right diagonal. Boundary tagged RobinAll.
Mesh generate_unit_square(int n);

/// Unit disk meshed by a centre fan and staggered concentric rings of 4n
/// vertices each. The mesh is invariant under the dihedral group of order
/// 8n and all triangles are non-obtuse. Boundary tagged RobinAll.
Mesh generate_disk(int n);

/// Annulus r0 < |x| < 1 from staggered rings of 4n vertices (aligned rings
/// when r0 is too close to 1 for the level). The inner circle is tagged
/// DirichletInner and the outer circle NeumannOuter.
Mesh generate_annulus(double r0, int n);

/// Throws TopologyError unless every invariant of Mesh holds.
void validate(const Mesh& mesh);

/// Largest interior angle over all triangles, in radians.
double max_interior_angle(const Mesh& mesh);

/// Text format: VERTICES, TRIANGLES, BOUNDARY sections, each headed by its
/// entry count. Coordinates carry 17 significant digits.
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Parses and validates. ParseError names the offending line; topology
/// violations raise TopologyError.
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);

}  // namespace invit
