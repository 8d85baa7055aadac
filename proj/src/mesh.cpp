#include "invit/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "invit/error.hpp"
#include "invit/format.hpp"

namespace invit {

namespace {

// Radial spacing of the disk rings relative to the azimuthal step, and the
// radius of the centre fan in units of the azimuthal step. Both scale with
// 1/n, so successive refinement levels are geometrically similar.
constexpr double kDiskRadialAspect = 2.0;
constexpr double kDiskFanRadius = 2.0;
constexpr double kAnnulusRadialAspect = 1.0;

double distance(const Point& a, const Point& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Vertices of a ring of radius r with 4n points at angles (2k+s)*pi/(4n).
// One octant is evaluated; the rest follows by exact reflection and quarter
// turns, so the ring is invariant under 90 degree rotation bit for bit.
std::vector<Point> ring_points(int n, int s, double r) {
  const int count = 4 * n;
  const double half_step = std::numbers::pi / (4.0 * n);
  std::vector<Point> pts(count);
  for (int k = 0; k < count; ++k) {
    const int quadrant = k / n;
    const int t = 2 * (k % n) + s;  // half-steps within the quadrant, < 2n
    double x = 0.0;
    double y = 0.0;
    if (t < n) {
      x = std::cos(t * half_step);
      y = std::sin(t * half_step);
    } else if (t == n) {
      x = y = std::sqrt(0.5);
    } else {
      const int mirror = 2 * n - t;
      x = std::sin(mirror * half_step);
      y = std::cos(mirror * half_step);
    }
    x *= r;
    y *= r;
    switch (quadrant) {
      case 0: pts[k] = {x, y}; break;
      case 1: pts[k] = {-y, x}; break;
      case 2: pts[k] = {-x, -y}; break;
      default: pts[k] = {y, -x}; break;
    }
  }
  return pts;
}

void push_ccw(Mesh& mesh, Index a, Index b, Index c) {
  if (cross(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]) < 0.0) std::swap(b, c);
  mesh.triangles.push_back({a, b, c});
}

void push_edge(Mesh& mesh, Index a, Index b, BoundaryTag tag) {
  mesh.boundary_edges.push_back({{a, b}, tag, distance(mesh.vertices[a], mesh.vertices[b])});
}

// Triangulates the band between two consecutive staggered rings.
void connect_rings(Mesh& mesh, int n, Index inner0, int s_inner, Index outer0, int s_outer) {
  const int count = 4 * n;
  const auto wrap = [count](int k) { return static_cast<Index>(((k % count) + count) % count); };
  const int inner_to_outer = (1 + s_inner - s_outer) / 2;
  const int outer_to_inner = (1 + s_outer - s_inner) / 2;
  for (int k = 0; k < count; ++k) {
    push_ccw(mesh, inner0 + wrap(k), inner0 + wrap(k + 1), outer0 + wrap(k + inner_to_outer));
    push_ccw(mesh, outer0 + wrap(k), outer0 + wrap(k + 1), inner0 + wrap(k + outer_to_inner));
  }
}

// Triangulates the band between two rings at equal angles, each quad cut
// along the same rotational direction.
void connect_aligned_rings(Mesh& mesh, int n, Index inner0, Index outer0) {
  const int count = 4 * n;
  for (int k = 0; k < count; ++k) {
    const Index next = static_cast<Index>((k + 1) % count);
    push_ccw(mesh, inner0 + k, inner0 + next, outer0 + next);
    push_ccw(mesh, inner0 + k, outer0 + next, outer0 + k);
  }
}

// Largest ratio r_inner/r_outer between consecutive staggered rings for
// which no triangle in the band is obtuse.
double non_obtuse_ratio(int n) {
  const double half = std::numbers::pi / (4.0 * n);
  return std::cos(half) - std::sin(half);
}

using EdgeKey = std::pair<Index, Index>;

EdgeKey key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::RobinAll: return "RobinAll";
    case BoundaryTag::DirichletInner: return "DirichletInner";
    case BoundaryTag::NeumannOuter: return "NeumannOuter";
  }
  return "?";
}

std::optional<BoundaryTag> parse_tag(std::string_view text) {
  for (auto tag : {BoundaryTag::RobinAll, BoundaryTag::DirichletInner, BoundaryTag::NeumannOuter}) {
    if (text == to_string(tag)) return tag;
  }
  return std::nullopt;
}

bool Mesh::has_tag(BoundaryTag tag) const noexcept {
  return std::any_of(boundary_edges.begin(), boundary_edges.end(),
                     [tag](const BoundaryEdge& e) { return e.tag == tag; });
}

std::vector<Index> Mesh::boundary_vertices(BoundaryTag tag) const {
  std::vector<Index> out;
  for (const auto& e : boundary_edges) {
    if (e.tag != tag) continue;
    out.push_back(e.v[0]);
    out.push_back(e.v[1]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> Mesh::boundary_vertices() const {
  std::vector<Index> out;
  for (const auto& e : boundary_edges) {
    out.push_back(e.v[0]);
    out.push_back(e.v[1]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Mesh::signed_area(Index t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (Index t = 0; t < triangles.size(); ++t) sum += signed_area(t);
  return sum;
}

double Mesh::boundary_length() const {
  double sum = 0.0;
  for (const auto& e : boundary_edges) sum += e.length;
  return sum;
}

Mesh generate_unit_square(int n) {
  if (n < 1) throw InvalidInput("unit square needs n >= 1, got " + std::to_string(n));
  Mesh mesh;
  const auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
  mesh.vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  const auto tag = BoundaryTag::RobinAll;
  for (int i = 0; i < n; ++i) push_edge(mesh, id(i, 0), id(i + 1, 0), tag);
  for (int j = 0; j < n; ++j) push_edge(mesh, id(n, j), id(n, j + 1), tag);
  for (int i = n; i > 0; --i) push_edge(mesh, id(i, n), id(i - 1, n), tag);
  for (int j = n; j > 0; --j) push_edge(mesh, id(0, j), id(0, j - 1), tag);
  return mesh;
}

Mesh generate_disk(int n) {
  if (n < 1) throw InvalidInput("disk needs n >= 1, got " + std::to_string(n));
  const int count = 4 * n;
  const double step = std::numbers::pi / (2.0 * n);

  // Number of ring bands between the fan ring and the boundary.
  int bands = 0;
  const double fan_radius = kDiskFanRadius * step;
  const double max_ratio = std::min(std::exp(-kDiskRadialAspect * step), non_obtuse_ratio(n));
  if (max_ratio > 0.0 && fan_radius < 1.0) {
    bands = static_cast<int>(std::floor(std::log(fan_radius) / std::log(max_ratio)));
  }

  Mesh mesh;
  mesh.vertices.push_back({0.0, 0.0});
  for (int l = 0; l <= bands; ++l) {
    const double r = (l == bands) ? 1.0 : std::pow(fan_radius, static_cast<double>(bands - l) / bands);
    const auto ring = ring_points(n, (bands - l) % 2, r);
    mesh.vertices.insert(mesh.vertices.end(), ring.begin(), ring.end());
  }
  const auto ring_start = [count](int l) { return static_cast<Index>(1 + l * count); };

  for (int k = 0; k < count; ++k) {
    push_ccw(mesh, 0, ring_start(0) + k, ring_start(0) + (k + 1) % count);
  }
  for (int l = 0; l < bands; ++l) {
    connect_rings(mesh, n, ring_start(l), (bands - l) % 2, ring_start(l + 1), (bands - l - 1) % 2);
  }
  const Index outer = ring_start(bands);
  for (int k = 0; k < count; ++k) {
    push_edge(mesh, outer + k, outer + (k + 1) % count, BoundaryTag::RobinAll);
  }
  return mesh;
}

Mesh generate_annulus(double r0, int n) {
  if (!(r0 > 0.0 && r0 < 1.0)) {
    throw InvalidInput("annulus inner radius r0 must lie in (0,1), got " + format_g17(r0));
  }
  if (n < 1) throw InvalidInput("annulus needs n >= 1, got " + std::to_string(n));
  const int count = 4 * n;
  const double step = std::numbers::pi / (2.0 * n);

  int bands = std::max(1, static_cast<int>(std::lround(-std::log(r0) / (kAnnulusRadialAspect * step))));
  const double c = non_obtuse_ratio(n);
  if (c > 0.0) {
    const int widest = static_cast<int>(std::floor(std::log(r0) / std::log(c)));
    if (widest >= 1) bands = std::min(bands, widest);
  }

  // Thin bands fall back to aligned rings.
  const double ratio = std::pow(r0, 1.0 / bands);
  const bool staggered = ratio <= std::max(c, 0.5 * std::cos(0.5 * step));
  const auto offset = [&](int l) { return staggered ? (bands - l) % 2 : 0; };

  Mesh mesh;
  for (int l = 0; l <= bands; ++l) {
    double r = std::pow(r0, static_cast<double>(bands - l) / bands);
    if (l == 0) r = r0;
    if (l == bands) r = 1.0;
    const auto ring = ring_points(n, offset(l), r);
    mesh.vertices.insert(mesh.vertices.end(), ring.begin(), ring.end());
  }
  const auto ring_start = [count](int l) { return static_cast<Index>(l * count); };
  for (int l = 0; l < bands; ++l) {
    if (staggered) {
      connect_rings(mesh, n, ring_start(l), offset(l), ring_start(l + 1), offset(l + 1));
    } else {
      connect_aligned_rings(mesh, n, ring_start(l), ring_start(l + 1));
    }
  }
  for (int k = 0; k < count; ++k) {
    push_edge(mesh, ring_start(0) + (k + 1) % count, ring_start(0) + k, BoundaryTag::DirichletInner);
  }
  const Index outer = ring_start(bands);
  for (int k = 0; k < count; ++k) {
    push_edge(mesh, outer + k, outer + (k + 1) % count, BoundaryTag::NeumannOuter);
  }
  return mesh;
}

void validate(const Mesh& mesh) {
  const std::size_t nv = mesh.num_vertices();
  std::map<EdgeKey, int> edge_use;
  for (Index t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (Index v : tri) {
      if (v >= nv) throw TopologyError("triangle " + std::to_string(t) + " references missing vertex");
    }
    if (!(mesh.signed_area(t) > 0.0)) {
      throw TopologyError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    for (int e = 0; e < 3; ++e) ++edge_use[key(tri[e], tri[(e + 1) % 3])];
  }

  std::map<EdgeKey, int> boundary_use;
  for (const auto& e : mesh.boundary_edges) {
    if (e.v[0] >= nv || e.v[1] >= nv || e.v[0] == e.v[1]) {
      throw TopologyError("boundary edge has invalid endpoints");
    }
    const auto k = key(e.v[0], e.v[1]);
    const auto it = edge_use.find(k);
    if (it == edge_use.end() || it->second != 1) {
      throw TopologyError("boundary edge (" + std::to_string(e.v[0]) + "," + std::to_string(e.v[1]) +
                          ") does not belong to exactly one triangle");
    }
    if (++boundary_use[k] > 1) throw TopologyError("duplicate boundary edge");
  }
  for (const auto& [k, uses] : edge_use) {
    if (uses > 2) throw TopologyError("edge shared by more than two triangles");
    if (uses == 1 && !boundary_use.contains(k)) {
      throw TopologyError("untagged boundary edge (" + std::to_string(k.first) + "," +
                          std::to_string(k.second) + ")");
    }
  }

  std::map<std::pair<BoundaryTag, Index>, int> degree;
  for (const auto& e : mesh.boundary_edges) {
    ++degree[{e.tag, e.v[0]}];
    ++degree[{e.tag, e.v[1]}];
  }
  for (const auto& [tv, d] : degree) {
    if (d != 2) {
      throw TopologyError("open boundary cycle: vertex " + std::to_string(tv.second) + " has " +
                          std::to_string(d) + " incident " + std::string(to_string(tv.first)) + " edges");
    }
  }
}

double max_interior_angle(const Mesh& mesh) {
  double worst = 0.0;
  for (const auto& tri : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Point& p = mesh.vertices[tri[i]];
      const Point& a = mesh.vertices[tri[(i + 1) % 3]];
      const Point& b = mesh.vertices[tri[(i + 2) % 3]];
      const double dot = (a.x - p.x) * (b.x - p.x) + (a.y - p.y) * (b.y - p.y);
      const double cosine = std::clamp(dot / (distance(p, a) * distance(p, b)), -1.0, 1.0);
      worst = std::max(worst, std::acos(cosine));
    }
  }
  return worst;
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "VERTICES " << mesh.vertices.size() << '\n';
  for (const auto& p : mesh.vertices) out << format_g17(p.x) << ' ' << format_g17(p.y) << '\n';
  out << "TRIANGLES " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "BOUNDARY " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) {
    out << e.v[0] << ' ' << e.v[1] << ' ' << to_string(e.tag) << '\n';
  }
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  write_mesh(mesh, out);
  if (!out) throw InvalidInput("failed writing " + path.string());
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line split on whitespace; empty at end of input.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    return {};
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_, message); }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

double to_double(const LineReader& r, const std::string& tok) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
    r.fail("expected a finite number, got '" + tok + "'");
  }
  return value;
}

Index to_index(const LineReader& r, const std::string& tok) {
  unsigned long long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    r.fail("expected a non-negative integer, got '" + tok + "'");
  }
  return static_cast<Index>(value);
}

std::size_t section_header(LineReader& r, std::string_view name) {
  const auto tokens = r.next();
  if (tokens.size() != 2 || tokens[0] != name) {
    r.fail("expected section header '" + std::string(name) + " <count>'");
  }
  return to_index(r, tokens[1]);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  LineReader r(in);
  Mesh mesh;

  const std::size_t nv = section_header(r, "VERTICES");
  mesh.vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto tok = r.next();
    if (tok.size() != 2) r.fail("vertex line needs 2 coordinates");
    mesh.vertices.push_back({to_double(r, tok[0]), to_double(r, tok[1])});
  }

  const std::size_t nt = section_header(r, "TRIANGLES");
  mesh.triangles.reserve(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    const auto tok = r.next();
    if (tok.size() != 3) r.fail("triangle line needs 3 vertex indices");
    std::array<Index, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      tri[k] = to_index(r, tok[k]);
      if (tri[k] >= nv) r.fail("triangle index " + tok[k] + " out of range");
    }
    mesh.triangles.push_back(tri);
  }

  const std::size_t nb = section_header(r, "BOUNDARY");
  mesh.boundary_edges.reserve(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto tok = r.next();
    if (tok.size() != 3) r.fail("boundary line needs 2 vertex indices and a tag");
    const Index a = to_index(r, tok[0]);
    const Index b = to_index(r, tok[1]);
    if (a >= nv || b >= nv) r.fail("boundary index out of range");
    const auto tag = parse_tag(tok[2]);
    if (!tag) r.fail("unknown boundary tag '" + tok[2] + "'");
    push_edge(mesh, a, b, *tag);
  }
  if (!r.next().empty()) r.fail("unexpected content after BOUNDARY section");

  validate(mesh);
  return mesh;
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open mesh file " + path.string());
  return read_mesh(in);
}

}  // namespace invit
