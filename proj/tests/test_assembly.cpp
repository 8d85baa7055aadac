#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "invit/assembly.hpp"
#include "invit/error.hpp"
#include "invit/linalg.hpp"
#include "invit/mesh.hpp"
#include "invit/sparse.hpp"

using namespace invit;

namespace {

Mesh single_triangle() {
  Mesh m;
  m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  m.triangles = {{0, 1, 2}};
  return m;
}

Vector x_coordinate(const Mesh& m) {
  Vector v;
  for (const Point& p : m.vertices) v.push_back(p.x);
  return v;
}

Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST(SymSparse, DuplicatesSummedAndMirrored) {
  const auto a = SymSparseMatrix::from_upper_triplets(3, {{0, 1, 1.0}, {1, 0, 2.0}, {2, 2, 5.0}, {0, 0, 1.0}});
  EXPECT_EQ(a(0, 1), 3.0);
  EXPECT_EQ(a(1, 0), 3.0);
  EXPECT_EQ(a(2, 2), 5.0);
  EXPECT_EQ(a(1, 2), 0.0);
  EXPECT_TRUE(a.is_symmetric());
  const Vector y = a * Vector{1.0, 1.0, 1.0};
  EXPECT_EQ(y, (Vector{4.0, 3.0, 5.0}));
  EXPECT_EQ(a.quadratic_form(Vector{1.0, 1.0, 1.0}), 12.0);
}

TEST(SymSparse, SumUnionsPatterns) {
  const auto a = SymSparseMatrix::from_upper_triplets(2, {{0, 1, 1.0}});
  const auto b = SymSparseMatrix::diagonal(Vector{2.0, 3.0});
  const auto c = a + b;
  EXPECT_EQ(c(0, 0), 2.0);
  EXPECT_EQ(c(0, 1), 1.0);
  EXPECT_EQ(c(1, 1), 3.0);
  EXPECT_EQ(c.scaled(2.0)(1, 0), 2.0);
}

TEST(Stiffness, SingleRightTriangle) {
  const auto k = assemble_stiffness(single_triangle());
  const double expected[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(k(i, j), expected[i][j], 1e-15) << i << "," << j;
}

TEST(Mass, SingleRightTriangle) {
  const auto m = assemble_mass(single_triangle());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m(i, j), (i == j ? 2.0 : 1.0) / 24.0, 1e-16);
}

TEST(Stiffness, ConstantsInKernel) {
  for (const Mesh& mesh : {generate_unit_square(7), generate_disk(6), generate_annulus(0.4, 5)}) {
    const auto k = assemble_stiffness(mesh);
    EXPECT_TRUE(k.is_symmetric());
    const Vector r = k * Vector(mesh.num_vertices(), 1.0);
    for (double v : r) EXPECT_NEAR(v, 0.0, 1e-13);
  }
}

TEST(Stiffness, LinearFunctionEnergy) {
  const Mesh mesh = generate_unit_square(8);
  const Vector x = x_coordinate(mesh);
  EXPECT_NEAR(assemble_stiffness(mesh).quadratic_form(x), 1.0, 1e-12);
}

TEST(Stiffness, PositiveSemidefiniteOnRandomVectors) {
  std::mt19937_64 rng(11);
  const Mesh mesh = generate_disk(5);
  const auto k = assemble_stiffness(mesh);
  for (int trial = 0; trial < 50; ++trial) EXPECT_GE(k.quadratic_form(random_vector(mesh.num_vertices(), rng)), 0.0);
}

TEST(Stiffness, RejectsDegenerateTriangle) {
  Mesh m = single_triangle();
  m.vertices[2] = {2.0, 0.0};
  EXPECT_THROW(assemble_stiffness(m), InvalidInput);
  EXPECT_THROW(assemble_mass(m), InvalidInput);
}

TEST(Mass, IntegratesOneAndXSquared) {
  const Mesh mesh = generate_unit_square(8);
  const auto m = assemble_mass(mesh);
  EXPECT_TRUE(m.is_symmetric());
  EXPECT_NEAR(m.quadratic_form(Vector(mesh.num_vertices(), 1.0)), 1.0, 1e-13);
  EXPECT_NEAR(m.quadratic_form(x_coordinate(mesh)), 1.0 / 3.0, 1e-13);
}

TEST(BoundaryMass, PerimeterOfSquare) {
  const Mesh mesh = generate_unit_square(1);
  const auto b = assemble_boundary_mass(mesh, BoundaryProfile::constant(mesh, 1.0));
  EXPECT_NEAR(b.quadratic_form(Vector(4, 1.0)), 4.0, 1e-13);
}

TEST(BoundaryMass, ScalesInverselyWithH) {
  const Mesh mesh = generate_unit_square(5);
  std::mt19937_64 rng(5);
  BoundaryProfile h = BoundaryProfile::constant(mesh, 1.0);
  for (double& v : h.values) v = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  BoundaryProfile h4 = h;
  for (double& v : h4.values) v *= 4.0;
  const auto b = assemble_boundary_mass(mesh, h);
  const auto b4 = assemble_boundary_mass(mesh, h4);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) EXPECT_EQ(b4(i, i), b(i, i) / 4.0);
}

TEST(BoundaryMass, DiskPerimeterIsChordSum) {
  const Mesh mesh = generate_disk(16);
  const auto b = assemble_boundary_mass(mesh, BoundaryProfile::constant(mesh, 1.0));
  EXPECT_NEAR(b.quadratic_form(Vector(mesh.num_vertices(), 1.0)), 128.0 * std::sin(std::numbers::pi / 64.0), 1e-13);
}

TEST(BoundaryMass, DiagonalAndZeroOnInterior) {
  const Mesh mesh = generate_unit_square(4);
  const auto b = assemble_boundary_mass(mesh, BoundaryProfile::constant(mesh, 1.0));
  EXPECT_EQ(b.nonzeros(), mesh.boundary_vertices().size());
  EXPECT_EQ(b(6, 6), 0.0);
}

TEST(BoundaryMass, NonPositiveHNamesVertex) {
  const Mesh mesh = generate_unit_square(2);
  BoundaryProfile h = BoundaryProfile::constant(mesh, 1.0);
  h.values[3] = 0.0;
  try {
    assemble_boundary_mass(mesh, h);
    FAIL() << "accepted h=0";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("vertex " + std::to_string(h.vertices[3])), std::string::npos);
  }
}

TEST(BoundaryL1, Examples) {
  const Mesh mesh = generate_unit_square(4);
  EXPECT_NEAR(boundary_l1(mesh, Vector(mesh.num_vertices(), 1.0)), 4.0, 1e-14);
  Vector x = x_coordinate(mesh);
  EXPECT_NEAR(boundary_l1(mesh, x), 2.0, 1e-14);
  for (double& v : x) v = -v;
  EXPECT_NEAR(boundary_l1(mesh, x), 2.0, 1e-14);
}

TEST(BoundaryL1, CauchySchwarzEqualityForOptimalProfile) {
  std::mt19937_64 rng(99);
  for (const Mesh& mesh : {generate_unit_square(6), generate_disk(4)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector u = random_vector(mesh.num_vertices(), rng, 0.1, 3.0);
      const double mass = std::uniform_real_distribution<double>(0.2, 10.0)(rng);
      const BoundaryProfile h = optimal_profile(mesh, u, mass);
      const double l1 = boundary_l1(mesh, u);
      const double lhs = assemble_boundary_mass(mesh, h).quadratic_form(u);
      EXPECT_NEAR(lhs, l1 * l1 / mass, 1e-12 * lhs);
      EXPECT_NEAR(profile_mass(mesh, h), mass, 1e-12 * mass);
    }
  }
}

TEST(OptimalProfile, ConstantTraceGivesUniformProfile) {
  const Mesh mesh = generate_unit_square(4);
  const BoundaryProfile h = optimal_profile(mesh, Vector(mesh.num_vertices(), 1.0), 3.0);
  for (double v : h.values) EXPECT_NEAR(v, 0.75, 1e-15);
}

TEST(OptimalProfile, DegenerateWhenTraceVanishes) {
  const Mesh mesh = generate_unit_square(4);
  Vector u(mesh.num_vertices(), 0.0);
  u[12] = 1.0;  // interior vertex
  EXPECT_THROW(optimal_profile(mesh, u, 1.0), DegenerateProfile);
  EXPECT_THROW(optimal_profile(mesh, Vector(mesh.num_vertices(), 1.0), 0.0), InvalidInput);
}

TEST(Constraint, VerticesOfDirichletEdges) {
  const Mesh mesh = generate_annulus(0.5, 4);
  const auto c = DirichletConstraint::from_mesh(mesh);
  EXPECT_EQ(c.vertices, mesh.boundary_vertices(BoundaryTag::DirichletInner));
  EXPECT_TRUE(DirichletConstraint::from_mesh(generate_unit_square(2)).empty());
}

TEST(Constraint, EmptyLeavesMatrixUnchanged) {
  const auto k = assemble_stiffness(generate_unit_square(3));
  const auto kt = apply_constraint(k, DirichletConstraint{});
  for (std::size_t i = 0; i < k.dimension(); ++i)
    for (std::size_t j = 0; j < k.dimension(); ++j) EXPECT_EQ(kt(i, j), k(i, j));
}

TEST(Constraint, FullEliminationGivesIdentity) {
  const auto k = assemble_stiffness(generate_unit_square(2));
  DirichletConstraint all;
  for (std::size_t i = 0; i < k.dimension(); ++i) all.vertices.push_back(i);
  const auto kt = apply_constraint(k, all);
  for (std::size_t i = 0; i < k.dimension(); ++i)
    for (std::size_t j = 0; j < k.dimension(); ++j) EXPECT_EQ(kt(i, j), i == j ? 1.0 : 0.0);
}

TEST(Constraint, ConstrainedSolveVanishesOnDirichletVertices) {
  const Mesh mesh = generate_annulus(0.5, 6);
  const auto c = DirichletConstraint::from_mesh(mesh);
  const auto kt = apply_constraint(assemble_stiffness(mesh), c);
  EXPECT_TRUE(kt.is_symmetric());
  std::mt19937_64 rng(3);
  Vector f = random_vector(mesh.num_vertices(), rng);
  constrain_rhs(f, c);
  const Vector u = solve_spd(kt, f);
  for (Index v : c.vertices) EXPECT_EQ(u[v], 0.0);
}

TEST(Energy, RobinFormIsPositiveDefinite) {
  const Mesh mesh = generate_unit_square(4);
  const auto a = assemble_stiffness(mesh) + assemble_boundary_mass(mesh, BoundaryProfile::constant(mesh, 2.0));
  const auto m = assemble_mass(mesh);
  const EigenPair p = dense_smallest_eigpair(a, m);
  EXPECT_GT(p.value, 0.0);
  std::mt19937_64 rng(17);
  const auto k = assemble_stiffness(mesh);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector u = random_vector(mesh.num_vertices(), rng);
    const double lhs = a.quadratic_form(u) + m.quadratic_form(u);
    const double rhs = k.quadratic_form(u) + m.quadratic_form(u);
    EXPECT_GE(lhs, rhs);
  }
}

TEST(Assembly, Deterministic) {
  const Mesh mesh = generate_disk(7);
  const auto a = assemble_stiffness(mesh);
  const auto b = assemble_stiffness(mesh);
  ASSERT_EQ(a.nonzeros(), b.nonzeros());
  for (std::size_t i = 0; i < a.nonzeros(); ++i) EXPECT_EQ(a.values()[i], b.values()[i]);
}
