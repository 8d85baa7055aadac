#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "invit/assembly.hpp"
#include "invit/error.hpp"
#include "invit/iteration.hpp"
#include "invit/linalg.hpp"
#include "invit/mesh.hpp"

using namespace invit;

namespace {

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

ProblemSpec robin_square(int n, double h = 1.0) {
  auto mesh = share(generate_unit_square(n));
  return ProblemSpec::robin(mesh, BoundaryProfile::constant(*mesh, h));
}

ProblemSpec mixed_annulus(int n, double r0 = 0.5) { return ProblemSpec::mixed(share(generate_annulus(r0, n))); }

// Unit square with u = 0 on the side x = 0 and natural conditions elsewhere.
Mesh square_with_dirichlet_left(int n) {
  Mesh m = generate_unit_square(n);
  for (auto& e : m.boundary_edges) {
    const bool left = m.vertices[e.v[0]].x == 0.0 && m.vertices[e.v[1]].x == 0.0;
    e.tag = left ? BoundaryTag::DirichletInner : BoundaryTag::NeumannOuter;
  }
  return m;
}

Vector random_positive(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.1, 2.0);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

double max_rel_diff(const Vector& a, const Vector& b) {
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff / scale;
}

}  // namespace

TEST(Rayleigh, RobinConstant) {
  const ProblemSpec spec = robin_square(4);
  EXPECT_NEAR(rayleigh(spec, Vector(spec.dimension(), 1.0)), 4.0, 1e-13);
}

TEST(Rayleigh, MixedLinearOnSquare) {
  const auto mesh = share(square_with_dirichlet_left(6));
  const ProblemSpec spec = ProblemSpec::mixed(mesh);
  Vector x;
  for (const Point& p : mesh->vertices) x.push_back(p.x);
  EXPECT_NEAR(rayleigh(spec, x), 3.0, 1e-12);
}

TEST(Rayleigh, InsulationConstant) {
  const ProblemSpec spec = ProblemSpec::insulation(share(generate_unit_square(4)), 2.0);
  EXPECT_NEAR(rayleigh(spec, Vector(spec.dimension(), 1.0)), 8.0, 1e-13);
}

TEST(Rayleigh, ZeroVectorRejected) {
  const ProblemSpec spec = robin_square(3);
  EXPECT_THROW(rayleigh(spec, Vector(spec.dimension(), 0.0)), InvalidInput);
  EXPECT_THROW(rayleigh(spec, Vector(3, 1.0)), InvalidInput);
}

TEST(ProblemSpec, KindAndTagChecks) {
  EXPECT_THROW(ProblemSpec::mixed(share(generate_unit_square(2))), InvalidInput);
  auto annulus = share(generate_annulus(0.5, 2));
  EXPECT_THROW(ProblemSpec::insulation(annulus, 1.0), InvalidInput);
  EXPECT_THROW(ProblemSpec::insulation(share(generate_unit_square(2)), 0.0), InvalidInput);
  EXPECT_THROW(ProblemSpec::insulation(share(generate_unit_square(2)), -1.0), InvalidInput);
  auto square = share(generate_unit_square(2));
  BoundaryProfile bad = BoundaryProfile::constant(*square, 1.0);
  bad.values[0] = -1.0;
  EXPECT_THROW(ProblemSpec::robin(square, bad), InvalidInput);
  const ProblemSpec robin = robin_square(2);
  EXPECT_EQ(robin.kind(), ProblemKind::Robin);
  EXPECT_THROW(robin.insulation_mass(), InvalidInput);
  EXPECT_TRUE(robin.constraint().empty());
}

TEST(ProblemKind, ParseAndPrint) {
  for (auto kind : {ProblemKind::Robin, ProblemKind::Mixed, ProblemKind::Insulation}) {
    EXPECT_EQ(parse_problem_kind(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_problem_kind("dirichlet").has_value());
}

TEST(RobinStep, OracleEigenvectorIsFixedPoint) {
  const ProblemSpec spec = robin_square(6);
  const EigenPair p = dense_smallest_eigpair(spec.system_matrix(), spec.mass_matrix());
  const Vector next = robin_step(p.vector, spec.stiffness(), spec.mass_matrix(), spec.boundary_mass());
  EXPECT_LE(max_rel_diff(next, p.vector), 1e-9);
}

TEST(RobinStep, ScalingEquivariance) {
  const ProblemSpec spec = robin_square(5);
  std::mt19937_64 rng(4);
  const Vector u = random_positive(spec.dimension(), rng);
  const Vector a = robin_step(u, spec.stiffness(), spec.mass_matrix(), spec.boundary_mass());
  const Vector b = robin_step(scaled(u, 5.0), spec.stiffness(), spec.mass_matrix(), spec.boundary_mass());
  EXPECT_LE(max_rel_diff(b, scaled(a, 5.0)), 1e-12);
}

TEST(RobinStep, PositiveOutputFromConstant) {
  const ProblemSpec spec = robin_square(4);
  const Vector next = robin_step(Vector(spec.dimension(), 1.0), spec.stiffness(), spec.mass_matrix(),
                                 spec.boundary_mass());
  for (double v : next) EXPECT_GT(v, 0.0);
}

TEST(MixedStep, OracleEigenvectorIsFixedPoint) {
  const ProblemSpec spec = mixed_annulus(6);
  const EigenPair p = dense_smallest_eigpair(spec.stiffness(), spec.mass_matrix(), &spec.constraint());
  const Vector next = mixed_step(p.vector, spec.stiffness(), spec.mass_matrix(), spec.constraint());
  EXPECT_LE(max_rel_diff(next, p.vector), 1e-9);
}

TEST(MixedStep, ScalingEquivariance) {
  const ProblemSpec spec = mixed_annulus(5);
  std::mt19937_64 rng(12);
  const Vector u = random_positive(spec.dimension(), rng);
  const Vector a = mixed_step(u, spec.stiffness(), spec.mass_matrix(), spec.constraint());
  const Vector b = mixed_step(scaled(u, 5.0), spec.stiffness(), spec.mass_matrix(), spec.constraint());
  EXPECT_LE(max_rel_diff(b, scaled(a, 5.0)), 1e-12);
}

TEST(MixedStep, NonnegativeAndZeroOnDirichlet) {
  const ProblemSpec spec = mixed_annulus(8);
  const Mesh& mesh = spec.mesh();
  Vector u(mesh.num_vertices());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = std::max(0.0, std::hypot(mesh.vertices[i].x, mesh.vertices[i].y) - 0.5);
  }
  const Vector next = mixed_step(u, spec.stiffness(), spec.mass_matrix(), spec.constraint());
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (spec.constraint().contains(i)) {
      EXPECT_EQ(next[i], 0.0);
    } else {
      EXPECT_GT(next[i], 0.0);
    }
  }
}

TEST(MixedStep, ZeroQuotientRejected) {
  const ProblemSpec spec = mixed_annulus(3);
  EXPECT_THROW(mixed_step(Vector(spec.dimension(), 1.0), spec.stiffness(), spec.mass_matrix(), spec.constraint()),
               InvalidInput);
}

TEST(InsulationStep, UniformTraceGivesUniformProfile) {
  const Mesh mesh = generate_unit_square(4);
  const InsulationState s = InsulationState::initial(mesh, Vector(mesh.num_vertices(), 1.0), 3.0);
  for (double h : s.h.values) EXPECT_NEAR(h, 0.75, 1e-15);
}

TEST(InsulationStep, MassAndIdentityPreserved) {
  const ProblemSpec spec = ProblemSpec::insulation(share(generate_unit_square(6)), 1.5);
  const Mesh& mesh = spec.mesh();
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    InsulationState s = InsulationState::initial(mesh, random_positive(mesh.num_vertices(), rng), 1.5);
    for (int step = 0; step < 3; ++step) {
      s = insulation_step(s, spec.stiffness(), spec.mass_matrix(), mesh, 1.5);
      EXPECT_NEAR(profile_mass(mesh, s.h), 1.5, 1e-12 * 1.5);
      const double rm = rayleigh(spec, s.u);
      const double r = robin_quotient(spec.stiffness(), spec.mass_matrix(), assemble_boundary_mass(mesh, s.h), s.u);
      EXPECT_NEAR(rm, r, 1e-12 * r);
    }
  }
}

TEST(InsulationStep, VanishingProfileIsDegenerate) {
  const ProblemSpec spec = ProblemSpec::insulation(share(generate_unit_square(3)), 1.0);
  InsulationState s = InsulationState::initial(spec.mesh(), Vector(spec.dimension(), 1.0), 1.0);
  s.h.values[2] = 0.0;
  EXPECT_THROW(insulation_step(s, spec.stiffness(), spec.mass_matrix(), spec.mesh(), 1.0), DegenerateProfile);
}

TEST(IterationConfig, Validation) {
  IterationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rtol = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.rtol = 1e-8;
  cfg.max_steps = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(InitialVector, DefaultsAndChecks) {
  const ProblemSpec robin = robin_square(3);
  const Vector one = initial_vector(robin, {});
  for (double v : one) EXPECT_EQ(v, 1.0);

  const ProblemSpec mixed = mixed_annulus(4);
  const Vector affine = initial_vector(mixed, {});
  for (std::size_t i = 0; i < affine.size(); ++i) {
    if (mixed.constraint().contains(i)) {
      EXPECT_EQ(affine[i], 0.0);
    } else {
      EXPECT_GE(affine[i], 1.0);
      EXPECT_LE(affine[i], 2.0);
    }
  }
  EXPECT_GT(rayleigh(mixed, affine), 0.0);

  IterationConfig cfg;
  cfg.initial = InitialVector::UserSupplied;
  cfg.user_initial.assign(robin.dimension(), 1.0);
  cfg.user_initial[3] = -0.5;
  EXPECT_THROW(initial_vector(robin, cfg), InvalidInput);
  cfg.user_initial.assign(robin.dimension() + 1, 1.0);
  EXPECT_THROW(initial_vector(robin, cfg), InvalidInput);
}

TEST(Run, RobinMatchesOracle) {
  const ProblemSpec spec = robin_square(8);
  const RunResult r = run(spec, {});
  const double oracle = dense_smallest_eigpair(spec.system_matrix(), spec.mass_matrix()).value;
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LE(r.trace.steps, 200u);
  EXPECT_NEAR(r.lambda, oracle, 1e-8 * oracle);
  EXPECT_EQ(r.trace.rows.size(), r.trace.steps + 1);
  EXPECT_EQ(r.lambda, r.trace.rows.back().rayleigh);
  for (std::size_t k = 1; k < r.trace.rows.size(); ++k) {
    EXPECT_LE(r.trace.rows[k].rayleigh, r.trace.rows[k - 1].rayleigh * (1.0 + 1e-9));
  }
  for (double v : r.u) EXPECT_GT(v, 0.0);
}

TEST(Run, MixedMatchesOracle) {
  const ProblemSpec spec = mixed_annulus(6);
  const RunResult r = run(spec, {});
  const double oracle = dense_smallest_eigpair(spec.stiffness(), spec.mass_matrix(), &spec.constraint()).value;
  EXPECT_TRUE(r.trace.converged);
  EXPECT_NEAR(r.lambda, oracle, 1e-8 * oracle);
  for (std::size_t i = 0; i < r.u.size(); ++i) {
    if (spec.constraint().contains(i)) {
      EXPECT_EQ(r.u[i], 0.0);
    } else {
      EXPECT_GT(r.u[i], 0.0);
    }
  }
  EXPECT_TRUE(check_monotonicity(r.trace).empty());
}

TEST(Run, ScaledStartGivesSameQuotients) {
  const ProblemSpec spec = robin_square(6);
  std::mt19937_64 rng(5);
  IterationConfig cfg;
  cfg.initial = InitialVector::UserSupplied;
  cfg.user_initial = random_positive(spec.dimension(), rng);
  const RunResult a = run(spec, cfg);
  cfg.user_initial = scaled(cfg.user_initial, 5.0);
  const RunResult b = run(spec, cfg);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
    EXPECT_NEAR(b.trace.rows[k].rayleigh, a.trace.rows[k].rayleigh, 1e-12 * a.trace.rows[k].rayleigh);
  }
}

TEST(Run, MaxStepsReportedNotThrown) {
  const ProblemSpec spec = robin_square(4);
  IterationConfig cfg;
  cfg.max_steps = 1;
  const RunResult r = run(spec, cfg);
  EXPECT_FALSE(r.trace.converged);
  EXPECT_EQ(r.trace.steps, 1u);
  EXPECT_EQ(r.trace.rows.size(), 2u);
}

TEST(Run, ObserverSeesEveryIterate) {
  const ProblemSpec spec = ProblemSpec::insulation(share(generate_unit_square(4)), 2.0);
  std::size_t calls = 0;
  bool had_profile = true;
  const RunResult r = run(spec, {}, [&](std::size_t k, const Vector&, const BoundaryProfile* h) {
    EXPECT_EQ(k, calls);
    had_profile = had_profile && h != nullptr;
    ++calls;
  });
  EXPECT_EQ(calls, r.trace.rows.size());
  EXPECT_TRUE(had_profile);
}

TEST(Run, InsulationTraceRecordsProfile) {
  const ProblemSpec spec = ProblemSpec::insulation(share(generate_unit_square(6)), 2.0);
  const RunResult r = run(spec, {});
  for (const TraceRow& row : r.trace.rows) {
    EXPECT_NEAR(row.profile_mass, 2.0, 2e-12);
    EXPECT_NEAR(row.robin_with_profile, row.rayleigh, 1e-12 * row.rayleigh);
  }
  EXPECT_TRUE(check_monotonicity(r.trace).empty());
  for (double v : r.u) EXPECT_GT(v, 0.0);
}

TEST(FixedPointResidual, SmallAtOracleEigenvector) {
  const ProblemSpec spec = robin_square(6);
  const EigenPair p = dense_smallest_eigpair(spec.system_matrix(), spec.mass_matrix());
  EXPECT_LE(fixed_point_residual(spec, p.vector), 1e-9);
  const ProblemSpec mixed = mixed_annulus(4);
  const EigenPair q = dense_smallest_eigpair(mixed.stiffness(), mixed.mass_matrix(), &mixed.constraint());
  EXPECT_LE(fixed_point_residual(mixed, q.vector), 1e-9);
}

TEST(FixedPointResidual, PositiveForRandomVectorAndScaleInvariant) {
  std::mt19937_64 rng(21);
  for (const ProblemSpec& spec :
       {robin_square(5), ProblemSpec::insulation(share(generate_unit_square(5)), 1.0)}) {
    const Vector u = random_positive(spec.dimension(), rng);
    const double r = fixed_point_residual(spec, u);
    EXPECT_GT(r, 0.0);
    EXPECT_NEAR(fixed_point_residual(spec, scaled(u, 3.0)), r, 1e-12 * r);
  }
  const ProblemSpec spec = robin_square(3);
  EXPECT_THROW(fixed_point_residual(spec, Vector(spec.dimension(), 0.0)), InvalidInput);
}

TEST(Monotonicity, ConvergedRobinRunHasNoViolations) {
  const RunResult r = run(robin_square(8), {});
  EXPECT_TRUE(check_monotonicity(r.trace).empty());
}

TEST(Monotonicity, IncreasingQuotientNamed) {
  IterationTrace t;
  t.kind = ProblemKind::Robin;
  // An isolated R increase: the L2 norm may drop by at most the slack.
  t.rows = {{0, 2.0, 1.0, 3.0, 0.0}, {1, 2.0 * (1.0 + 1.5e-9), 1.0 - 0.9e-9, 3.0, 0.0}};
  const auto v = check_monotonicity(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].relation, "R nonincreasing");
  EXPECT_EQ(v[0].step, 0u);
  EXPECT_NEAR(v[0].magnitude, 1.5e-9, 1e-15);
}

TEST(Monotonicity, WithinSlackIsAccepted) {
  IterationTrace t;
  t.rows = {{0, 2.0, 1.0, 3.0, 0.0}, {1, 2.0 * (1.0 + 1e-10), 1.0, 3.0, 0.0}};
  EXPECT_TRUE(check_monotonicity(t).empty());
}

TEST(Monotonicity, InsulationSkipsEnergyRelation) {
  IterationTrace t;
  t.rows = {{0, 2.0, 1.0, 3.0, 0.0}, {1, 1.9, 1.01, 2.0, 0.0}};
  t.kind = ProblemKind::Robin;
  const auto robin = check_monotonicity(t);
  ASSERT_EQ(robin.size(), 1u);
  EXPECT_EQ(robin[0].relation, "energy nondecreasing");
  t.kind = ProblemKind::Insulation;
  EXPECT_TRUE(check_monotonicity(t).empty());
}

TEST(Monotonicity, EveryRelationCanFire) {
  IterationTrace t;
  t.kind = ProblemKind::Mixed;
  t.rows = {{0, 1.0, 1.0, 1.0, 0.0}, {1, 2.0, 0.5, 0.5, 0.0}};
  const auto v = check_monotonicity(t);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].relation, "energy nondecreasing");
  EXPECT_EQ(v[1].relation, "L2 nondecreasing");
  EXPECT_EQ(v[2].relation, "R nonincreasing");
  t.rows[1] = {1, 1.5, 1.0, 1.0, 0.0};
  const auto w = check_monotonicity(t);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].relation, "R*L2 nonincreasing");
}

TEST(UniformBound, HoldsWithOracleEigenvalue) {
  const ProblemSpec spec = robin_square(8);
  std::mt19937_64 rng(9);
  IterationConfig cfg;
  cfg.initial = InitialVector::UserSupplied;
  cfg.user_initial = random_positive(spec.dimension(), rng);
  const RunResult r = run(spec, cfg);
  const double lambda = dense_smallest_eigpair(spec.system_matrix(), spec.mass_matrix()).value;
  EXPECT_TRUE(uniform_bound_check(r.trace, lambda));
  EXPECT_FALSE(uniform_bound_check(r.trace, 2.0 * r.trace.rows.front().rayleigh));
  IterationTrace single;
  single.rows = {r.trace.rows.front()};
  EXPECT_TRUE(uniform_bound_check(single, lambda));
}

TEST(TraceCsv, HeadersAndRows) {
  const RunResult robin = run(robin_square(3), {});
  std::ostringstream a;
  write_trace_csv(robin.trace, a);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "k,rayleigh,l2_norm,energy_norm,step_residual");
  const RunResult ins = run(ProblemSpec::insulation(share(generate_unit_square(3)), 1.0), {});
  std::ostringstream b;
  write_trace_csv(ins.trace, b);
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "k,rayleigh,l2_norm,energy_norm,step_residual,profile_mass");
  std::size_t lines = 0;
  for (char c : b.str()) lines += c == '\n';
  EXPECT_EQ(lines, ins.trace.rows.size() + 1);
}
