#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "invit/assembly.hpp"
#include "invit/linalg.hpp"
#include "invit/mesh.hpp"
#include "invit/sparse.hpp"

namespace invit {

enum class ProblemKind { Robin, Mixed, Insulation };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view text);

/// One of the three eigenproblems on a mesh, with its assembled operators.
///
/// Cheap to copy: the mesh and matrices are shared and immutable.
class ProblemSpec {
 public:
  /// Robin condition u + h du/dn = 0 on the whole (RobinAll) boundary.
  static ProblemSpec robin(std::shared_ptr<const Mesh> mesh, BoundaryProfile h);
  /// u = 0 on DirichletInner, du/dn = 0 on NeumannOuter; both tags required.
  static ProblemSpec mixed(std::shared_ptr<const Mesh> mesh);
  /// Optimal insulation with total mass m > 0 on a RobinAll boundary.
  static ProblemSpec insulation(std::shared_ptr<const Mesh> mesh, double mass);

  ProblemKind kind() const noexcept;
  const Mesh& mesh() const noexcept;
  std::size_t dimension() const noexcept;

  const SymSparseMatrix& stiffness() const noexcept;
  const SymSparseMatrix& mass_matrix() const noexcept;
  /// Robin only: B_h.
  const SymSparseMatrix& boundary_mass() const;
  /// Robin: K + B_h. Mixed: K with the Dirichlet rows/columns eliminated.
  const SymSparseMatrix& system_matrix() const;
  /// Robin only.
  const BoundaryProfile& profile() const;
  /// Mixed only (empty otherwise).
  const DirichletConstraint& constraint() const noexcept;
  /// Insulation only.
  double insulation_mass() const;

 private:
  struct Data;
  explicit ProblemSpec(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// Rayleigh quotient of the problem's functional:
/// Robin (u'Ku + u'Bu)/u'Mu; Mixed u'Ku/u'Mu; Insulation
/// (u'Ku + boundary_l1(u)^2/m)/u'Mu. InvalidInput for u = 0.
double rayleigh(const ProblemSpec& spec, std::span<const double> u);

/// Robin quotient R(u, h) for explicitly given K, M, B_h.
double robin_quotient(const SymSparseMatrix& k, const SymSparseMatrix& m, const SymSparseMatrix& b,
                      std::span<const double> u);

/// One Robin step: solves (K + B) u_next = R(u) M u.
Vector robin_step(std::span<const double> u, const SymSparseMatrix& k, const SymSparseMatrix& m,
                  const SymSparseMatrix& b, const SolverConfig& cfg = {});

/// One mixed step with R(u) = u'Ku/u'Mu: solves the constrained system
/// K~ u_next = R(u) P M u, where P zeroes the Dirichlet entries. The result
/// vanishes on Gamma_D exactly. InvalidInput when R(u) = 0.
Vector mixed_step(std::span<const double> u, const SymSparseMatrix& k, const SymSparseMatrix& m,
                  const DirichletConstraint& constraint, const SolverConfig& cfg = {});

/// Iterate and profile of the insulation scheme.
struct InsulationState {
  Vector u;
  BoundaryProfile h;

  /// u0 with its optimal profile h0 = m|u0| / boundary_l1(u0).
  static InsulationState initial(const Mesh& mesh, Vector u0, double mass);
};

/// One insulation step: solves (K + B_{h_k}) u_next = R_m(u_k) M u_k, then
/// h_next = m|u_next| / boundary_l1(u_next). DegenerateProfile when the
/// profile is not strictly positive or the new iterate has no boundary trace.
InsulationState insulation_step(const InsulationState& state, const SymSparseMatrix& k,
                                const SymSparseMatrix& m, const Mesh& mesh, double mass,
                                const SolverConfig& cfg = {});

enum class InitialVector { ConstantOne, AffinePositive, UserSupplied };

struct IterationConfig {
  double rtol = 1e-10;
  std::size_t max_steps = 500;
  /// Unset: constant one for Robin/Insulation, affine-positive for Mixed.
  std::optional<InitialVector> initial;
  Vector user_initial;
  SolverConfig solver;

  void validate() const;
};

/// Starting vector for a run. Strictly positive everywhere, except that for
/// Mixed the Dirichlet entries are zeroed so u0 lies in the constrained
/// space; R(u0) > 0 is then required.
Vector initial_vector(const ProblemSpec& spec, const IterationConfig& cfg);

struct TraceRow {
  std::size_t k = 0;
  double rayleigh = 0.0;
  double l2_norm = 0.0;
  /// sqrt(u'(K+B)u) for Robin, sqrt(u'Ku) for Mixed, sqrt(u'(K+B_{h_k})u) for Insulation.
  double energy_norm = 0.0;
  double step_residual = 0.0;
  /// Insulation only: trapezoidal mass of h_k and R(u_k, h_k).
  double profile_mass = std::numeric_limits<double>::quiet_NaN();
  double robin_with_profile = std::numeric_limits<double>::quiet_NaN();
};

struct IterationTrace {
  ProblemKind kind = ProblemKind::Robin;
  std::vector<TraceRow> rows;
  double lambda = 0.0;
  bool converged = false;
  std::size_t steps = 0;
};

struct RunResult {
  double lambda = 0.0;
  Vector u;
  IterationTrace trace;
};

/// Called with every iterate u_k (k = 0 first); h_k is non-null for Insulation.
using IterateObserver = std::function<void(std::size_t k, const Vector& u, const BoundaryProfile* h)>;

/// Runs the inverse iteration without normalisation until
/// |R_k - R_{k+1}| <= rtol * R_{k+1} or max_steps. Non-convergence is
/// reported in the trace, not thrown.
RunResult run(const ProblemSpec& spec, const IterationConfig& cfg, const IterateObserver& observer = {});

/// ||A(u) u - R(u) M u|| / ||M u||, with A(u) the problem's operator (for
/// Insulation built from h(u) = m|u|/boundary_l1(u)). For Mixed, the
/// Dirichlet rows are dropped from both norms.
double fixed_point_residual(const ProblemSpec& spec, std::span<const double> u);

struct Violation {
  std::string relation;
  std::size_t step = 0;  // index k of the pair (k, k+1)
  double magnitude = 0.0;
};

inline constexpr double kMonotonicitySlack = 1e-9;

/// Checks, for every consecutive pair of trace rows, the relations
///   "R*L2 nonincreasing", "energy nondecreasing", "L2 nondecreasing",
///   "R nonincreasing"
/// within a relative slack. The energy relation is skipped for Insulation.
std::vector<Violation> check_monotonicity(const IterationTrace& trace, double slack = kMonotonicitySlack);

/// True iff every row satisfies ||u_k|| <= (R_0/lambda) ||u_0|| and
/// energy_k^2 <= (R_0^3/lambda^2) ||u_0||^2 within the slack.
bool uniform_bound_check(const IterationTrace& trace, double lambda_lower, double slack = kMonotonicitySlack);

/// CSV with header k,rayleigh,l2_norm,energy_norm,step_residual and, for
/// Insulation, profile_mass. Numbers use 17 significant digits.
void write_trace_csv(const IterationTrace& trace, std::ostream& out);

}  // namespace invit
