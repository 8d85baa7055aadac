#include "invit/iteration.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "invit/error.hpp"
#include "invit/format.hpp"

namespace invit {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Robin:
      return "robin";
    case ProblemKind::Mixed:
      return "mixed";
    case ProblemKind::Insulation:
      return "insulation";
  }
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view text) {
  if (text == "robin") return ProblemKind::Robin;
  if (text == "mixed") return ProblemKind::Mixed;
  if (text == "insulation") return ProblemKind::Insulation;
  return std::nullopt;
}

struct ProblemSpec::Data {
  ProblemKind kind = ProblemKind::Robin;
  std::shared_ptr<const Mesh> mesh;
  SymSparseMatrix k;
  SymSparseMatrix m;
  SymSparseMatrix b;
  SymSparseMatrix system;
  BoundaryProfile profile;
  DirichletConstraint constraint;
  double mass = 0.0;
};

namespace {

void require_mesh(const std::shared_ptr<const Mesh>& mesh) {
  if (!mesh) throw InvalidInput("problem needs a mesh");
  if (mesh->num_vertices() == 0) throw InvalidInput("mesh has no vertices");
}

void require_robin_boundary(const Mesh& mesh, ProblemKind kind) {
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != BoundaryTag::RobinAll) {
      throw InvalidInput(std::string(to_string(kind)) + " problem needs every boundary edge tagged " +
                         std::string(to_string(BoundaryTag::RobinAll)) + ", found " +
                         std::string(to_string(e.tag)));
    }
  }
  if (mesh.boundary_edges.empty()) throw InvalidInput("mesh has no boundary edges");
}

}  // namespace

ProblemSpec ProblemSpec::robin(std::shared_ptr<const Mesh> mesh, BoundaryProfile h) {
  require_mesh(mesh);
  require_robin_boundary(*mesh, ProblemKind::Robin);
  if (h.scope != BoundaryTag::RobinAll) throw InvalidInput("Robin profile must cover the RobinAll boundary");
  if (h.vertices != mesh->boundary_vertices(BoundaryTag::RobinAll)) {
    throw InvalidInput("Robin profile does not match the mesh boundary vertices");
  }
  h.require_positive();
  auto data = std::make_shared<Data>();
  data->kind = ProblemKind::Robin;
  data->k = assemble_stiffness(*mesh);
  data->m = assemble_mass(*mesh);
  data->b = assemble_boundary_mass(*mesh, h);
  data->system = data->k + data->b;
  data->profile = std::move(h);
  data->mesh = std::move(mesh);
  return ProblemSpec(std::move(data));
}

ProblemSpec ProblemSpec::mixed(std::shared_ptr<const Mesh> mesh) {
  require_mesh(mesh);
  if (!mesh->has_tag(BoundaryTag::DirichletInner) || !mesh->has_tag(BoundaryTag::NeumannOuter)) {
    throw InvalidInput("mixed problem needs both DirichletInner and NeumannOuter boundary tags");
  }
  if (mesh->has_tag(BoundaryTag::RobinAll)) throw InvalidInput("mixed problem mesh must not carry RobinAll edges");
  auto data = std::make_shared<Data>();
  data->kind = ProblemKind::Mixed;
  data->k = assemble_stiffness(*mesh);
  data->m = assemble_mass(*mesh);
  data->constraint = DirichletConstraint::from_mesh(*mesh);
  data->system = apply_constraint(data->k, data->constraint);
  data->mesh = std::move(mesh);
  return ProblemSpec(std::move(data));
}

ProblemSpec ProblemSpec::insulation(std::shared_ptr<const Mesh> mesh, double mass) {
  require_mesh(mesh);
  require_robin_boundary(*mesh, ProblemKind::Insulation);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw InvalidInput("insulation mass must be positive, got " + format_g17(mass));
  }
  auto data = std::make_shared<Data>();
  data->kind = ProblemKind::Insulation;
  data->k = assemble_stiffness(*mesh);
  data->m = assemble_mass(*mesh);
  data->mass = mass;
  data->mesh = std::move(mesh);
  return ProblemSpec(std::move(data));
}

ProblemKind ProblemSpec::kind() const noexcept { return data_->kind; }
const Mesh& ProblemSpec::mesh() const noexcept { return *data_->mesh; }
std::size_t ProblemSpec::dimension() const noexcept { return data_->mesh->num_vertices(); }
const SymSparseMatrix& ProblemSpec::stiffness() const noexcept { return data_->k; }
const SymSparseMatrix& ProblemSpec::mass_matrix() const noexcept { return data_->m; }

const SymSparseMatrix& ProblemSpec::boundary_mass() const {
  if (data_->kind != ProblemKind::Robin) throw InvalidInput("boundary mass is fixed only for Robin problems");
  return data_->b;
}

const SymSparseMatrix& ProblemSpec::system_matrix() const {
  if (data_->kind == ProblemKind::Insulation) {
    throw InvalidInput("insulation system matrix depends on the current profile");
  }
  return data_->system;
}

const BoundaryProfile& ProblemSpec::profile() const {
  if (data_->kind != ProblemKind::Robin) throw InvalidInput("profile is fixed only for Robin problems");
  return data_->profile;
}

const DirichletConstraint& ProblemSpec::constraint() const noexcept { return data_->constraint; }

double ProblemSpec::insulation_mass() const {
  if (data_->kind != ProblemKind::Insulation) throw InvalidInput("mass is defined only for insulation problems");
  return data_->mass;
}

namespace {

void require_size(std::span<const double> u, std::size_t n) {
  if (u.size() != n) {
    throw InvalidInput("vector has " + std::to_string(u.size()) + " entries, expected " + std::to_string(n));
  }
}

double mass_norm_sq(const SymSparseMatrix& m, std::span<const double> u) {
  const double q = m.quadratic_form(u);
  if (!(q > 0.0)) throw InvalidInput("zero vector has no Rayleigh quotient");
  return q;
}

double insulation_quotient(const Mesh& mesh, const SymSparseMatrix& k, const SymSparseMatrix& m, double mass,
                           std::span<const double> u) {
  const double denom = mass_norm_sq(m, u);
  const double l1 = boundary_l1(mesh, u);
  return (k.quadratic_form(u) + l1 * l1 / mass) / denom;
}

double stiffness_quotient(const SymSparseMatrix& k, const SymSparseMatrix& m, std::span<const double> u) {
  const double denom = mass_norm_sq(m, u);
  return k.quadratic_form(u) / denom;
}

Vector mixed_step_constrained(std::span<const double> u, const SymSparseMatrix& k, const SymSparseMatrix& k_tilde,
                              const SymSparseMatrix& m, const DirichletConstraint& constraint,
                              const SolverConfig& cfg) {
  const double r = stiffness_quotient(k, m, u);
  if (!(r > 0.0)) throw InvalidInput("mixed step needs a positive Rayleigh quotient; the iteration would collapse");
  Vector rhs = m * u;
  for (double& v : rhs) v *= r;
  constrain_rhs(rhs, constraint);
  Vector next = solve_spd(k_tilde, rhs, cfg);
  constrain_rhs(next, constraint);
  return next;
}

}  // namespace

double robin_quotient(const SymSparseMatrix& k, const SymSparseMatrix& m, const SymSparseMatrix& b,
                      std::span<const double> u) {
  require_size(u, m.dimension());
  const double denom = mass_norm_sq(m, u);
  return (k.quadratic_form(u) + b.quadratic_form(u)) / denom;
}

double rayleigh(const ProblemSpec& spec, std::span<const double> u) {
  require_size(u, spec.dimension());
  switch (spec.kind()) {
    case ProblemKind::Robin:
      return robin_quotient(spec.stiffness(), spec.mass_matrix(), spec.boundary_mass(), u);
    case ProblemKind::Mixed:
      return stiffness_quotient(spec.stiffness(), spec.mass_matrix(), u);
    case ProblemKind::Insulation:
      return insulation_quotient(spec.mesh(), spec.stiffness(), spec.mass_matrix(), spec.insulation_mass(), u);
  }
  return 0.0;
}

Vector robin_step(std::span<const double> u, const SymSparseMatrix& k, const SymSparseMatrix& m,
                  const SymSparseMatrix& b, const SolverConfig& cfg) {
  const double r = robin_quotient(k, m, b, u);
  Vector rhs = m * u;
  for (double& v : rhs) v *= r;
  return solve_spd(k + b, rhs, cfg);
}

Vector mixed_step(std::span<const double> u, const SymSparseMatrix& k, const SymSparseMatrix& m,
                  const DirichletConstraint& constraint, const SolverConfig& cfg) {
  require_size(u, m.dimension());
  return mixed_step_constrained(u, k, apply_constraint(k, constraint), m, constraint, cfg);
}

InsulationState InsulationState::initial(const Mesh& mesh, Vector u0, double mass) {
  require_size(u0, mesh.num_vertices());
  BoundaryProfile h = optimal_profile(mesh, u0, mass);
  return {std::move(u0), std::move(h)};
}

InsulationState insulation_step(const InsulationState& state, const SymSparseMatrix& k, const SymSparseMatrix& m,
                                const Mesh& mesh, double mass, const SolverConfig& cfg) {
  require_size(state.u, mesh.num_vertices());
  for (std::size_t i = 0; i < state.h.values.size(); ++i) {
    if (!(state.h.values[i] > 0.0)) {
      throw DegenerateProfile("insulation profile vanishes at boundary vertex " +
                              std::to_string(state.h.vertices[i]));
    }
  }
  const double r = insulation_quotient(mesh, k, m, mass, state.u);
  Vector rhs = m * state.u;
  for (double& v : rhs) v *= r;
  Vector next = solve_spd(k + assemble_boundary_mass(mesh, state.h), rhs, cfg);
  BoundaryProfile h = optimal_profile(mesh, next, mass);
  return {std::move(next), std::move(h)};
}

void IterationConfig::validate() const {
  if (!(rtol > 0.0 && rtol < 1.0)) throw InvalidInput("rtol must lie in (0,1), got " + format_g17(rtol));
  if (max_steps < 1) throw InvalidInput("max steps must be at least 1");
  solver.validate();
}

Vector initial_vector(const ProblemSpec& spec, const IterationConfig& cfg) {
  const Mesh& mesh = spec.mesh();
  const std::size_t n = spec.dimension();
  const InitialVector choice = cfg.initial.value_or(spec.kind() == ProblemKind::Mixed
                                                         ? InitialVector::AffinePositive
                                                         : InitialVector::ConstantOne);
  Vector u;
  switch (choice) {
    case InitialVector::ConstantOne:
      u.assign(n, 1.0);
      break;
    case InitialVector::AffinePositive: {
      const std::vector<Index> anchor = spec.kind() == ProblemKind::Mixed
                                            ? spec.constraint().vertices
                                            : mesh.boundary_vertices();
      Point c{0.0, 0.0};
      for (Index v : anchor) {
        c.x += mesh.vertices[v].x;
        c.y += mesh.vertices[v].y;
      }
      c.x /= static_cast<double>(anchor.size());
      c.y /= static_cast<double>(anchor.size());
      Vector d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = std::hypot(mesh.vertices[i].x - c.x, mesh.vertices[i].y - c.y);
      const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
      const double dmin = *lo;
      const double span = *hi - *lo;
      u.resize(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = span > 0.0 ? 1.0 + (d[i] - dmin) / span : 1.0;
      break;
    }
    case InitialVector::UserSupplied:
      u = cfg.user_initial;
      require_size(u, n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] > 0.0) || !std::isfinite(u[i])) {
          throw InvalidInput("initial vector must be strictly positive; entry " + std::to_string(i) + " is " +
                             format_g17(u[i]));
        }
      }
      break;
  }
  if (spec.kind() == ProblemKind::Mixed) {
    constrain_rhs(u, spec.constraint());
    if (!(spec.stiffness().quadratic_form(u) > 0.0)) {
      throw InvalidInput("initial vector has zero Rayleigh quotient on the constrained space");
    }
  }
  return u;
}

namespace {

double residual_norm(const SymSparseMatrix& a, const SymSparseMatrix& m, std::span<const double> u, double r,
                     const DirichletConstraint* constraint) {
  Vector au = a * u;
  Vector mu = m * u;
  if (constraint) {
    constrain_rhs(au, *constraint);
    constrain_rhs(mu, *constraint);
  }
  const double denom = norm2(mu);
  if (!(denom > 0.0)) throw InvalidInput("zero vector has no residual");
  axpy(-r, mu, au);
  return norm2(au) / denom;
}

}  // namespace

double fixed_point_residual(const ProblemSpec& spec, std::span<const double> u) {
  require_size(u, spec.dimension());
  const double r = rayleigh(spec, u);
  switch (spec.kind()) {
    case ProblemKind::Robin:
      return residual_norm(spec.system_matrix(), spec.mass_matrix(), u, r, nullptr);
    case ProblemKind::Mixed:
      return residual_norm(spec.system_matrix(), spec.mass_matrix(), u, r, &spec.constraint());
    case ProblemKind::Insulation: {
      const BoundaryProfile h = optimal_profile(spec.mesh(), u, spec.insulation_mass());
      return residual_norm(spec.stiffness() + assemble_boundary_mass(spec.mesh(), h), spec.mass_matrix(), u, r,
                           nullptr);
    }
  }
  return 0.0;
}

namespace {

TraceRow make_row(const ProblemSpec& spec, std::size_t k, std::span<const double> u, const BoundaryProfile* h) {
  TraceRow row;
  row.k = k;
  row.rayleigh = rayleigh(spec, u);
  row.l2_norm = std::sqrt(spec.mass_matrix().quadratic_form(u));
  switch (spec.kind()) {
    case ProblemKind::Robin:
      row.energy_norm = std::sqrt(spec.system_matrix().quadratic_form(u));
      break;
    case ProblemKind::Mixed:
      row.energy_norm = std::sqrt(spec.stiffness().quadratic_form(u));
      break;
    case ProblemKind::Insulation: {
      const SymSparseMatrix b = assemble_boundary_mass(spec.mesh(), *h);
      const double kq = spec.stiffness().quadratic_form(u);
      const double bq = b.quadratic_form(u);
      row.energy_norm = std::sqrt(kq + bq);
      row.profile_mass = profile_mass(spec.mesh(), *h);
      row.robin_with_profile = (kq + bq) / (row.l2_norm * row.l2_norm);
      break;
    }
  }
  row.step_residual = fixed_point_residual(spec, u);
  return row;
}

}  // namespace

RunResult run(const ProblemSpec& spec, const IterationConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  RunResult result;
  result.trace.kind = spec.kind();
  auto& rows = result.trace.rows;

  Vector u = initial_vector(spec, cfg);
  std::optional<InsulationState> state;
  if (spec.kind() == ProblemKind::Insulation) {
    state = InsulationState::initial(spec.mesh(), u, spec.insulation_mass());
  }
  const BoundaryProfile* h = state ? &state->h : nullptr;
  rows.push_back(make_row(spec, 0, u, h));
  if (observer) observer(0, u, h);

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    switch (spec.kind()) {
      case ProblemKind::Robin:
        u = solve_spd(spec.system_matrix(),
                      scaled(spec.mass_matrix() * u, rows.back().rayleigh), cfg.solver);
        break;
      case ProblemKind::Mixed:
        u = mixed_step_constrained(u, spec.stiffness(), spec.system_matrix(), spec.mass_matrix(),
                                   spec.constraint(), cfg.solver);
        break;
      case ProblemKind::Insulation:
        state = insulation_step(*state, spec.stiffness(), spec.mass_matrix(), spec.mesh(),
                                spec.insulation_mass(), cfg.solver);
        u = state->u;
        h = &state->h;
        break;
    }
    const double previous = rows.back().rayleigh;
    rows.push_back(make_row(spec, step, u, h));
    if (observer) observer(step, u, h);
    result.trace.steps = step;
    const double current = rows.back().rayleigh;
    if (std::abs(previous - current) <= cfg.rtol * current) {
      result.trace.converged = true;
      break;
    }
  }
  result.trace.lambda = rows.back().rayleigh;
  result.lambda = result.trace.lambda;
  result.u = std::move(u);
  return result;
}

std::vector<Violation> check_monotonicity(const IterationTrace& trace, double slack) {
  std::vector<Violation> out;
  const auto& rows = trace.rows;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const TraceRow& a = rows[k];
    const TraceRow& b = rows[k + 1];
    // Relative excess over the allowed side; positive means violated.
    const auto upper = [&](const char* name, double next, double prev) {
      const double excess = (next - prev) / std::abs(prev);
      if (excess > slack) out.push_back({name, k, excess});
    };
    upper("R*L2 nonincreasing", b.rayleigh * b.l2_norm, a.rayleigh * a.l2_norm);
    if (trace.kind != ProblemKind::Insulation) upper("energy nondecreasing", -b.energy_norm, -a.energy_norm);
    upper("L2 nondecreasing", -b.l2_norm, -a.l2_norm);
    upper("R nonincreasing", b.rayleigh, a.rayleigh);
  }
  return out;
}

bool uniform_bound_check(const IterationTrace& trace, double lambda_lower, double slack) {
  if (trace.rows.empty()) return true;
  const TraceRow& first = trace.rows.front();
  const double ratio = first.rayleigh / lambda_lower;
  const double l2_bound = ratio * first.l2_norm;
  const double energy_bound = ratio * ratio * first.rayleigh * first.l2_norm * first.l2_norm;
  for (const TraceRow& row : trace.rows) {
    if (row.l2_norm > l2_bound * (1.0 + slack)) return false;
    if (row.energy_norm * row.energy_norm > energy_bound * (1.0 + slack)) return false;
  }
  return true;
}

void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  const bool insulation = trace.kind == ProblemKind::Insulation;
  out << "k,rayleigh,l2_norm,energy_norm,step_residual";
  if (insulation) out << ",profile_mass";
  out << '\n';
  for (const TraceRow& row : trace.rows) {
    out << row.k << ',' << format_g17(row.rayleigh) << ',' << format_g17(row.l2_norm) << ','
        << format_g17(row.energy_norm) << ',' << format_g17(row.step_residual);
    if (insulation) out << ',' << format_g17(row.profile_mass);
    out << '\n';
  }
}

}  // namespace invit
