#include "invit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "invit/assembly.hpp"
#include "invit/baselines.hpp"
#include "invit/error.hpp"
#include "invit/format.hpp"
#include "invit/iteration.hpp"
#include "invit/linalg.hpp"
#include "invit/mesh.hpp"

namespace fs = std::filesystem;

namespace invit {
namespace {

struct MeshSource {
  std::string path;
  std::string shape;
  int n = 0;
  double r0 = 0.5;
};

struct SolveParams {
  std::string problem;
  MeshSource mesh;
  std::optional<double> h;
  std::string h_file;
  std::optional<double> mass;
  double rtol = 1e-10;
  std::size_t max_steps = 500;
  double cg_tol = 1e-12;
  std::size_t cg_max_iter = 0;
  std::string init;
  std::string init_file;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string absolute_path(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::shared_ptr<const Mesh> load_mesh(const MeshSource& src) {
  if (!src.path.empty() && !src.shape.empty()) throw InvalidInput("give either --mesh or --shape, not both");
  if (!src.path.empty()) return std::make_shared<const Mesh>(read_mesh(fs::path(src.path)));
  if (src.shape.empty()) throw InvalidInput("a mesh is required: --mesh PATH or --shape square|disk|annulus");
  if (src.shape == "square") return std::make_shared<const Mesh>(generate_unit_square(src.n));
  if (src.shape == "disk") return std::make_shared<const Mesh>(generate_disk(src.n));
  if (src.shape == "annulus") return std::make_shared<const Mesh>(generate_annulus(src.r0, src.n));
  throw InvalidInput("unknown shape '" + src.shape + "'");
}

BoundaryProfile read_h_file(const Mesh& mesh, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open h file " + path);
  const std::vector<Index> boundary = mesh.boundary_vertices(BoundaryTag::RobinAll);
  std::map<Index, double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(trim(line));
    std::string a, b, extra;
    if (!(fields >> a)) continue;
    if (!(fields >> b) || (fields >> extra)) throw ParseError(line_no, "expected 'vertex value'");
    const auto v = parse_number<Index>(a);
    const auto h = parse_number<double>(b);
    if (!v || !h) throw ParseError(line_no, "expected 'vertex value'");
    if (!std::binary_search(boundary.begin(), boundary.end(), *v)) {
      throw ParseError(line_no, "vertex " + a + " is not on the Robin boundary");
    }
    if (!values.emplace(*v, *h).second) throw ParseError(line_no, "vertex " + a + " listed twice");
  }
  BoundaryProfile profile;
  profile.vertices = boundary;
  for (Index v : boundary) {
    const auto it = values.find(v);
    if (it == values.end()) throw InvalidInput("h file misses boundary vertex " + std::to_string(v));
    profile.values.push_back(it->second);
  }
  return profile;
}

Vector read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open vector file " + path);
  Vector out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto v = parse_number<double>(t);
    if (!v) throw ParseError(line_no, "expected one number per line");
    out.push_back(*v);
  }
  return out;
}

void write_vector_file(const Vector& v, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  for (double x : v) out << format_g17(x) << '\n';
  if (!out) throw InvalidInput("failed writing " + path.string());
}

ProblemSpec make_linear_problem(ProblemKind kind, std::shared_ptr<const Mesh> mesh, std::optional<double> h,
                                const std::string& h_file) {
  if (kind == ProblemKind::Mixed) {
    if (h || !h_file.empty()) throw InvalidInput("mixed problem takes no --h or --h-file");
    return ProblemSpec::mixed(std::move(mesh));
  }
  if (h.has_value() == !h_file.empty()) throw InvalidInput("robin problem needs exactly one of --h or --h-file");
  if (!mesh->has_tag(BoundaryTag::RobinAll)) throw InvalidInput("robin problem needs a RobinAll boundary");
  BoundaryProfile profile = h ? BoundaryProfile::constant(*mesh, *h) : read_h_file(*mesh, h_file);
  return ProblemSpec::robin(std::move(mesh), std::move(profile));
}

ProblemSpec make_problem(const SolveParams& p) {
  const auto kind = parse_problem_kind(p.problem);
  if (!kind) throw InvalidInput("unknown problem '" + p.problem + "'");
  auto mesh = load_mesh(p.mesh);
  if (*kind == ProblemKind::Insulation) {
    if (p.h || !p.h_file.empty()) throw InvalidInput("insulation problem takes --mass, not --h");
    if (!p.mass) throw InvalidInput("insulation problem needs --mass");
    return ProblemSpec::insulation(std::move(mesh), *p.mass);
  }
  if (p.mass) throw InvalidInput("--mass applies only to the insulation problem");
  return make_linear_problem(*kind, std::move(mesh), p.h, p.h_file);
}

IterationConfig make_config(const SolveParams& p) {
  IterationConfig cfg;
  cfg.rtol = p.rtol;
  cfg.max_steps = p.max_steps;
  cfg.solver.tolerance = p.cg_tol;
  cfg.solver.max_iterations = p.cg_max_iter;
  if (!p.init_file.empty()) {
    if (!p.init.empty()) throw InvalidInput("give either --init or --init-file, not both");
    cfg.initial = InitialVector::UserSupplied;
    cfg.user_initial = read_vector_file(p.init_file);
  } else if (p.init == "one") {
    cfg.initial = InitialVector::ConstantOne;
  } else if (p.init == "affine") {
    cfg.initial = InitialVector::AffinePositive;
  } else if (!p.init.empty()) {
    throw InvalidInput("unknown --init '" + p.init + "'");
  }
  cfg.validate();
  return cfg;
}

void write_manifest(const SolveParams& p, const RunResult& r, double seconds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << "tool_version=" << kToolVersion << '\n';
  out << "problem=" << p.problem << '\n';
  if (!p.mesh.path.empty()) {
    out << "mesh=" << p.mesh.path << '\n';
  } else {
    out << "shape=" << p.mesh.shape << '\n' << "n=" << p.mesh.n << '\n';
    if (p.mesh.shape == "annulus") out << "r0=" << format_g17(p.mesh.r0) << '\n';
  }
  if (p.h) out << "h=" << format_g17(*p.h) << '\n';
  if (!p.h_file.empty()) out << "h_file=" << p.h_file << '\n';
  if (p.mass) out << "mass=" << format_g17(*p.mass) << '\n';
  out << "rtol=" << format_g17(p.rtol) << '\n';
  out << "max_steps=" << p.max_steps << '\n';
  out << "cg_tol=" << format_g17(p.cg_tol) << '\n';
  out << "cg_max_iter=" << p.cg_max_iter << '\n';
  if (!p.init_file.empty()) {
    out << "init_file=" << p.init_file << '\n';
  } else {
    out << "init=" << (p.init.empty() ? (p.problem == "mixed" ? "affine" : "one") : p.init) << '\n';
  }
  out << "steps=" << r.trace.steps << '\n';
  out << "converged=" << (r.trace.converged ? "true" : "false") << '\n';
  out << "lambda=" << format_g17(r.lambda) << '\n';
  out << "wall_clock_seconds=" << format_g17(seconds) << '\n';
  if (!out) throw InvalidInput("failed writing " + path.string());
}

SolveParams read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open manifest " + path);
  SolveParams p;
  std::string line;
  std::size_t line_no = 0;
  const auto number = [&](const std::string& v) {
    const auto x = parse_number<double>(v);
    if (!x) throw ParseError(line_no, "bad number '" + v + "'");
    return *x;
  };
  const auto count = [&](const std::string& v) {
    const auto x = parse_number<std::size_t>(v);
    if (!x) throw ParseError(line_no, "bad count '" + v + "'");
    return *x;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    const std::string key = t.substr(0, eq);
    const std::string value = t.substr(eq + 1);
    if (key == "problem") {
      p.problem = value;
    } else if (key == "mesh") {
      p.mesh.path = value;
    } else if (key == "shape") {
      p.mesh.shape = value;
    } else if (key == "n") {
      p.mesh.n = static_cast<int>(count(value));
    } else if (key == "r0") {
      p.mesh.r0 = number(value);
    } else if (key == "h") {
      p.h = number(value);
    } else if (key == "h_file") {
      p.h_file = value;
    } else if (key == "mass") {
      p.mass = number(value);
    } else if (key == "rtol") {
      p.rtol = number(value);
    } else if (key == "max_steps") {
      p.max_steps = count(value);
    } else if (key == "cg_tol") {
      p.cg_tol = number(value);
    } else if (key == "cg_max_iter") {
      p.cg_max_iter = count(value);
    } else if (key == "init") {
      p.init = value;
    } else if (key == "init_file") {
      p.init_file = value;
    } else if (key != "tool_version" && key != "steps" && key != "converged" && key != "lambda" &&
               key != "wall_clock_seconds") {
      throw ParseError(line_no, "unknown manifest key '" + key + "'");
    }
  }
  if (p.problem.empty()) throw InvalidInput("manifest " + path + " names no problem");
  return p;
}

int do_solve(SolveParams p, const std::string& out_dir, std::ostream& out) {
  p.mesh.path = absolute_path(p.mesh.path);
  p.h_file = absolute_path(p.h_file);
  p.init_file = absolute_path(p.init_file);
  const ProblemSpec spec = make_problem(p);
  const IterationConfig cfg = make_config(p);

  const auto start = std::chrono::steady_clock::now();
  const RunResult result = run(spec, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream trace(dir / "trace.csv");
    if (!trace) throw InvalidInput("cannot open " + (dir / "trace.csv").string() + " for writing");
    write_trace_csv(result.trace, trace);
  }
  write_vector_file(result.u, dir / "solution.txt");
  write_manifest(p, result, seconds, dir / "manifest.txt");

  out << "lambda " << format_g17(result.lambda) << '\n';
  out << "steps " << result.trace.steps << '\n';
  out << "converged " << (result.trace.converged ? "true" : "false") << '\n';
  return result.trace.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inverse-iteration eigensolver for Robin, mixed and optimal-insulation Laplacian problems", "invit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate a structured mesh file");
  MeshSource mesh_src;
  std::string mesh_out;
  mesh_cmd->add_option("--shape", mesh_src.shape, "square, disk or annulus")
      ->required()
      ->check(CLI::IsMember({"square", "disk", "annulus"}));
  mesh_cmd->add_option("--n", mesh_src.n, "Refinement level")->required();
  mesh_cmd->add_option("--r0", mesh_src.r0, "Annulus inner radius")->capture_default_str();
  mesh_cmd->add_option("--out", mesh_out, "Output mesh file")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Run an inverse iteration and write trace, solution and manifest");
  SolveParams sp;
  std::string solve_out;
  std::string manifest_in;
  std::vector<CLI::Option*> param_opts;
  const auto add_mesh_options = [](CLI::App* cmd, MeshSource& src, std::vector<CLI::Option*>* record) {
    std::vector<CLI::Option*> opts{
        cmd->add_option("--mesh", src.path, "Mesh file"),
        cmd->add_option("--shape", src.shape, "Generate the mesh: square, disk or annulus")
            ->check(CLI::IsMember({"square", "disk", "annulus"})),
        cmd->add_option("--n", src.n, "Refinement level for --shape"),
        cmd->add_option("--r0", src.r0, "Annulus inner radius for --shape annulus"),
    };
    if (record) record->insert(record->end(), opts.begin(), opts.end());
  };
  param_opts.push_back(solve_cmd->add_option("--problem", sp.problem, "robin, mixed or insulation")
                           ->check(CLI::IsMember({"robin", "mixed", "insulation"})));
  add_mesh_options(solve_cmd, sp.mesh, &param_opts);
  param_opts.push_back(solve_cmd->add_option("--h", sp.h, "Constant Robin h"));
  param_opts.push_back(solve_cmd->add_option("--h-file", sp.h_file, "Robin h per boundary vertex: 'vertex value' lines"));
  param_opts.push_back(solve_cmd->add_option("--mass", sp.mass, "Insulation mass m"));
  param_opts.push_back(solve_cmd->add_option("--rtol", sp.rtol, "Relative Rayleigh decrement for stopping"));
  param_opts.push_back(solve_cmd->add_option("--max-steps", sp.max_steps, "Maximum number of steps"));
  param_opts.push_back(solve_cmd->add_option("--cg-tol", sp.cg_tol, "Conjugate gradient relative tolerance"));
  param_opts.push_back(
      solve_cmd->add_option("--cg-max-iter", sp.cg_max_iter, "Conjugate gradient iteration cap (0: 10 x dimension)"));
  param_opts.push_back(solve_cmd->add_option("--init", sp.init, "Initial vector: one or affine")
                           ->check(CLI::IsMember({"one", "affine"})));
  param_opts.push_back(solve_cmd->add_option("--init-file", sp.init_file, "Initial vector, one value per line"));
  solve_cmd->add_option("--manifest", manifest_in, "Re-run with the parameters recorded in a manifest");
  solve_cmd->add_option("--out", solve_out, "Output directory")->required();

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Smallest discrete eigenpair by dense linear algebra");
  std::string oracle_problem;
  MeshSource oracle_mesh;
  std::optional<double> oracle_h;
  std::string oracle_h_file;
  std::string oracle_out;
  std::string oracle_method = "tridiagonal";
  oracle_cmd->add_option("--problem", oracle_problem, "robin, mixed or insulation")
      ->required()
      ->check(CLI::IsMember({"robin", "mixed", "insulation"}));
  add_mesh_options(oracle_cmd, oracle_mesh, nullptr);
  oracle_cmd->add_option("--h", oracle_h, "Constant Robin h");
  oracle_cmd->add_option("--h-file", oracle_h_file, "Robin h per boundary vertex");
  oracle_cmd->add_option("--method", oracle_method, "tridiagonal or jacobi")
      ->check(CLI::IsMember({"tridiagonal", "jacobi"}));
  oracle_cmd->add_option("--out", oracle_out, "Eigenvector output file");

  // baseline
  auto* baseline_cmd = app.add_subcommand("baseline", "Analytic or 1D reference eigenvalue");
  std::string baseline_case;
  std::optional<double> baseline_h;
  std::optional<double> baseline_r0;
  baseline_cmd->add_option("--case", baseline_case, "robin-disk, robin-square or mixed-annulus")
      ->required()
      ->check(CLI::IsMember({"robin-disk", "robin-square", "mixed-annulus"}));
  baseline_cmd->add_option("--h", baseline_h, "Constant Robin h");
  baseline_cmd->add_option("--r0", baseline_r0, "Annulus inner radius");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (mesh_cmd->parsed()) {
      const Mesh mesh = *load_mesh(mesh_src);
      write_mesh(mesh, fs::path(mesh_out));
      out << "vertices " << mesh.num_vertices() << '\n' << "triangles " << mesh.triangles.size() << '\n';
      return kExitOk;
    }
    if (solve_cmd->parsed()) {
      if (!manifest_in.empty()) {
        for (const auto* opt : param_opts) {
          if (opt->count() > 0) throw InvalidInput("--manifest cannot be combined with " + opt->get_name());
        }
        return do_solve(read_manifest(manifest_in), solve_out, out);
      }
      if (sp.problem.empty()) throw InvalidInput("--problem is required");
      return do_solve(sp, solve_out, out);
    }
    if (oracle_cmd->parsed()) {
      const auto kind = *parse_problem_kind(oracle_problem);
      if (kind == ProblemKind::Insulation) throw InvalidInput("no linear oracle for insulation");
      const ProblemSpec spec = make_linear_problem(kind, load_mesh(oracle_mesh), oracle_h, oracle_h_file);
      const auto method = oracle_method == "jacobi" ? DenseEigenMethod::Jacobi : DenseEigenMethod::Tridiagonal;
      const EigenPair pair =
          kind == ProblemKind::Robin
              ? dense_smallest_eigpair(spec.system_matrix(), spec.mass_matrix(), nullptr, method)
              : dense_smallest_eigpair(spec.stiffness(), spec.mass_matrix(), &spec.constraint(), method);
      if (!oracle_out.empty()) write_vector_file(pair.vector, fs::path(oracle_out));
      out << format_g17(pair.value) << '\n';
      return kExitOk;
    }
    if (baseline_cmd->parsed()) {
      double value = 0.0;
      if (baseline_case == "mixed-annulus") {
        if (!baseline_r0) throw InvalidInput("mixed-annulus needs --r0");
        value = baselines::mixed_annulus_lambda(*baseline_r0);
      } else {
        if (!baseline_h) throw InvalidInput(baseline_case + " needs --h");
        value = baseline_case == "robin-disk" ? baselines::robin_disk_lambda(*baseline_h)
                                              : baselines::robin_square_lambda(*baseline_h);
      }
      out << format_g17(value) << '\n';
      return kExitOk;
    }
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DegenerateProfile& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace invit
