// Experiment CLI: generate model problems, run multiprecision Schwarz
// solvers, verify convergence conditions, run preconditioned GMRES and the
// perturbation analyses, or execute whole experiment plans. Exit codes:
// 0 success, 1 invalid input, 2 partial job failures.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mpschwarz/mpschwarz.hpp"

namespace {

using namespace mpschwarz;
namespace fs = std::filesystem;

struct CommonOpts {
  int problem = 1;
  int n = 20;
  std::string method = "MS";
  std::string format = "fp64";
  std::string rounding = "mmatrix";
  std::string solve_mode = "exact";
  bool no_scaling = false;
  double theta = 0.49;
  double nu = 0.1;
  double nu_hat = 0.1;
  std::uint64_t seed = 1234;
  double tol = 1e-12;
  int max_iters = 100;
  int overlap = 1;
  int cap = kDefaultDenseCap;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_method = true) {
  cmd->add_option("--problem", o.problem, "model problem id (1..6)")
      ->check(CLI::Range(1, 6));
  cmd->add_option("--n", o.n, "interior grid points per side");
  if (with_method)
    cmd->add_option("--method", o.method, "AS | dAS | RAS | MS");
  cmd->add_option("--format", o.format,
                  "solve precision: q52,q43,bfloat16,fp16,fp32,fp64 or dec:<k>");
  cmd->add_option("--rounding", o.rounding, "mmatrix | diag | nearest");
  cmd->add_option("--solve-mode", o.solve_mode, "exact | simulated");
  cmd->add_flag("--no-scaling", o.no_scaling, "disable the two-sided rescaling");
  cmd->add_option("--theta", o.theta, "dAS damping");
  cmd->add_option("--nu", o.nu, "range headroom factor");
  cmd->add_option("--nu-hat", o.nu_hat, "right-hand-side headroom factor");
  cmd->add_option("--seed", o.seed, "rhs/initial-guess seed");
  cmd->add_option("--tol", o.tol, "relative stopping tolerance");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap");
  cmd->add_option("--overlap", o.overlap, "overlap width in grid columns per side");
  cmd->add_option("--cap", o.cap, "dense-check size cap");
  cmd->add_option("--out", o.out, "output directory");
}

RoundingKind parse_rounding(const std::string& s) {
  if (s == "mmatrix") return RoundingKind::MmatrixUp;
  if (s == "diag") return RoundingKind::DiagExact;
  if (s == "nearest") return RoundingKind::PlainNearest;
  throw CLI::ValidationError("--rounding", "must be mmatrix, diag or nearest");
}

SolveMode parse_solve_mode(const std::string& s) {
  if (s == "exact") return SolveMode::RoundedMatrixExactSolve;
  if (s == "simulated") return SolveMode::FullySimulatedSolve;
  throw CLI::ValidationError("--solve-mode", "must be exact or simulated");
}

SchwarzConfig make_config(const CommonOpts& o) {
  SchwarzConfig cfg;
  cfg.variant = variant_from_string(o.method);
  cfg.theta = o.theta;
  cfg.solve_format = FloatFormat::from_name(o.format);
  cfg.rounding = parse_rounding(o.rounding);
  cfg.solve_mode = parse_solve_mode(o.solve_mode);
  cfg.scaling_on = !o.no_scaling;
  cfg.nu = o.nu;
  cfg.nu_hat = o.nu_hat;
  cfg.max_iters = o.max_iters;
  cfg.stop_tol = o.tol;
  return cfg;
}

struct Built {
  SparseMatrix A;
  GridSpec grid;
  Partition part;
  SchwarzOperator op;
  Vector f, u0;
};

Built build(const CommonOpts& o) {
  GridSpec grid(o.n);
  SparseMatrix A = discretize(ProblemSpec::preset(o.problem), grid);
  Partition part = two_domain_partition(grid, o.overlap);
  SchwarzConfig cfg = make_config(o);
  SchwarzOperator op(A, part, cfg);
  auto [f, u0] = make_rhs_and_init(grid.total, o.seed);
  return {std::move(A), grid, std::move(part), std::move(op), std::move(f),
          std::move(u0)};
}

std::string stem(const CommonOpts& o, const std::string& kind) {
  std::string fmt = o.format;
  for (char& c : fmt)
    if (c == ':') c = '-';
  return "p" + std::to_string(o.problem) + "_n" + std::to_string(o.n) + "_" +
         o.method + "_" + fmt + "." + kind;
}

int cmd_generate(const CommonOpts& o) {
  fs::create_directories(o.out);
  GridSpec grid(o.n);
  const SparseMatrix A = discretize(ProblemSpec::preset(o.problem), grid);
  const std::string base =
      (fs::path(o.out) / ("p" + std::to_string(o.problem) + "_n" +
                          std::to_string(o.n)))
          .string();
  write_matrix_market(A, base + ".mtx");
  nlohmann::json meta;
  meta["problem"] = o.problem;
  meta["n"] = o.n;
  meta["N"] = grid.total;
  meta["h"] = grid.h;
  meta["nnz"] = A.nnz();
  meta["symmetric"] = A.is_symmetric();
  meta["m_matrix_sufficient"] =
      is_m_matrix(A, MMatrixCheckMode::Sufficient).is_m_matrix;
  meta["scheme"] = "5-point FD, harmonic-mean faces, first-order upwind advection";
  std::ofstream os(base + ".json");
  os << meta.dump(2) << "\n";
  std::cout << "wrote " << base << ".mtx and .json\n";
  return 0;
}

int cmd_solve(const CommonOpts& o, const std::vector<int>& snapshots) {
  fs::create_directories(o.out);
  Built b = build(o);
  const Vector u_true = lu_factor(b.A).solve(b.f);
  const IterationTrace tr = iterate(b.op, b.u0, b.f, &u_true, snapshots);

  const std::string trace_path = (fs::path(o.out) / stem(o, "trace.csv")).string();
  {
    std::ofstream os(trace_path);
    os << "iter,err_2norm,res_2norm\n";
    os.precision(17);
    for (std::size_t k = 0; k < tr.res_norms.size(); ++k)
      os << k << "," << tr.err_norms[k] << "," << tr.res_norms[k] << "\n";
  }
  if (!snapshots.empty())
    export_error_snapshot(tr, b.grid, snapshots,
                          (fs::path(o.out) / stem(o, "err")).string());

  nlohmann::json meta;
  meta["config"] = b.op.config().to_json();
  meta["iterate"] = tr.summary_json();
  meta["warnings"] = b.op.warnings();
  meta["overflow_events"] = b.op.overflow_event_count();
  const std::string meta_path = (fs::path(o.out) / stem(o, "meta.json")).string();
  std::ofstream os(meta_path);
  os << meta.dump(2) << "\n";

  std::cout << "iterations " << tr.iterations << ", converged " << tr.converged;
  if (tr.rho_conv) std::cout << ", rho_conv " << *tr.rho_conv;
  std::cout << "\n";
  return 0;
}

int cmd_conditions(const CommonOpts& o) {
  fs::create_directories(o.out);
  Built b = build(o);
  const ConditionReport rep = check_conditions(b.op, o.cap);
  const std::string path = (fs::path(o.out) / stem(o, "conditions.json")).string();
  std::ofstream os(path);
  os << rep.to_json().dump(2) << "\n";
  for (const auto& s : rep.subdomains)
    std::cout << "subdomain " << s.subdomain << ": norm "
              << (s.norm_condition.passed() ? "pass" : "FAIL") << " ("
              << s.norm_condition.value << "), entrywise "
              << (s.entrywise_condition.checked()
                      ? (s.entrywise_condition.passed() ? "pass" : "FAIL")
                      : "skipped")
              << ", certified " << (s.certified_m_matrix() ? "yes" : "no") << "\n";
  return 0;
}

int cmd_gmres(const CommonOpts& o) {
  fs::create_directories(o.out);
  Built b = build(o);
  GmresConfig gcfg;
  gcfg.tol = o.tol;
  gcfg.max_iters = o.max_iters;
  const GmresResult r = gmres_solve(b.A, b.op, b.f, gcfg);
  const std::string path = (fs::path(o.out) / stem(o, "gmres.csv")).string();
  std::ofstream os(path);
  os << "iter,precond_rel_res\n";
  os.precision(17);
  for (std::size_t k = 0; k < r.residual_history.size(); ++k)
    os << k << "," << r.residual_history[k] << "\n";
  std::cout << "gmres iters " << r.iters << ", converged " << r.converged
            << ", true rel residual " << residual_check(r.x, b.A, b.f) << "\n";
  return 0;
}

int cmd_perturb(const CommonOpts& o) {
  fs::create_directories(o.out);
  Built b = build(o);
  CommonOpts full = o;
  full.format = "fp64";
  full.rounding = "nearest";
  SchwarzOperator op_full(b.A, b.part, make_config(full));

  nlohmann::json meta;
  meta["config"] = b.op.config().to_json();
  if (b.op.config().variant == SchwarzVariant::MS) {
    const MsPerturbReport rep = decompose_E_ms(op_full, b.op, o.cap);
    meta["ms"] = {{"g1_norm", rep.g1_norm},
                  {"g2_norm", rep.g2_norm},
                  {"g3_norm", rep.g3_norm},
                  {"sum_agreement", rep.sum_agreement},
                  {"e_norm", two_norm_dense(rep.probed)}};
  } else {
    const AdditivePerturbReport rep = assemble_E_additive(op_full, b.op, o.cap);
    meta["additive"] = {{"e_norm", rep.e_two_norm},
                        {"epsilon", rep.epsilon},
                        {"kappa_d_col", rep.kappa},
                        {"precond_norm", rep.precond_norm},
                        {"bound", rep.bound},
                        {"bound_holds", rep.bound_holds},
                        {"epsilon_below_half", rep.epsilon_below_half},
                        {"structural_agreement", rep.agreement}};
  }

  // Linear-convergence GMRES bound: full-precision rate + perturbation terms.
  GmresConfig gcfg;
  gcfg.tol = o.tol;
  gcfg.max_iters = o.max_iters;
  const GmresResult g_full = gmres_solve(b.A, op_full, b.f, gcfg);
  const GmresResult g_mp = gmres_solve(b.A, b.op, b.f, gcfg);
  const DenseMatrix E = probe_preconditioned_matrix(b.op, o.cap) -
                        probe_preconditioned_matrix(op_full, o.cap);
  const GmresLinearBoundReport bound = check_gmres_linear_bound(
      g_full.residual_history, g_mp.residual_history,
      a_inverse_m_norm(op_full, o.cap), E.norm());
  meta["gmres_bound"] = {{"rho_fit", bound.rho_fit},
                         {"a_inv_m_norm", bound.a_inv_m_norm},
                         {"e_frobenius", bound.e_frobenius},
                         {"holds_in_linear_phase", bound.holds_in_linear_phase}};
  const std::string curve_path = (fs::path(o.out) / stem(o, "bound.csv")).string();
  {
    std::ofstream os(curve_path);
    os << "iter,actual_rel_res,bound\n";
    os.precision(17);
    for (std::size_t k = 0; k < bound.actual.size(); ++k)
      os << k << "," << bound.actual[k] << "," << bound.bound[k] << "\n";
  }
  const std::string meta_path = (fs::path(o.out) / stem(o, "perturb.json")).string();
  std::ofstream os(meta_path);
  os << meta.dump(2) << "\n";
  std::cout << meta.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiprecision Schwarz methods: experiment harness"};
  app.require_subcommand(1);

  CommonOpts o;
  std::vector<int> snapshots;

  auto* gen = app.add_subcommand("generate", "discretize a model problem");
  add_common(gen, o, false);

  auto* solve = app.add_subcommand("solve", "run a Schwarz iteration");
  add_common(solve, o);
  solve->add_option("--snapshots", snapshots, "retain error fields at iterations");

  auto* cond = app.add_subcommand("conditions", "verify convergence conditions");
  add_common(cond, o, false);

  auto* gm = app.add_subcommand("gmres", "preconditioned GMRES run");
  add_common(gm, o);

  auto* pert = app.add_subcommand("perturb", "perturbation analysis (dense, capped)");
  add_common(pert, o);
  pert->get_option("--cap")->default_val(std::to_string(kPerturbDenseCap));

  auto* plan = app.add_subcommand("plan", "run an experiment plan");
  std::string preset, plan_file, plan_out = "out";
  int workers = 0;
  plan->add_option("--preset", preset, "fig1 .. fig8");
  plan->add_option("--file", plan_file, "plan JSON file");
  plan->add_option("--out", plan_out, "output directory");
  plan->add_option("--workers", workers, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (solve->parsed()) return cmd_solve(o, snapshots);
    if (cond->parsed()) return cmd_conditions(o);
    if (gm->parsed()) return cmd_gmres(o);
    if (pert->parsed()) return cmd_perturb(o);
    if (plan->parsed()) {
      ExperimentPlan p;
      if (!preset.empty()) {
        p = ExperimentPlan::preset(preset);
      } else if (!plan_file.empty()) {
        std::ifstream is(plan_file);
        if (!is) throw std::invalid_argument("cannot open plan file: " + plan_file);
        const nlohmann::json j = nlohmann::json::parse(is);
        p = ExperimentPlan::preset(j.at("preset").get<std::string>());
        if (j.contains("sizes")) p.sizes = j["sizes"].get<std::vector<int>>();
        if (j.contains("problems")) p.problems = j["problems"].get<std::vector<int>>();
        if (j.contains("formats")) p.formats = j["formats"].get<std::vector<std::string>>();
        if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("max_iters")) p.max_iters = j["max_iters"].get<int>();
      } else {
        std::cerr << "plan: need --preset or --file\n";
        return 1;
      }
      p.out_dir = plan_out;
      p.workers = workers;
      const Manifest m = run_plan(p);
      std::cout << "manifest: " << m.path << " (" << m.jobs.size() << " jobs, "
                << m.failures << " failures)\n";
      return m.failures == 0 ? 0 : 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
