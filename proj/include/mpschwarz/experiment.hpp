#pragma once

// Batch experiment runner: expands a plan over problems x sizes x methods x
// formats into independent jobs, runs them in a worker pool, and writes
// plot-ready CSV plus JSON metadata and a manifest. Jobs are keyed by a
// deterministic parameter hash; completed jobs are skipped on re-runs.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpschwarz/conditions.hpp"
#include "mpschwarz/gmres.hpp"
#include "mpschwarz/grid.hpp"
#include "mpschwarz/matrix_market.hpp"
#include "mpschwarz/pde.hpp"
#include "mpschwarz/schwarz.hpp"

namespace mpschwarz {

struct ExperimentPlan {
  std::vector<int> problems;
  std::vector<int> sizes;  // interior grid points per side
  std::vector<SchwarzVariant> methods;
  std::vector<std::string> formats;
  RoundingKind rounding = RoundingKind::MmatrixUp;
  SolveMode solve_mode = SolveMode::RoundedMatrixExactSolve;
  bool scaling_on = true;
  double theta = 0.49;
  double nu = 0.1;
  double nu_hat = 0.1;
  std::uint64_t seed = 1234;
  int max_iters = 100;
  double stop_tol = 1e-12;
  int overlap_lines = 1;
  std::string out_dir = "out";
  bool run_iterate = true;
  bool run_conditions = false;
  bool run_gmres = false;
  std::vector<int> snapshot_iters;
  int workers = 0;  // 0: hardware concurrency
  int dense_cap = kDefaultDenseCap;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["problems"] = problems;
    j["sizes"] = sizes;
    std::vector<std::string> ms;
    for (auto m : methods) ms.push_back(to_string(m));
    j["methods"] = ms;
    j["formats"] = formats;
    j["rounding"] = to_string(rounding);
    j["solve_mode"] = to_string(solve_mode);
    j["scaling_on"] = scaling_on;
    j["theta"] = theta;
    j["nu"] = nu;
    j["nu_hat"] = nu_hat;
    j["seed"] = seed;
    j["max_iters"] = max_iters;
    j["stop_tol"] = stop_tol;
    j["overlap_lines"] = overlap_lines;
    j["analyses"] = nlohmann::json{{"iterate", run_iterate},
                                   {"conditions", run_conditions},
                                   {"gmres", run_gmres},
                                   {"snapshots", snapshot_iters}};
    return j;
  }

  // The paper-style sweeps at desk scale. Sizes map to N in
  // {2500, 8100, 22500, 48400, 108900}.
  static ExperimentPlan preset(const std::string& name) {
    ExperimentPlan p;
    auto dec_formats = [] {
      std::vector<std::string> f;
      for (int d = 1; d <= 16; ++d) f.push_back("dec:" + std::to_string(d));
      return f;
    };
    const std::vector<std::string> table1 = FloatFormat::table_preset_names();
    const std::vector<SchwarzVariant> all4 = {SchwarzVariant::AS, SchwarzVariant::dAS,
                                              SchwarzVariant::RAS, SchwarzVariant::MS};
    const std::vector<SchwarzVariant> three = {SchwarzVariant::dAS, SchwarzVariant::RAS,
                                               SchwarzVariant::MS};
    if (name == "fig1") {
      p.problems = {1, 2, 3};
      p.sizes = {50};
      p.methods = all4;
      p.formats = table1;
      p.run_conditions = true;
    } else if (name == "fig2") {
      p.problems = {1, 2, 3};
      p.sizes = {50};
      p.methods = all4;
      p.formats = dec_formats();
      p.run_conditions = true;
    } else if (name == "fig3") {
      p.problems = {1};
      p.sizes = {50};
      p.methods = {SchwarzVariant::MS};
      p.formats = {"q43", "bfloat16", "fp16"};
      p.snapshot_iters = {1, 2, 3};
    } else if (name == "fig4") {
      p.problems = {1, 2, 3};
      p.sizes = {50, 90, 150, 220, 330};
      p.methods = three;
      p.formats = dec_formats();
      p.run_conditions = true;
    } else if (name == "fig5") {
      p.problems = {1, 2, 3};
      p.sizes = {50, 90, 150, 220, 330};
      p.methods = three;
      p.formats = dec_formats();
      p.run_iterate = false;
      p.run_gmres = true;
    } else if (name == "fig6") {
      p.problems = {4, 5, 6};
      p.sizes = {50};
      p.methods = three;
      p.formats = table1;
      p.rounding = RoundingKind::DiagExact;
      p.run_conditions = true;
    } else if (name == "fig7") {
      p.problems = {4, 5, 6};
      p.sizes = {50};
      p.methods = three;
      p.formats = dec_formats();
      p.rounding = RoundingKind::DiagExact;
      p.run_conditions = true;
    } else if (name == "fig8") {
      p.problems = {4, 5, 6};
      p.sizes = {50, 90, 150, 220, 330};
      p.methods = three;
      p.formats = dec_formats();
      p.rounding = RoundingKind::DiagExact;
      p.run_iterate = false;
      p.run_gmres = true;
    } else {
      throw std::invalid_argument("unknown plan preset: " + name);
    }
    return p;
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace detail

struct JobSpec {
  int problem = 0;
  int n = 0;
  SchwarzVariant method = SchwarzVariant::MS;
  std::string format;
  std::string hash;
  std::string stem;  // file-name stem

  std::string param_string(const ExperimentPlan& p) const {
    std::ostringstream os;
    os << "problem=" << problem << ";n=" << n << ";method=" << to_string(method)
       << ";format=" << format << ";rounding=" << to_string(p.rounding)
       << ";solve_mode=" << to_string(p.solve_mode) << ";scaling=" << p.scaling_on
       << ";theta=" << p.theta << ";nu=" << p.nu << ";nu_hat=" << p.nu_hat
       << ";seed=" << p.seed << ";max_iters=" << p.max_iters
       << ";stop_tol=" << p.stop_tol << ";overlap=" << p.overlap_lines;
    return os.str();
  }
};

inline std::vector<JobSpec> expand_plan(const ExperimentPlan& plan) {
  std::vector<JobSpec> jobs;
  for (int prob : plan.problems)
    for (int n : plan.sizes)
      for (auto m : plan.methods)
        for (const auto& f : plan.formats) {
          JobSpec j;
          j.problem = prob;
          j.n = n;
          j.method = m;
          j.format = f;
          j.hash = detail::hex16(detail::fnv1a(j.param_string(plan)));
          std::string fmt_file = f;
          for (char& c : fmt_file)
            if (c == ':') c = '-';
          j.stem = "p" + std::to_string(prob) + "_n" + std::to_string(n) + "_" +
                   to_string(m) + "_" + fmt_file + "_" + j.hash.substr(0, 8);
          jobs.push_back(std::move(j));
        }
  return jobs;
}

// Grid CSVs of retained error snapshots, one file per requested iteration,
// row-major: entry (i, j) is the error at grid point (j h, i h).
inline std::vector<std::string> export_error_snapshot(
    const IterationTrace& trace, const GridSpec& grid,
    const std::vector<int>& iters, const std::string& path_prefix) {
  std::vector<std::string> files;
  for (int it : iters) {
    auto found = trace.snapshots.find(it);
    if (found == trace.snapshots.end())
      throw std::invalid_argument("export_error_snapshot: iteration " +
                                  std::to_string(it) + " was not retained");
    const Vector& e = found->second;
    if (e.size() != grid.total)
      throw std::invalid_argument("export_error_snapshot: size mismatch");
    const std::string path = path_prefix + ".snap" + std::to_string(it) + ".csv";
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(17);
    for (int iy = 0; iy < grid.n; ++iy) {
      for (int ix = 0; ix < grid.n; ++ix) {
        os << e[grid.index(ix, iy)];
        os << (ix + 1 == grid.n ? '\n' : ',');
      }
    }
    files.push_back(path);
  }
  return files;
}

struct Manifest {
  nlohmann::json jobs = nlohmann::json::array();
  int failures = 0;
  std::string path;
};

namespace detail {

struct ConditionsCacheKey {
  int problem, n;
  std::string format;
  bool operator<(const ConditionsCacheKey& o) const {
    return std::tie(problem, n, format) < std::tie(o.problem, o.n, o.format);
  }
};

inline void write_trace_csv(const IterationTrace& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "iter,err_2norm,res_2norm\n";
  os.precision(17);
  for (std::size_t k = 0; k < tr.res_norms.size(); ++k) {
    os << k << ",";
    if (k < tr.err_norms.size()) os << tr.err_norms[k];
    os << "," << tr.res_norms[k] << "\n";
  }
}

inline void write_residual_csv(const GmresResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "iter,precond_rel_res\n";
  os.precision(17);
  for (std::size_t k = 0; k < r.residual_history.size(); ++k)
    os << k << "," << r.residual_history[k] << "\n";
}

}  // namespace detail

inline Manifest run_plan(const ExperimentPlan& plan) {
  namespace fs = std::filesystem;
  fs::create_directories(plan.out_dir);
  const std::vector<JobSpec> jobs = expand_plan(plan);

  std::mutex mu;  // manifest, caches
  Manifest manifest;
  manifest.path = (fs::path(plan.out_dir) / "manifest.json").string();

  // Problems/partitions shared across jobs; conditions shared across methods.
  std::map<std::pair<int, int>, std::shared_ptr<const SparseMatrix>> matrix_cache;
  std::map<detail::ConditionsCacheKey, nlohmann::json> conditions_cache;

  auto get_matrix = [&](int problem, int n) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(problem, n);
    auto it = matrix_cache.find(key);
    if (it != matrix_cache.end()) return it->second;
    auto A = std::make_shared<const SparseMatrix>(
        discretize(ProblemSpec::preset(problem), GridSpec(n)));
    matrix_cache[key] = A;
    return A;
  };

  std::atomic<std::size_t> next{0};
  std::vector<nlohmann::json> job_records(jobs.size());

  auto run_one = [&](const JobSpec& job) {
    nlohmann::json rec;
    rec["hash"] = job.hash;
    rec["params"] = job.param_string(plan);
    std::vector<std::string> files;
    const fs::path dir(plan.out_dir);
    const std::string meta_path = (dir / (job.stem + ".meta.json")).string();

    // Idempotent re-runs: a completed metadata file with a matching hash
    // means the job's outputs are already on disk.
    {
      std::ifstream existing(meta_path);
      if (existing) {
        try {
          nlohmann::json old = nlohmann::json::parse(existing);
          if (old.at("hash") == job.hash && old.at("status") == "ok") {
            rec["status"] = "skipped (already complete)";
            rec["files"] = old.at("files");
            return rec;
          }
        } catch (...) {
        }
      }
    }

    try {
      auto A = get_matrix(job.problem, job.n);
      const GridSpec grid(job.n);
      const Partition part = two_domain_partition(grid, plan.overlap_lines);
      SchwarzConfig cfg;
      cfg.variant = job.method;
      cfg.theta = plan.theta;
      cfg.solve_format = FloatFormat::from_name(job.format);
      cfg.rounding = plan.rounding;
      cfg.solve_mode = plan.solve_mode;
      cfg.scaling_on = plan.scaling_on;
      cfg.nu = plan.nu;
      cfg.nu_hat = plan.nu_hat;
      cfg.max_iters = plan.max_iters;
      cfg.stop_tol = plan.stop_tol;
      const SchwarzOperator op(*A, part, cfg);

      nlohmann::json meta;
      meta["hash"] = job.hash;
      meta["params"] = job.param_string(plan);
      meta["config"] = cfg.to_json();
      meta["warnings"] = op.warnings();
      meta["overflow_events"] = op.overflow_event_count();
      meta["partition"] = {{"p", part.p},
                           {"q", part.color_count},
                           {"overlap_lines", plan.overlap_lines}};

      auto [f, u0] = make_rhs_and_init(grid.total, plan.seed);

      if (plan.run_iterate) {
        const Vector u_true = lu_factor(*A).solve(f);
        const IterationTrace tr =
            iterate(op, u0, f, &u_true, plan.snapshot_iters);
        const std::string trace_path = (dir / (job.stem + ".trace.csv")).string();
        detail::write_trace_csv(tr, trace_path);
        files.push_back(trace_path);
        meta["iterate"] = tr.summary_json();
        if (!plan.snapshot_iters.empty()) {
          auto snaps = export_error_snapshot(tr, grid, plan.snapshot_iters,
                                             (dir / job.stem).string());
          files.insert(files.end(), snaps.begin(), snaps.end());
        }
      }

      if (plan.run_gmres) {
        GmresConfig gcfg;
        gcfg.tol = plan.stop_tol;
        gcfg.max_iters = plan.max_iters;
        const GmresResult gr = gmres_solve(*A, op, f, gcfg);
        const std::string res_path = (dir / (job.stem + ".gmres.csv")).string();
        detail::write_residual_csv(gr, res_path);
        files.push_back(res_path);
        meta["gmres"] = {{"iters", gr.iters},
                         {"converged", gr.converged},
                         {"true_rel_residual", residual_check(gr.x, *A, f)}};
      }

      if (plan.run_conditions) {
        detail::ConditionsCacheKey key{job.problem, job.n, job.format};
        nlohmann::json cond;
        {
          std::lock_guard<std::mutex> lock(mu);
          auto it = conditions_cache.find(key);
          if (it != conditions_cache.end()) cond = it->second;
        }
        if (cond.is_null()) {
          cond = check_conditions(op, plan.dense_cap).to_json();
          std::lock_guard<std::mutex> lock(mu);
          conditions_cache[key] = cond;
        }
        meta["conditions"] = cond;
      }

      meta["status"] = "ok";
      meta["files"] = files;
      std::ofstream os(meta_path);
      os << meta.dump(2) << "\n";
      files.push_back(meta_path);
      rec["status"] = "ok";
      rec["files"] = files;
    } catch (const std::exception& e) {
      rec["status"] = "failed";
      rec["error"] = e.what();
      rec["files"] = files;
    }
    return rec;
  };

  const int nworkers =
      plan.workers > 0
          ? plan.workers
          : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<std::size_t>(nworkers, jobs.size()); ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= jobs.size()) return;
        job_records[k] = run_one(jobs[k]);
      }
    });
  for (auto& t : pool) t.join();

  for (auto& rec : job_records) {
    if (rec.value("status", "failed") == "failed") ++manifest.failures;
    manifest.jobs.push_back(rec);
  }

  // Plan-level summary tables, in deterministic job order.
  {
    std::ofstream rho((fs::path(plan.out_dir) / "rho_conv.csv").string());
    rho << "problem,n,method,format,rho_conv,iterations,converged,diverged\n";
    rho.precision(17);
    std::ofstream git((fs::path(plan.out_dir) / "gmres_iters.csv").string());
    git << "problem,n,method,format,iters,converged\n";
    std::ofstream mark((fs::path(plan.out_dir) / "condition_markers.csv").string());
    mark << "problem,n,format,subdomain,norm_value,norm_passed,entrywise_passed,"
            "weak_regular_passed,spd_pd_passed,spd_eig_passed,certified\n";
    mark.precision(17);
    std::set<std::string> marker_seen;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto& job = jobs[k];
      const std::string meta_path =
          (fs::path(plan.out_dir) / (job.stem + ".meta.json")).string();
      std::ifstream is(meta_path);
      if (!is) continue;
      nlohmann::json meta;
      try {
        meta = nlohmann::json::parse(is);
      } catch (...) {
        continue;
      }
      if (meta.contains("iterate")) {
        const auto& it = meta["iterate"];
        rho << job.problem << "," << job.n << "," << to_string(job.method) << ","
            << job.format << ",";
        if (it.contains("rho_conv")) rho << it["rho_conv"].get<double>();
        rho << "," << it.value("iterations", 0) << ","
            << it.value("converged", false) << "," << it.value("diverged", false)
            << "\n";
      }
      if (meta.contains("gmres")) {
        git << job.problem << "," << job.n << "," << to_string(job.method) << ","
            << job.format << "," << meta["gmres"].value("iters", 0) << ","
            << meta["gmres"].value("converged", false) << "\n";
      }
      if (meta.contains("conditions")) {
        const std::string mk = std::to_string(job.problem) + "|" +
                               std::to_string(job.n) + "|" + job.format;
        if (marker_seen.insert(mk).second) {
          for (const auto& s : meta["conditions"]) {
            auto passed = [&](const char* field) {
              return s[field]["state"] == "passed";
            };
            mark << job.problem << "," << job.n << "," << job.format << ","
                 << s.value("subdomain", 0) << ","
                 << s["norm_condition"].value("value", 0.0) << ","
                 << passed("norm_condition") << "," << passed("entrywise_condition")
                 << "," << passed("weak_regular") << "," << passed("spd_pd") << ","
                 << passed("spd_eig") << ","
                 << (passed("norm_condition") && passed("entrywise_condition"))
                 << "\n";
          }
        }
      }
    }
  }

  std::ofstream os(manifest.path);
  nlohmann::json m;
  m["plan"] = plan.to_json();
  m["version"] = "mpschwarz 0.1.0";
  m["jobs"] = manifest.jobs;
  m["failures"] = manifest.failures;
  m["summary_files"] = {"rho_conv.csv", "gmres_iters.csv", "condition_markers.csv"};
  os << m.dump(2) << "\n";
  return manifest;
}

}  // namespace mpschwarz
