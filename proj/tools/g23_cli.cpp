// Command-line driver for the convergence study and the check suite.

#include "g23/g23.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"G23 atomistic-to-continuum coupling: convergence study and checks"};

  std::vector<std::string> methods;
  std::vector<int> K_list;
  double beta = 1.4, tol = 1e-8, step = 0.5;
  int max_iter = 50000, jobs = 1;
  std::string out = "out", config_path, reference;
  std::uint64_t seed = 0;
  bool check = false, record_wall_time = false, unit_lambda = false, one_point = false;

  auto* o_method = app.add_option("--method", methods, "atomistic, g23-p1 or g23-p2 (repeatable)")
                       ->check(CLI::IsMember({"atomistic", "g23-p1", "g23-p2"}));
  auto* o_K = app.add_option("--K", K_list, "atomistic region side length (repeatable)");
  auto* o_beta = app.add_option("--beta", beta, "mesh grading exponent in (1, 3/2)");
  auto* o_tol = app.add_option("--tol", tol, "solver tolerance on sqrt(g^T L^-1 g)");
  auto* o_iter = app.add_option("--max-iter", max_iter, "solver iteration cap");
  auto* o_step = app.add_option("--step", step, "descent step in units of the inverse Cauchy-Born modulus");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "seed for randomised checks");
  auto* o_jobs = app.add_option("--jobs", jobs, "concurrent runs (1 is deterministic)");
  auto* o_ref = app.add_option("--reference", reference, "reference file from an earlier run (default: solve at 3 K_max)");
  auto* o_wall = app.add_flag("--record-wall-time", record_wall_time, "write measured solve times into runs.csv");
  app.add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_flag("--check", check, "run the built-in check suite and exit");
  app.add_flag("--debug-unit-lambda", unit_lambda)->group("");
  app.add_flag("--debug-one-point-quadrature", one_point)->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check) {
      g23::CheckOptions opt;
      opt.seed = seed;
      opt.unit_lambda = unit_lambda;
      opt.one_point_p2 = one_point;
      const auto rep = g23::run_checks(opt);
      for (const auto& r : rep.results)
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
      std::cout << (rep.pass() ? "all checks passed" : "checks FAILED") << std::endl;
      return rep.pass() ? 0 : 1;
    }

    g23::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      cfg = g23::config_from_json(nlohmann::json::parse(in));
    }
    if (o_method->count()) {
      cfg.methods.clear();
      for (const auto& m : methods) cfg.methods.push_back(g23::parse_method(m));
    }
    if (o_K->count()) cfg.K_list = K_list;
    if (o_beta->count()) cfg.beta = beta;
    if (o_tol->count()) cfg.solver.tol = tol;
    if (o_iter->count()) cfg.solver.max_iter = max_iter;
    if (o_step->count()) cfg.solver.step = step;
    if (o_out->count() || config_path.empty()) cfg.output_dir = out;
    if (o_seed->count()) cfg.seed = seed;
    if (o_jobs->count()) cfg.jobs = jobs;
    if (o_ref->count()) cfg.reference = reference;
    if (o_wall->count()) cfg.record_wall_time = record_wall_time;
    cfg.model.unit_lambda = unit_lambda;
    cfg.model.one_point_p2 = one_point;

    const auto res = g23::run_experiment(cfg);
    if (!res.records.empty())
      std::cout << "reference K=" << res.reference_K << " objective " << res.reference_objective << '\n';
    for (const auto& r : res.records)
      std::cout << g23::format_row(r, true) << '\n';
    std::cout << res.summary.dump(2) << std::endl;
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
