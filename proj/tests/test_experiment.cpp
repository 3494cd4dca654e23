#include "g23/experiment.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace g23;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("g23_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.K_list = {3, 2, 4};
  c.output_dir = out;
  return c;
}

}  // namespace

TEST(Experiment, EmptyKListWritesHeaderOnly) {
  TempDir t("empty");
  ExperimentConfig c;
  c.output_dir = t.path;
  const auto res = run_experiment(c);
  EXPECT_TRUE(res.records.empty());
  EXPECT_EQ(slurp(t.path / "runs.csv"), std::string(kRunsHeader) + "\n");
  EXPECT_EQ(std::string(kRunsHeader), "method,K,N,dofs,natoms,err_h1,err_energy,iterations,wall_seconds,converged");
  EXPECT_TRUE(res.summary["g23-p2"]["slope_h1_vs_natoms"].is_null());
}

TEST(Experiment, SmallStudyOutputs) {
  TempDir t("small");
  const auto res = run_experiment(small_config(t.path));
  ASSERT_EQ(res.records.size(), 6u);
  EXPECT_EQ(res.reference_K, 12);
  // Row order: methods in the given order, K ascending.
  EXPECT_EQ(res.records[0].method, Method::G23P1);
  EXPECT_EQ(res.records[0].K, 2);
  EXPECT_EQ(res.records[5].method, Method::G23P2);
  EXPECT_EQ(res.records[5].K, 4);
  for (const auto& r : res.records) {
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.err_h1, 0.0);
    EXPECT_EQ(r.natoms, atomistic_site_count(r.K));
    EXPECT_EQ(r.N, static_cast<int>(std::ceil(std::pow(r.K, 2.5) - 1e-9)));
  }
  const auto csv = read_runs_csv(t.path / "runs.csv");
  ASSERT_EQ(csv.size(), res.records.size());
  for (std::size_t k = 0; k < csv.size(); ++k) {
    EXPECT_EQ(csv[k].method, res.records[k].method);
    EXPECT_EQ(csv[k].dofs, res.records[k].dofs);
    EXPECT_EQ(csv[k].err_h1, res.records[k].err_h1);
    EXPECT_EQ(csv[k].err_energy, res.records[k].err_energy);
    EXPECT_EQ(csv[k].iterations, res.records[k].iterations);
    EXPECT_EQ(csv[k].wall_seconds, 0.0);
  }
  const auto summary = nlohmann::json::parse(slurp(t.path / "summary.json"));
  for (const char* m : {"g23-p1", "g23-p2"}) {
    ASSERT_TRUE(summary.contains(m));
    for (const char* k : {"slope_h1_vs_natoms", "slope_h1_vs_dofs", "slope_E_vs_natoms", "slope_E_vs_dofs"}) {
      EXPECT_TRUE(summary[m][k].is_number()) << m << " " << k;
    }
  }
  for (int K : {2, 3, 4}) {
    const auto mesh = nlohmann::json::parse(slurp(t.path / ("mesh_K" + std::to_string(K) + ".json")));
    EXPECT_TRUE(mesh.contains("nodes"));
    EXPECT_TRUE(mesh.contains("elements"));
    EXPECT_TRUE(fs::exists(t.path / ("decomposition_K" + std::to_string(K) + ".json")));
  }
  EXPECT_TRUE(fs::exists(t.path / "reference_K12.json"));
  EXPECT_FALSE(fs::exists(t.path / "runs.csv.tmp"));
}

TEST(Experiment, DeterministicAcrossRunsAndJobs) {
  TempDir a("det_a"), b("det_b");
  run_experiment(small_config(a.path));
  ExperimentConfig cb = small_config(b.path);
  cb.jobs = 2;
  run_experiment(cb);
  EXPECT_EQ(slurp(a.path / "runs.csv"), slurp(b.path / "runs.csv"));
  EXPECT_EQ(slurp(a.path / "summary.json"), slurp(b.path / "summary.json"));
  // Rerun in place: the cached reference is reused and the rows are equal.
  const auto first = slurp(a.path / "runs.csv");
  run_experiment(small_config(a.path));
  EXPECT_EQ(slurp(a.path / "runs.csv"), first);
}

TEST(Experiment, ExplicitReferenceFile) {
  TempDir a("ref_a"), b("ref_b");
  run_experiment(small_config(a.path));
  ExperimentConfig c = small_config(b.path);
  c.reference = (a.path / "reference_K12.json").string();
  const auto res = run_experiment(c);
  EXPECT_EQ(res.reference_K, 12);
  EXPECT_EQ(slurp(a.path / "runs.csv"), slurp(b.path / "runs.csv"));
  EXPECT_FALSE(fs::exists(b.path / "reference_K12.json"));
}

TEST(Experiment, ReferenceRoundTrip) {
  TempDir t("roundtrip");
  const Solution s = solve_method(Method::G23P2, 3, 1.4, SolverConfig{});
  save_reference(s, t.path / "r.json", 1e-8);
  const Solution l = load_reference(t.path / "r.json");
  EXPECT_EQ(l.method, Method::G23P2);
  EXPECT_EQ(l.K, 3);
  EXPECT_EQ(l.full, s.full);
  EXPECT_EQ(l.report.objective, s.report.objective);
  EXPECT_EQ(h1_error(l.field(), s.field()), 0.0);
}

TEST(Experiment, AtomisticMethodRuns) {
  const Solution s = solve_method(Method::Atomistic, 2, 1.4, SolverConfig{});
  EXPECT_TRUE(s.report.converged);
  EXPECT_EQ(s.mesh->N, 6);
  EXPECT_LT(s.report.objective, 0.0);
}

TEST(Config, NormalizeAndValidate) {
  ExperimentConfig c;
  c.K_list = {8, 4, 8, 6};
  c.methods = {Method::G23P2, Method::G23P1, Method::G23P2};
  c.normalize();
  EXPECT_EQ(c.K_list, (std::vector<int>{4, 6, 8}));
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::G23P2, Method::G23P1}));
  EXPECT_EQ(c.reference_K(), 24);
  for (double beta : {1.0, 1.5, 0.5}) {
    ExperimentConfig bad;
    bad.beta = beta;
    EXPECT_THROW(bad.normalize(), std::invalid_argument) << beta;
  }
  ExperimentConfig small;
  small.K_list = {1};
  EXPECT_THROW(small.normalize(), std::invalid_argument);
  ExperimentConfig jobs;
  jobs.jobs = 0;
  EXPECT_THROW(jobs.normalize(), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  ExperimentConfig c;
  c.K_list = {4, 8};
  c.beta = 1.3;
  c.methods = {Method::G23P2};
  c.solver.tol = 1e-9;
  c.jobs = 3;
  const ExperimentConfig r = config_from_json(to_json(c));
  EXPECT_EQ(r.K_list, c.K_list);
  EXPECT_EQ(r.beta, c.beta);
  EXPECT_EQ(r.methods, c.methods);
  EXPECT_EQ(r.solver.tol, c.solver.tol);
  EXPECT_EQ(r.jobs, 3);
  EXPECT_THROW(config_from_json(nlohmann::json{{"Klist", {4}}}), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"methods", {"fem"}}}), std::invalid_argument);
}

TEST(Csv, FormatAndParse) {
  RunRecord r;
  r.method = Method::G23P1;
  r.K = 4;
  r.N = 32;
  r.dofs = 100;
  r.natoms = 61;
  r.err_h1 = 0.1;
  r.err_energy = 1.0 / 3.0;
  r.iterations = 7;
  r.wall_seconds = 1.25;
  r.converged = true;
  EXPECT_EQ(format_row(r, false), "g23-p1,4,32,100,61,0.10000000000000001,0.33333333333333331,7,0.000000,true");
  EXPECT_EQ(format_row(r, true).substr(0, 6), "g23-p1");
  TempDir t("csv");
  {
    std::ofstream out(t.path / "runs.csv");
    out << kRunsHeader << '\n' << format_row(r, true) << '\n';
  }
  const auto rows = read_runs_csv(t.path / "runs.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].err_energy, r.err_energy);
  EXPECT_EQ(rows[0].wall_seconds, 1.25);
  {
    std::ofstream out(t.path / "bad.csv");
    out << "method,K\n";
  }
  EXPECT_THROW(read_runs_csv(t.path / "bad.csv"), std::runtime_error);
}
