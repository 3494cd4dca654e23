#pragma once

// Convergence-study driver: solves the reference problem, runs every
// (method, K) pair, measures errors and writes runs.csv, summary.json,
// timings.json and the mesh/decomposition dumps.

#include "g23/analysis.hpp"
#include "g23/dofs.hpp"
#include "g23/geometry.hpp"
#include "g23/mesh.hpp"
#include "g23/model.hpp"
#include "g23/solver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace g23 {

namespace fs = std::filesystem;

struct ExperimentConfig {
  std::vector<Method> methods{Method::G23P1, Method::G23P2};
  std::vector<int> K_list;
  double beta = 1.4;
  SolverConfig solver;
  /// "auto3K" solves P2-G23 at 3 max(K_list); anything else is the path of a
  /// reference file written by an earlier run.
  std::string reference = "auto3K";
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Write measured solve times into runs.csv. Off by default so that the CSV
  /// is reproducible byte for byte; times always go to timings.json.
  bool record_wall_time = false;
  bool dump_meshes = true;
  /// Debug knobs forwarded to the coupled model.
  ModelOptions model;

  /// Sorts and de-duplicates K_list and checks ranges.
  void normalize() {
    std::sort(K_list.begin(), K_list.end());
    K_list.erase(std::unique(K_list.begin(), K_list.end()), K_list.end());
    if (!(beta > 1.0 && beta < 1.5)) throw std::invalid_argument("beta must lie in (1, 3/2)");
    for (int K : K_list)
      if (K < 2) throw std::invalid_argument("every K must be >= 2, got " + std::to_string(K));
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    solver.validate();
    std::vector<Method> unique;
    for (Method m : methods)
      if (std::find(unique.begin(), unique.end(), m) == unique.end()) unique.push_back(m);
    methods = unique;
  }

  int reference_K() const { return K_list.empty() ? 0 : 3 * K_list.back(); }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"methods", methods},        {"K_list", c.K_list},
          {"beta", c.beta},            {"tol", c.solver.tol},
          {"max_iter", c.solver.max_iter}, {"step", c.solver.step},
          {"reference", c.reference},  {"output_dir", c.output_dir.string()},
          {"seed", c.seed},            {"jobs", c.jobs},
          {"record_wall_time", c.record_wall_time}};
}

/// Reads a flat JSON object; absent keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> known{"methods", "K_list", "beta", "tol", "max_iter", "step",
                                              "reference", "output_dir", "seed", "jobs", "record_wall_time"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown config key '" + key + "'");
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (j.contains("K_list")) c.K_list = j["K_list"].get<std::vector<int>>();
  if (j.contains("beta")) c.beta = j["beta"].get<double>();
  if (j.contains("tol")) c.solver.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) c.solver.max_iter = j["max_iter"].get<int>();
  if (j.contains("step")) c.solver.step = j["step"].get<double>();
  if (j.contains("reference")) c.reference = j["reference"].get<std::string>();
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
  if (j.contains("record_wall_time")) c.record_wall_time = j["record_wall_time"].get<bool>();
  return c;
}

/// A converged (or abandoned) minimisation together with its discretisation.
struct Solution {
  Method method = Method::G23P2;
  int K = 0;
  double beta = 0.0;
  std::unique_ptr<Mesh> mesh;
  std::unique_ptr<DofMap> dofs;
  Eigen::VectorXd full;
  SolveReport report;
  double setup_seconds = 0.0;

  Field field() const { return Field(*mesh, *dofs, full); }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::unique_ptr<Mesh> method_mesh(Method method, int K, double beta) {
  switch (method) {
    case Method::Atomistic: return std::make_unique<Mesh>(build_lattice_mesh(K));
    case Method::G23P1: return std::make_unique<Mesh>(build_graded_mesh(K, beta, Order::P1));
    case Method::G23P2: return std::make_unique<Mesh>(build_graded_mesh(K, beta, Order::P2));
  }
  throw std::logic_error("unreachable");
}

template <class Model>
void run_solver(Solution& s, const Model& model, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig c = cfg;
  c.record_trace = false;
  const double modulus = c.modulus > 0.0 ? c.modulus : linear_modulus(model.potential());
  const LaplacianPreconditioner L(model.mesh(), model.dofs());
  auto [u, rep] = minimize(model, L, Eigen::VectorXd::Zero(model.size()), c, modulus);
  s.full = model.expand(u);
  s.report = rep;
  s.report.wall_seconds = seconds_since(t0);
}

}  // namespace detail

/// Builds the discretisation of `method` at K and minimises from u = 0.
inline Solution solve_method(Method method, int K, double beta, const SolverConfig& cfg,
                             const ModelOptions& opt = {}) {
  Solution s;
  s.method = method;
  s.K = K;
  s.beta = beta;
  const auto t0 = std::chrono::steady_clock::now();
  s.mesh = detail::method_mesh(method, K, beta);
  s.dofs = std::make_unique<DofMap>(enumerate_dofs(*s.mesh));
  if (method == Method::Atomistic) {
    const auto model = make_atomistic_model(*s.mesh, *s.dofs, ToyEam{}, opt);
    s.setup_seconds = detail::seconds_since(t0);
    detail::run_solver(s, model, cfg);
  } else {
    const auto model = make_g23_model(*s.mesh, *s.dofs, decompose(K), ToyEam{}, opt);
    s.setup_seconds = detail::seconds_since(t0);
    detail::run_solver(s, model, cfg);
  }
  return s;
}

/// Reference file: discretisation parameters, the final objective and the
/// full dof vector. The mesh is rebuilt from (K, beta).
inline void save_reference(const Solution& s, const fs::path& path, double tol) {
  nlohmann::json j{{"method", to_string(s.method)},
                   {"K", s.K},
                   {"beta", s.beta},
                   {"tol", tol},
                   {"objective", s.report.objective},
                   {"converged", s.report.converged},
                   {"iterations", s.report.iterations},
                   {"n_dofs", s.dofs->n_dofs},
                   {"values", std::vector<double>(s.full.data(), s.full.data() + s.full.size())}};
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump();
  }
  fs::rename(tmp, path);
}

inline Solution load_reference(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read reference file " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  Solution s;
  s.method = parse_method(j.at("method").get<std::string>());
  s.K = j.at("K").get<int>();
  s.beta = j.at("beta").get<double>();
  s.mesh = detail::method_mesh(s.method, s.K, s.beta);
  s.dofs = std::make_unique<DofMap>(enumerate_dofs(*s.mesh));
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != s.dofs->n_dofs)
    throw std::runtime_error("reference file " + path.string() + " does not match its rebuilt mesh");
  s.full = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  s.report.objective = j.at("objective").get<double>();
  s.report.converged = j.at("converged").get<bool>();
  s.report.iterations = j.at("iterations").get<int>();
  return s;
}

inline const char* kRunsHeader = "method,K,N,dofs,natoms,err_h1,err_energy,iterations,wall_seconds,converged";

inline std::string format_row(const RunRecord& r, bool with_time) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%.17g,%.17g,%d,%.6f,%s", to_string(r.method), r.K, r.N, r.dofs,
                r.natoms, r.err_h1, r.err_energy, r.iterations, with_time ? r.wall_seconds : 0.0,
                r.converged ? "true" : "false");
  return buf;
}

/// Slopes per method, or null where fewer than three converged rows exist.
inline nlohmann::json summarize(const std::vector<RunRecord>& records, const std::vector<Method>& methods) {
  nlohmann::json out = nlohmann::json::object();
  for (Method m : methods) {
    std::vector<RunRecord> rows;
    for (const RunRecord& r : records)
      if (r.method == m && r.converged) rows.push_back(r);
    auto fit = [&](Axis x, ErrorKind y) -> nlohmann::json {
      try {
        return slope_fit(rows, x, y);
      } catch (const std::invalid_argument&) {
        return nullptr;
      }
    };
    out[to_string(m)] = {{"slope_h1_vs_natoms", fit(Axis::Natoms, ErrorKind::H1)},
                         {"slope_h1_vs_dofs", fit(Axis::Dofs, ErrorKind::H1)},
                         {"slope_E_vs_natoms", fit(Axis::Natoms, ErrorKind::Energy)},
                         {"slope_E_vs_dofs", fit(Axis::Dofs, ErrorKind::Energy)}};
  }
  return out;
}

struct ExperimentResult {
  std::vector<RunRecord> records;
  nlohmann::json summary;
  double reference_objective = 0.0;
  int reference_K = 0;
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

/// Appends rows in task order as they complete; the file is renamed into
/// place once every row is written.
class RowWriter {
 public:
  RowWriter(fs::path path, std::size_t n, bool with_time)
      : path_(std::move(path)), tmp_(path_.string() + ".tmp"), rows_(n), with_time_(with_time) {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + tmp_.string());
    out_ << kRunsHeader << '\n';
    out_.flush();
  }

  void put(std::size_t k, const RunRecord& r) {
    std::lock_guard lock(mu_);
    rows_[k] = r;
    while (next_ < rows_.size() && rows_[next_]) {
      out_ << format_row(*rows_[next_], with_time_) << '\n';
      ++next_;
    }
    out_.flush();
  }

  void commit() {
    std::lock_guard lock(mu_);
    out_.close();
    fs::rename(tmp_, path_);
  }

 private:
  fs::path path_, tmp_;
  std::ofstream out_;
  std::vector<std::optional<RunRecord>> rows_;
  std::size_t next_ = 0;
  bool with_time_;
  std::mutex mu_;
};

}  // namespace detail

inline ExperimentResult run_experiment(ExperimentConfig cfg) {
  cfg.normalize();
  fs::create_directories(cfg.output_dir);
  ExperimentResult result;
  nlohmann::json timings{{"runs", nlohmann::json::array()}};

  struct Task {
    Method method;
    int K;
  };
  std::vector<Task> tasks;
  for (Method m : cfg.methods)
    for (int K : cfg.K_list) tasks.push_back({m, K});

  if (cfg.dump_meshes) {
    for (int K : cfg.K_list) {
      detail::write_text(cfg.output_dir / ("mesh_K" + std::to_string(K) + ".json"),
                         to_json(build_graded_mesh(K, cfg.beta, Order::P2)).dump());
      detail::write_text(cfg.output_dir / ("decomposition_K" + std::to_string(K) + ".json"),
                         to_json(decompose(K)).dump());
    }
  }

  detail::RowWriter writer(cfg.output_dir / "runs.csv", tasks.size(), cfg.record_wall_time);
  if (tasks.empty()) {
    writer.commit();
    result.summary = summarize({}, cfg.methods);
    detail::write_text(cfg.output_dir / "summary.json", result.summary.dump(2) + "\n");
    detail::write_text(cfg.output_dir / "timings.json", timings.dump(2) + "\n");
    return result;
  }

  // Reference first.
  Solution ref;
  const auto t_ref = std::chrono::steady_clock::now();
  if (cfg.reference == "auto3K") {
    const int K_ref = cfg.reference_K();
    const fs::path cache = cfg.output_dir / ("reference_K" + std::to_string(K_ref) + ".json");
    bool loaded = false;
    if (fs::exists(cache)) {
      std::ifstream in(cache);
      const auto head = nlohmann::json::parse(in, nullptr, false);
      if (!head.is_discarded() && head.value("K", -1) == K_ref && head.value("beta", 0.0) == cfg.beta &&
          head.value("tol", 0.0) == cfg.solver.tol && head.value("method", "") == std::string("g23-p2")) {
        ref = load_reference(cache);
        loaded = true;
      }
    }
    if (!loaded) {
      ref = solve_method(Method::G23P2, K_ref, cfg.beta, cfg.solver);
      save_reference(ref, cache, cfg.solver.tol);
    }
  } else {
    ref = load_reference(cfg.reference);
  }
  timings["reference"] = {{"K", ref.K}, {"seconds", detail::seconds_since(t_ref)},
                          {"converged", ref.report.converged}};
  result.reference_objective = ref.report.objective;
  result.reference_K = ref.K;
  const Field ref_field = ref.field();

  std::vector<RunRecord> records(tasks.size());
  std::vector<nlohmann::json> task_times(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        const Task& t = tasks[k];
        const Solution s = solve_method(t.method, t.K, cfg.beta, cfg.solver, cfg.model);
        const auto t_err = std::chrono::steady_clock::now();
        RunRecord r;
        r.method = t.method;
        r.K = t.K;
        r.N = s.mesh->N;
        r.dofs = s.dofs->n_free();
        r.natoms = atomistic_site_count(t.K);
        r.err_h1 = h1_error(s.field(), ref_field);
        r.err_energy = energy_error(s.report.objective, ref.report.objective);
        r.iterations = s.report.iterations;
        r.wall_seconds = s.report.wall_seconds;
        r.converged = s.report.converged;
        records[k] = r;
        task_times[k] = {{"method", to_string(t.method)}, {"K", t.K},
                         {"setup_seconds", s.setup_seconds}, {"solve_seconds", s.report.wall_seconds},
                         {"error_seconds", detail::seconds_since(t_err)}};
        writer.put(k, r);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };

  const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  writer.commit();

  for (auto& t : task_times) timings["runs"].push_back(t);
  result.records = records;
  result.summary = summarize(records, cfg.methods);
  detail::write_text(cfg.output_dir / "summary.json", result.summary.dump(2) + "\n");
  detail::write_text(cfg.output_dir / "timings.json", timings.dump(2) + "\n");
  return result;
}

/// Parses a runs.csv written by run_experiment.
inline std::vector<RunRecord> read_runs_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) throw std::runtime_error("unexpected CSV header in " + path.string());
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw std::runtime_error("malformed CSV row: " + line);
    RunRecord r;
    r.method = parse_method(f[0]);
    r.K = std::stoi(f[1]);
    r.N = std::stoi(f[2]);
    r.dofs = std::stoi(f[3]);
    r.natoms = std::stoi(f[4]);
    r.err_h1 = std::stod(f[5]);
    r.err_energy = std::stod(f[6]);
    r.iterations = std::stoi(f[7]);
    r.wall_seconds = std::stod(f[8]);
    r.converged = f[9] == "true";
    out.push_back(r);
  }
  return out;
}

}  // namespace g23
