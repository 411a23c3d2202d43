// Command-line front end: problem ingestion, solver dispatch, experiment
// orchestration. Every run prints one machine-readable JSON record to stdout;
// --out PREFIX additionally writes the CSV/JSON artifacts next to it.
//
// Exit codes: 0 solved (Optimal/Feasible), 1 configuration or I/O error,
// 2 Infeasible, 3 NoConvergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "etlq/admm.hpp"
#include "etlq/exact.hpp"
#include "etlq/greedy.hpp"
#include "etlq/io.hpp"
#include "etlq/lqr.hpp"
#include "etlq/model.hpp"
#include "etlq/parallel.hpp"
#include "etlq/rhc.hpp"

using namespace etlq;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string instance_path;
  std::string out_prefix;
  int workers = 0;
  std::uint64_t seed = 1;
  std::optional<int> horizon;
  std::optional<double> threshold;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("instance", args.instance_path, "instance file")->required();
  cmd->add_option("--out", args.out_prefix, "artifact path prefix");
  cmd->add_option("--workers", args.workers, "worker threads (0 = all cores)");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--horizon", args.horizon, "override the instance horizon N");
  cmd->add_option("--threshold", args.threshold,
                  "override the instance trigger threshold");
}

ProblemInstance load_instance(const CommonArgs& args) {
  ProblemInstance inst = parse_instance_file(args.instance_path);
  if (args.horizon) inst.N = *args.horizon;
  if (args.threshold) inst.eps = *args.threshold;
  validate_instance(inst);
  return inst;
}

json tolerance_json(const Tolerances& tol) {
  return json{{"psd", tol.psd},     {"pd", tol.pd},       {"dyn", tol.dyn},
              {"mem", tol.mem},     {"zero", tol.zero},   {"strict", tol.strict},
              {"cost_rel", tol.cost_rel}, {"feas", tol.feas}, {"kkt", tol.kkt},
              {"lin", tol.lin}};
}

json base_config(const char* command, const CommonArgs& args,
                 const ProblemInstance& inst, const Tolerances& tol) {
  return json{{"command", command},
              {"instance_path", args.instance_path},
              {"instance", instance_to_json(inst)},
              {"workers", args.workers},
              {"seed", args.seed},
              {"tolerances", tolerance_json(tol)}};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

int status_exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
    case SolveStatus::Feasible: return 0;
    case SolveStatus::Infeasible: return 2;
    case SolveStatus::NoConvergence: return 3;
  }
  return 1;
}

std::vector<double> parse_eps_list(const std::string& text) {
  // "first:last:step" ranges or comma-separated values.
  std::vector<double> out;
  const auto c1 = text.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw std::runtime_error("--eps range must be first:last:step");
    const double a = std::stod(text.substr(0, c1));
    const double b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (step <= 0.0) throw std::runtime_error("--eps step must be positive");
    for (double v = a; v <= b + 1e-12; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::runtime_error("--eps list is empty");
  return out;
}

int run_solve(const CommonArgs& args, const std::string& method, double rho,
              bool rho_given, int iters, double eps_tol,
              const std::string& greedy_tail, std::optional<double> reference,
              const std::string& dump_sequences, const std::string& trace_path,
              bool prune) {
  const Tolerances tol = Tolerances::from_env();
  ProblemInstance inst = load_instance(args);

  json config = base_config("solve", args, inst, tol);
  config["method"] = method;

  Solution sol;
  json extra;
  if (method == "exact") {
    ExactOptions opts;
    opts.workers = args.workers;
    opts.keep_table = !dump_sequences.empty();
    opts.prune = prune;
    config["prune"] = prune;
    EnumerationReport rep = solve_exact(inst, opts, tol);
    sol = rep.best;
    extra["enumeration"] = {{"total", rep.total_sequences},
                            {"feasible", rep.feasible_count},
                            {"infeasible", rep.infeasible_count},
                            {"schedule_rejected", rep.schedule_rejected_count},
                            {"nonconverged", rep.nonconverged_count}};
    if (!dump_sequences.empty()) {
      std::ofstream dump(dump_sequences);
      if (!dump) throw std::runtime_error("cannot write '" + dump_sequences + "'");
      write_sequence_table_csv(dump, inst, rep, config);
    }
  } else if (method == "greedy") {
    GreedyOptions opts;
    opts.workers = args.workers;
    opts.tail = greedy_tail == "free" ? GreedyOptions::Tail::FreeTail
                                      : GreedyOptions::Tail::Truncated;
    config["greedy_tail"] = greedy_tail;
    sol = solve_greedy(inst, opts, tol);
  } else {
    AdmmConfig cfg;
    cfg.rho = rho_given ? rho : default_rho_for_eps(inst.eps);
    cfg.max_iter = iters;
    cfg.eps_tol = eps_tol;
    cfg.seed = args.seed;
    cfg.keep_trace = !trace_path.empty();
    config["rho"] = cfg.rho;
    config["iters"] = cfg.max_iter;
    config["eps_tol"] = cfg.eps_tol;
    AdmmState state;
    sol = solve_admm(inst, cfg, tol, &state);
    if (!trace_path.empty()) {
      std::ofstream trace(trace_path);
      if (!trace) throw std::runtime_error("cannot write '" + trace_path + "'");
      write_admm_trace_csv(trace, state.trace, config);
    }
  }

  json record;
  record["config"] = config;
  record["solution"] = solution_to_json(sol);
  for (auto& [k, v] : extra.items()) record[k] = v;
  if (reference) {
    record["reference_cost"] = *reference;
    if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible)
      record["gap_vs_reference"] = (sol.cost - *reference) / *reference;
  }
  std::cout << record.dump() << "\n";

  if (!args.out_prefix.empty()) {
    write_file(args.out_prefix + ".solution.json", record.dump(2) + "\n");
    if (sol.status == SolveStatus::Optimal ||
        sol.status == SolveStatus::Feasible) {
      std::ostringstream csv;
      write_trajectory_csv(csv, inst, sol, config);
      write_file(args.out_prefix + ".trajectory.csv", csv.str());
    }
  }
  return status_exit_code(sol.status);
}

int run_rhc_cmd(const CommonArgs& args, const std::string& inner, double rho,
                bool rho_given, int iters, double eps_tol, int steps,
                double noise_std, const std::string& greedy_tail) {
  const Tolerances tol = Tolerances::from_env();
  ProblemInstance inst = load_instance(args);

  RhcConfig cfg;
  cfg.sim_len = steps;
  cfg.seed = args.seed;
  cfg.workers = args.workers;
  if (inner == "exact") cfg.inner = InnerSolver::Exact;
  else if (inner == "greedy") cfg.inner = InnerSolver::Greedy;
  else cfg.inner = InnerSolver::Admm;
  cfg.admm.rho = rho_given ? rho : 4.8;
  cfg.admm.max_iter = iters;
  cfg.admm.eps_tol = eps_tol;
  cfg.greedy.tail = greedy_tail == "free" ? GreedyOptions::Tail::FreeTail
                                          : GreedyOptions::Tail::Truncated;
  if (noise_std > 0.0)
    cfg.noise_cov =
        noise_std * noise_std * Eigen::MatrixXd::Identity(inst.n(), inst.n());

  json config = base_config("rhc", args, inst, tol);
  config["inner"] = inner;
  config["steps"] = steps;
  config["noise_std"] = noise_std;
  if (inner == "admm") {
    config["rho"] = cfg.admm.rho;
    config["iters"] = cfg.admm.max_iter;
    config["eps_tol"] = cfg.admm.eps_tol;
  }

  RhcRun run = run_rhc(inst, cfg, tol);

  json record;
  record["config"] = config;
  record["transmissions"] = run.transmission_count;
  record["steps_completed"] = run.inputs.size();
  record["J_sum"] = run.J_sum;
  record["J_inf"] = run.J_inf;
  record["pi_inf"] = run.pi_inf;
  record["failed"] = run.failed;
  if (run.failed) record["failed_at"] = run.failed_at;
  std::cout << record.dump() << "\n";

  if (!args.out_prefix.empty()) {
    write_file(args.out_prefix + ".rhc.json", record.dump(2) + "\n");
    std::ostringstream csv;
    write_rhc_trace_csv(csv, inst, run, config);
    write_file(args.out_prefix + ".trace.csv", csv.str());
  }
  return run.failed ? 2 : 0;
}

int run_tradeoff(const CommonArgs& args, const std::string& inner,
                 const std::string& eps_spec, int runs, int steps,
                 double noise_std, double x0_std, double rho, bool rho_given,
                 int iters, double eps_tol) {
  const Tolerances tol = Tolerances::from_env();
  ProblemInstance inst = load_instance(args);
  const std::vector<double> eps_list = parse_eps_list(eps_spec);

  TradeoffConfig cfg;
  cfg.workers = args.workers;
  cfg.x0_cov = x0_std * x0_std * Eigen::MatrixXd::Identity(inst.n(), inst.n());
  cfg.rhc.sim_len = steps;
  cfg.rhc.seed = args.seed;
  if (inner == "exact") cfg.rhc.inner = InnerSolver::Exact;
  else if (inner == "greedy") cfg.rhc.inner = InnerSolver::Greedy;
  else cfg.rhc.inner = InnerSolver::Admm;
  cfg.rhc.admm.rho = rho_given ? rho : 4.8;
  cfg.rhc.admm.max_iter = iters;
  cfg.rhc.admm.eps_tol = eps_tol;
  if (noise_std > 0.0)
    cfg.rhc.noise_cov =
        noise_std * noise_std * Eigen::MatrixXd::Identity(inst.n(), inst.n());

  json config = base_config("tradeoff", args, inst, tol);
  config["inner"] = inner;
  config["eps_list"] = eps_list;
  config["runs"] = runs;
  config["steps"] = steps;
  config["noise_std"] = noise_std;
  config["x0_std"] = x0_std;

  auto rows = tradeoff_sweep(inst, eps_list, runs, cfg, tol);

  json table = json::array();
  for (const auto& r : rows)
    table.push_back(json{{"eps", r.eps},
                         {"mean_J_inf", r.mean_J_inf},
                         {"mean_pi_inf", r.mean_pi_inf},
                         {"runs_ok", r.runs_ok},
                         {"runs_failed", r.runs_failed}});
  json record;
  record["config"] = config;
  record["rows"] = table;
  std::cout << record.dump() << "\n";

  if (!args.out_prefix.empty()) {
    write_file(args.out_prefix + ".tradeoff.json", record.dump(2) + "\n");
    std::ostringstream csv;
    write_tradeoff_csv(csv, rows, config);
    write_file(args.out_prefix + ".tradeoff.csv", csv.str());
  }
  return 0;
}

int run_constants(const CommonArgs& args, std::optional<double> kappa,
                  const std::string& terminal_weight) {
  const Tolerances tol = Tolerances::from_env();
  ProblemInstance inst = load_instance(args);
  StabilityConstants sc =
      compute_stability_constants(inst, terminal_weight == "p", tol);

  json config = base_config("constants", args, inst, tol);
  config["terminal_weight"] = terminal_weight;

  json record;
  record["config"] = config;
  record["a2"] = sc.a2;
  record["a3"] = sc.a3;
  record["gamma"] = sc.gamma;
  record["eta"] = sc.eta;
  record["kappa"] = sc.kappa;
  record["mu"] = sc.mu;
  record["stabilizable"] = is_stabilizable(inst.A, inst.B);
  {
    json k = json::array();
    for (Eigen::Index i = 0; i < sc.K_gain.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < sc.K_gain.cols(); ++j)
        row.push_back(sc.K_gain(i, j));
      k.push_back(row);
    }
    record["K_gain"] = k;
  }
  if (kappa) {
    record["user_kappa"] = *kappa;
    record["mu_for_user_kappa"] = sc.mu_for(*kappa);
  }
  std::cout << record.dump() << "\n";
  if (!args.out_prefix.empty())
    write_file(args.out_prefix + ".constants.json", record.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon event-triggered LQ control toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args, rhc_args, tradeoff_args, constants_args;

  auto* solve = app.add_subcommand("solve", "one-shot finite-horizon solve");
  std::string method = "exact";
  double rho = 4.8;
  int iters = 300;
  double eps_tol = 1e-4;
  std::string greedy_tail = "truncated";
  std::optional<double> reference;
  std::string dump_sequences;
  std::string trace_path;
  bool prune = false;
  add_common(solve, solve_args);
  solve->add_option("--method", method, "exact | greedy | admm")
      ->check(CLI::IsMember({"exact", "greedy", "admm"}));
  auto* rho_opt = solve->add_option("--rho", rho, "ADMM step size");
  solve->add_option("--iters", iters, "ADMM iteration budget");
  solve->add_option("--eps-tol", eps_tol, "ADMM residual tolerance");
  solve->add_option("--greedy-tail", greedy_tail, "truncated | free")
      ->check(CLI::IsMember({"truncated", "free"}));
  solve->add_option("--reference", reference,
                    "reference cost for the gap field");
  solve->add_option("--dump-sequences", dump_sequences,
                    "write the per-sequence CSV here (exact only)");
  solve->add_option("--trace", trace_path,
                    "write the ADMM iteration-trace CSV here (admm only)");
  solve->add_flag("--prune", prune, "skip completions of infeasible prefixes");

  auto* rhc = app.add_subcommand("rhc", "closed-loop receding-horizon run");
  std::string inner = "exact";
  int steps = 50;
  double noise_std = 0.0;
  double rhc_rho = 4.8, rhc_eps_tol = 1e-4;
  int rhc_iters = 300;
  std::string rhc_tail = "truncated";
  add_common(rhc, rhc_args);
  rhc->add_option("--inner", inner, "exact | greedy | admm")
      ->check(CLI::IsMember({"exact", "greedy", "admm"}));
  rhc->add_option("--steps", steps, "simulation length");
  rhc->add_option("--noise-std", noise_std, "process noise std (0 = none)");
  auto* rhc_rho_opt = rhc->add_option("--rho", rhc_rho, "ADMM step size");
  rhc->add_option("--iters", rhc_iters, "ADMM iteration budget");
  rhc->add_option("--eps-tol", rhc_eps_tol, "ADMM residual tolerance");
  rhc->add_option("--greedy-tail", rhc_tail, "truncated | free")
      ->check(CLI::IsMember({"truncated", "free"}));

  auto* tradeoff = app.add_subcommand(
      "tradeoff", "threshold sweep with Monte Carlo closed-loop runs");
  std::string t_inner = "greedy";
  std::string eps_spec = "0.5:4.0:0.25";
  int runs = 100;
  int t_steps = 500;
  double t_noise = 0.1, x0_std = 1.0;
  double t_rho = 4.8, t_eps_tol = 1e-4;
  int t_iters = 300;
  add_common(tradeoff, tradeoff_args);
  tradeoff->add_option("--inner", t_inner, "exact | greedy | admm")
      ->check(CLI::IsMember({"exact", "greedy", "admm"}));
  tradeoff->add_option("--eps", eps_spec, "first:last:step or comma list");
  tradeoff->add_option("--runs", runs, "Monte Carlo runs per threshold");
  tradeoff->add_option("--steps", t_steps, "simulation length per run");
  tradeoff->add_option("--noise-std", t_noise, "process noise std");
  tradeoff->add_option("--x0-std", x0_std, "initial-state std");
  auto* t_rho_opt = tradeoff->add_option("--rho", t_rho, "ADMM step size");
  tradeoff->add_option("--iters", t_iters, "ADMM iteration budget");
  tradeoff->add_option("--eps-tol", t_eps_tol, "ADMM residual tolerance");

  auto* constants =
      app.add_subcommand("constants", "practical-stability constants");
  std::optional<double> kappa;
  std::string terminal_weight = "q";
  add_common(constants, constants_args);
  constants->add_option("--kappa", kappa,
                        "also report the radius for this kappa");
  constants->add_option("--terminal-weight", terminal_weight,
                        "q | p (schedule matrices' terminal term)")
      ->check(CLI::IsMember({"q", "p"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return run_solve(solve_args, method, rho, rho_opt->count() > 0, iters,
                       eps_tol, greedy_tail, reference, dump_sequences,
                       trace_path, prune);
    if (rhc->parsed())
      return run_rhc_cmd(rhc_args, inner, rhc_rho, rhc_rho_opt->count() > 0,
                         rhc_iters, rhc_eps_tol, steps, noise_std, rhc_tail);
    if (tradeoff->parsed())
      return run_tradeoff(tradeoff_args, t_inner, eps_spec, runs, t_steps,
                          t_noise, x0_std, t_rho, t_rho_opt->count() > 0,
                          t_iters, t_eps_tol);
    if (constants->parsed())
      return run_constants(constants_args, kappa, terminal_weight);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
