#include "etlq/io.hpp"

#include "etlq/model.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace etlq {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Eigen::MatrixXd parse_matrix(const std::string& field, const std::string& value) {
  const auto open = value.find('[');
  const auto close = value.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::runtime_error("instance field '" + field + "': expected [ ... ]");
  std::string body = value.substr(open + 1, close - open - 1);
  for (char& ch : body)
    if (ch == ',' || ch == '\n' || ch == '\t') ch = ' ';

  std::vector<std::vector<double>> rows;
  std::stringstream row_stream(body);
  std::string row_text;
  while (std::getline(row_stream, row_text, ';')) {
    row_text = trim(row_text);
    if (row_text.empty()) continue;
    std::vector<double> row;
    std::stringstream cell_stream(row_text);
    std::string cell;
    while (cell_stream >> cell) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw std::runtime_error("instance field '" + field +
                                 "': malformed entry '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("instance field '" + field +
                               "': ragged matrix rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::runtime_error("instance field '" + field + "': empty matrix");
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) M(i, j) = rows[i][j];
  return M;
}

double parse_scalar(const std::string& field, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || trim(end).size() > 0)
    throw std::runtime_error("instance field '" + field +
                             "': malformed number '" + value + "'");
  return v;
}

}  // namespace

ProblemInstance parse_instance_text(const std::string& text) {
  // Join continuation lines of bracketed values, strip comments.
  std::map<std::string, std::string> fields;
  std::stringstream ss(text);
  std::string line, pending_key, pending_value;
  auto flush_pending = [&]() {
    if (pending_key.empty()) return;
    if (!fields.emplace(pending_key, trim(pending_value)).second)
      throw std::runtime_error("instance field '" + pending_key + "' repeated");
    pending_key.clear();
    pending_value.clear();
  };
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    if (!pending_key.empty()) {
      pending_value += " " + line;
      if (pending_value.find(']') != std::string::npos) flush_pending();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("instance file: expected 'key = value' in '" +
                               trim(line) + "'");
    pending_key = trim(line.substr(0, eq));
    pending_value = trim(line.substr(eq + 1));
    const bool bracketed = pending_value.find('[') != std::string::npos;
    if (!bracketed || pending_value.find(']') != std::string::npos)
      flush_pending();
  }
  if (!pending_key.empty())
    throw std::runtime_error("instance field '" + pending_key +
                             "': unterminated matrix");

  for (const auto& kv : fields) {
    const std::string& key = kv.first;
    if (key != "A" && key != "B" && key != "Q" && key != "R" && key != "P" &&
        key != "x0" && key != "eps" && key != "N")
      throw std::runtime_error("instance file: unknown field '" + key + "'");
  }
  for (const char* req : {"A", "B", "Q", "R", "x0", "eps", "N"})
    if (!fields.count(req))
      throw std::runtime_error(std::string("instance file: missing field '") +
                               req + "'");

  ProblemInstance inst;
  inst.A = parse_matrix("A", fields["A"]);
  inst.B = parse_matrix("B", fields["B"]);
  inst.Q = parse_matrix("Q", fields["Q"]);
  inst.R = parse_matrix("R", fields["R"]);
  inst.P = fields.count("P") ? parse_matrix("P", fields["P"]) : inst.Q;
  Eigen::MatrixXd x0 = parse_matrix("x0", fields["x0"]);
  if (x0.rows() == 1) x0.transposeInPlace();
  if (x0.cols() != 1)
    throw std::runtime_error("instance field 'x0': expected a vector");
  inst.x0 = x0.col(0);
  inst.eps = parse_scalar("eps", fields["eps"]);
  const double nval = parse_scalar("N", fields["N"]);
  inst.N = static_cast<int>(nval);
  if (inst.N != nval)
    throw std::runtime_error("instance field 'N': expected an integer");
  validate_instance(inst);
  return inst;
}

ProblemInstance parse_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance_text(buf.str());
}

namespace {

std::string matrix_text(const Eigen::MatrixXd& M) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out += " ";
      out += format_double(M(i, j));
    }
  }
  return out + "]";
}

}  // namespace

std::string serialize_instance(const ProblemInstance& inst) {
  std::string out;
  out += "A = " + matrix_text(inst.A) + "\n";
  out += "B = " + matrix_text(inst.B) + "\n";
  out += "Q = " + matrix_text(inst.Q) + "\n";
  out += "R = " + matrix_text(inst.R) + "\n";
  out += "P = " + matrix_text(inst.P) + "\n";
  out += "x0 = " + matrix_text(inst.x0) + "\n";
  out += "eps = " + format_double(inst.eps) + "\n";
  out += "N = " + std::to_string(inst.N) + "\n";
  return out;
}

std::string sigma_to_string(const SwitchSequence& sigma) {
  std::string out;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (i) out += "-";
    out += std::to_string(sigma[i]);
  }
  return out;
}

nlohmann::json instance_to_json(const ProblemInstance& inst) {
  auto mat = [](const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json j;
  j["A"] = mat(inst.A);
  j["B"] = mat(inst.B);
  j["Q"] = mat(inst.Q);
  j["R"] = mat(inst.R);
  j["P"] = mat(inst.P);
  nlohmann::json x0 = nlohmann::json::array();
  for (Eigen::Index i = 0; i < inst.x0.size(); ++i) x0.push_back(inst.x0[i]);
  j["x0"] = x0;
  j["eps"] = inst.eps;
  j["N"] = inst.N;
  return j;
}

nlohmann::json solution_to_json(const Solution& sol) {
  nlohmann::json j;
  j["status"] = to_string(sol.status);
  j["cost"] = sol.cost;
  j["sigma"] = sol.sigma;
  j["events"] = std::vector<int>(sol.events.begin(), sol.events.end());
  j["max_violation"] = sol.max_violation;
  j["stats"] = {{"qp_count", sol.stats.qp_count},
                {"iterations", sol.stats.iterations},
                {"wall_time", sol.stats.wall_time}};
  return j;
}

namespace {

void write_header(std::ostream& os, const nlohmann::json& header) {
  os << "# config: " << header.dump() << "\n";
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const ProblemInstance& inst,
                          const Solution& sol, const nlohmann::json& header) {
  write_header(os, header);
  os << "t,sigma";
  for (int i = 1; i <= inst.n(); ++i) os << ",x" << i;
  for (int i = 1; i <= inst.m(); ++i) os << ",u" << i;
  os << "\n";
  for (int t = 0; t <= inst.N; ++t) {
    os << t << ",";
    if (t < inst.N && t < static_cast<int>(sol.sigma.size()))
      os << sol.sigma[t];
    for (int i = 0; i < inst.n(); ++i)
      os << "," << format_double(sol.trajectory.states[t][i]);
    for (int i = 0; i < inst.m(); ++i) {
      os << ",";
      if (t < inst.N) os << format_double(sol.trajectory.inputs[t][i]);
    }
    os << "\n";
  }
}

void write_sequence_table_csv(std::ostream& os, const ProblemInstance& inst,
                              const EnumerationReport& rep,
                              const nlohmann::json& header) {
  write_header(os, header);
  os << "sigma,status,cost,max_violation\n";
  const int base = 2 * inst.n() + 1;
  const RegionSet rs = build_regions(inst.n(), inst.eps);
  const int sigma0 = classify(inst.x0, rs);
  for (const SequenceRecord& rec : rep.table) {
    // "Rejected" marks a feasible subproblem whose solution failed the
    // strict trigger rule; it counts toward feasible_count but never wins.
    const char* status =
        rec.qp_feasible && rec.status != SolveStatus::Feasible
            ? "Rejected"
            : to_string(rec.status);
    os << sigma_to_string(sigma_from_rank(rec.rank, base, inst.N, sigma0))
       << "," << status << "," << format_double(rec.cost) << ","
       << format_double(rec.max_violation) << "\n";
  }
}

void write_rhc_trace_csv(std::ostream& os, const ProblemInstance& inst,
                         const RhcRun& run, const nlohmann::json& header) {
  write_header(os, header);
  os << "t";
  for (int i = 1; i <= inst.n(); ++i) os << ",x" << i;
  for (int i = 1; i <= inst.m(); ++i) os << ",u" << i;
  os << ",transmitted,solver_status,qp_count\n";
  for (std::size_t t = 0; t < run.states.size(); ++t) {
    os << t;
    for (int i = 0; i < inst.n(); ++i)
      os << "," << format_double(run.states[t][i]);
    const bool has_step = t < run.inputs.size();
    for (int i = 0; i < inst.m(); ++i) {
      os << ",";
      if (has_step) os << format_double(run.inputs[t][i]);
    }
    if (has_step) {
      os << "," << static_cast<int>(run.transmissions[t]) << ","
         << (run.transmissions[t] ? to_string(run.step_stats[t].status) : "-")
         << "," << run.step_stats[t].qp_count;
    } else {
      os << ",,,";
    }
    os << "\n";
  }
}

void write_admm_trace_csv(std::ostream& os,
                          const std::vector<AdmmTraceRow>& trace,
                          const nlohmann::json& header) {
  write_header(os, header);
  os << "iter,primal_residual,cost,best_flag\n";
  for (const AdmmTraceRow& row : trace) {
    os << row.iter << "," << format_double(row.primal_residual) << ","
       << format_double(row.cost) << "," << (row.is_best ? 1 : 0) << "\n";
  }
}

void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffRow>& rows,
                        const nlohmann::json& header) {
  write_header(os, header);
  os << "eps,mean_J_inf,mean_pi_inf,runs_ok,runs_failed\n";
  for (const TradeoffRow& r : rows) {
    os << format_double(r.eps) << "," << format_double(r.mean_J_inf) << ","
       << format_double(r.mean_pi_inf) << "," << r.runs_ok << ","
       << r.runs_failed << "\n";
  }
}

}  // namespace etlq
