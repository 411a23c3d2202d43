#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "etlq/admm.hpp"
#include "etlq/exact.hpp"
#include "etlq/rhc.hpp"
#include "etlq/types.hpp"

namespace etlq {

/// Instance files are plain text: `key = value` lines, `#` comments, matrices
/// in bracketed row-major form (`A = [0.9 0.2; 0.8 1.5]`). Fields: A, B, Q,
/// R, P (optional, defaults to Q), x0, eps, N. Unknown keys are rejected.
/// Serialization uses %.17g, so parse -> serialize -> parse is bit-exact.
ProblemInstance parse_instance_text(const std::string& text);
ProblemInstance parse_instance_file(const std::string& path);
std::string serialize_instance(const ProblemInstance& inst);

std::string format_double(double v);

/// Schedule rendered as dash-separated labels, e.g. "4-4-4-1-1-0-0".
std::string sigma_to_string(const SwitchSequence& sigma);

nlohmann::json instance_to_json(const ProblemInstance& inst);
nlohmann::json solution_to_json(const Solution& sol);

/// CSV emitters. Every file starts with one comment line embedding the full
/// resolved configuration (the reproducibility header).
void write_trajectory_csv(std::ostream& os, const ProblemInstance& inst,
                          const Solution& sol, const nlohmann::json& header);
void write_sequence_table_csv(std::ostream& os, const ProblemInstance& inst,
                              const EnumerationReport& rep,
                              const nlohmann::json& header);
void write_rhc_trace_csv(std::ostream& os, const ProblemInstance& inst,
                         const RhcRun& run, const nlohmann::json& header);
void write_admm_trace_csv(std::ostream& os,
                          const std::vector<AdmmTraceRow>& trace,
                          const nlohmann::json& header);
void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffRow>& rows,
                        const nlohmann::json& header);

}  // namespace etlq
