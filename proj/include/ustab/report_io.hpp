#pragma once

#include <string>
#include <vector>

#include "ustab/config.hpp"

namespace ustab {

/// 12 significant digits, "%.12g".
std::string format_number(double v);

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file. Creates the directory.
void write_file_atomic(const std::string& path, const std::string& content);

struct SolveResult {
  PrimalSolution primal;
  DualSolution dual;
  std::vector<Vector> marginal_prices;
  bool prices_within_closure = true;
  double link_residual = 0.0;
};

/// Primal at (x, q) and the dual at the matching supergradient (y = du/dx,
/// r = du/dq).
SolveResult solve_instance(const BuiltProblem& problem, double x, const Vector& q, const SolverOptions& opts);

std::string solution_csv(const SolveResult& s);
std::string solve_summary_json(const SolveResult& s, const BuiltProblem& problem);

std::string prices_summary_json(const BuiltProblem& problem, double x, const Vector& q, const SolverOptions& opts);

std::string stability_csv(const ConvergenceReport& r);
std::string stability_summary_json(const ConvergenceReport& r, const UiReport& ui, const CmDiagnostic& cm,
                                   std::uint64_t seed);
std::string cm_csv(const CmDiagnostic& cm);

std::string counterexample_csv(const std::vector<CounterexampleRow>& rows);
std::string counterexample_summary_json(const CounterexampleReport& r);

}  // namespace ustab
