#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ustab/convex.hpp"
#include "ustab/optimizer.hpp"

namespace ustab {

/// A sequence of perturbed problems indexed by n >= 1 together with its limit.
struct PerturbationFamily {
  std::function<Vector(int)> density;             // Z_n over atoms, E^P Z_n = 1, Z_n > 0
  std::function<UtilityFunction(int)> utility;    // normalized U_n
  std::function<std::pair<double, Vector>(int)> primal_point;  // (x_n, q_n)
  std::function<std::pair<double, Vector>(int)> dual_point;    // (y_n, r_n)
  UtilityFunction limit_utility = UtilityFunction::log();
  double x = 1.0;
  Vector q;
  double y = 1.0;
  Vector r;
};

/// Z_n = 1 + zeta / n, U_n = normalized power with exponent
/// alpha + (alpha_start - alpha) / n, and points drifting as
/// x_n = x + dx / n (likewise for q, y, r). A zero amplitude and
/// alpha_start = alpha give the constant family.
struct DriftFamilySpec {
  Vector zeta;
  double alpha = 0.5;
  double alpha_start = 0.5;
  bool log_utility = false;  // U_n = log for all n (alpha fields ignored)
  double x = 1.0, dx = 0.0;
  Vector q, dq;
  double y = 1.0, dy = 0.0;
  Vector r, dr;
};
PerturbationFamily drift_family(const DriftFamilySpec& spec);

/// Checks E^P Z_n = 1 and Z_n > 0 for n <= n_max and that the points lie in
/// the cones. Throws NonPositiveProbability or InvalidSpec / InfeasibleStart.
void validate_family(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family, int n_max);

/// E^P[min(|a - b|, 1)].
double kyfan_distance(const Vector& a, const Vector& b, const ProbabilityMeasure& p);

/// sup_{x in from} dist(x, conv(to)). Throws EmptySet.
double one_sided_hausdorff(const std::vector<Vector>& from, const std::vector<Vector>& to);

/// For each eps, the smallest tested n from which every later distance is
/// below eps (-1 if none).
std::vector<std::pair<double, int>> first_index_below(const std::vector<int>& ns, const std::vector<double>& dist,
                                                      const std::vector<double>& eps);

struct StabilityThresholds {
  double value = 1e-4;
  double kyfan = 1e-4;
  double hausdorff = 1e-3;
  std::vector<double> eps_ladder = {1e-1, 1e-2, 1e-3};
};

struct StabilityRecord {
  int n = 0;
  double u = 0.0, v = 0.0, du_dx = 0.0, dv_dy = 0.0;
  double kyfan_x = 0.0, kyfan_y = 0.0, hausdorff = 0.0, tv = 0.0;
  double v_at_limit_point = 0.0;  // v_n(y, r) at the limiting dual point
};

struct ConvergenceReport {
  std::vector<StabilityRecord> records;
  double u_inf = 0.0, v_inf = 0.0, du_dx_inf = 0.0, dv_dy_inf = 0.0;
  std::vector<Vector> prices_inf;
  // deviations at the final n
  double dev_u = 0.0, dev_v = 0.0, dev_du_dx = 0.0, dev_dv_dy = 0.0;
  double final_kyfan_x = 0.0, final_kyfan_y = 0.0;
  std::vector<std::pair<double, int>> hausdorff_n0;
  double liminf_v = 0.0, limsup_v = 0.0;  // v_n(y, r) over the last tenth of the indices
  bool values_pass = false;
  bool kyfan_pass = false;
  bool hausdorff_pass = false;
  bool lower_semicontinuity_pass = false;
  bool upper_semicontinuity_pass = false;
  bool pass() const;
};

/// Solves primal and dual for every n in `ns` (1..n_max when empty) and the
/// limit problem; solver failures are rethrown with the offending n.
ConvergenceReport run_stability_experiment(const MarketModel& model, const ProbabilityMeasure& p,
                                           const PerturbationFamily& family, int n_max,
                                           const StabilityThresholds& thresholds = {}, std::vector<int> ns = {},
                                           const SolverOptions& opts = {});

struct UiReport {
  // (a) finite spaces: every family of random variables is UI
  bool finite_space_ui = true;
  double xi_max = 0.0;  // sup over n and y of max_i Z_n V_n^+(y dQ/dP / Z_n)
  Vector measure;       // Q selected in Q(p)
  // item (3): uniformly bounded above
  bool bounded_above = false;
  double upper_bound = 0.0;
  // item (4): power growth with moment conditions
  bool power_moment = false;
  PowerGrowthBound growth;
  double p_hat = 0.0, q_hat_min = 0.0, q_hat = 0.0, gamma = 0.0;
  double density_moment = 0.0;          // sup_n E[Z_n^p_hat]
  double inverse_density_moment = 0.0;  // E[(dQ/dP)^{-q_hat}]
  bool holder_bound_holds = false;
  std::string power_moment_note;
  // item (5): uniform reasonable asymptotic elasticity
  bool uniform_rae = false;
  double rae_delta = 0.0, rae_x0 = 0.0;
};

/// Evaluates the (UI) sufficient conditions along the family at the price
/// p (empty when there are no claims).
UiReport ui_condition_report(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family,
                             const Vector& price, int n_max, double q_hat_factor = 2.0);

/// inf over C_m = {(a, b) in [1/m, m]^2 : |a - b| >= 1/m} of the midpoint
/// convexity gap (V(a) + V(b)) / 2 - V((a + b) / 2), by grid minimization.
double convexity_gap(const DualFunction& v, int m, int cells = 400);

struct CmDiagnostic {
  std::vector<double> beta;                       // beta_1 .. beta_m_max
  std::vector<int> ns;
  std::vector<std::vector<double>> probability;   // [m - 1][index of n]
};

/// P_n[(a_n, b_n) in C_m] with a_n = g_n / Z_n, b_n = f_n / Z_n, where
/// g_n = Z_n Y_n is the perturbed dual optimizer seen under P and f_n mixes
/// y dQ/dP (Q the limiting dual pricing measure) with the limit g.
CmDiagnostic cm_diagnostic(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family,
                           int m_max, const std::vector<int>& ns, const SolverOptions& opts = {});

struct CounterexampleConfig {
  std::vector<int> levels = {6, 12, 25, 50, 100, 200};
  int fixed_level = 6;
  std::vector<int> fixed_ns = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  double alpha = 0.5;
  double x = 1.0;
  double spike_tail = 0.5;   // spike probability at n is spike_tail / n
  double spike_mass = 1.0;   // spike height is sqrt(spike_mass / probability)
  bool flat = false;         // phi_n = 1 for every n
  double threshold = 0.05;   // instability signature on the diagonal
  int n_search_cap = 10000000;
};

struct CounterexampleRow {
  int m = 0;
  int n = 0;
  double tv = 0.0;
  double kyfan = 0.0;
  double orlicz = 0.0;  // E^P[phi V^+(1 / phi)]
};

struct CounterexampleReport {
  std::vector<CounterexampleRow> diagonal;
  std::vector<CounterexampleRow> fixed;
  bool fixed_converges = false;    // last fixed-level distance < 1e-3
  bool diagonal_unstable = false;  // last diagonal distance > threshold with tv < 0.01
};

/// Recombining binomial approximation of a geometric Brownian motion over one
/// unit of time, aggregated to its m + 1 terminal atoms (Q = P there), with
/// spike densities phi_n(W_1) placed on the upper tail of the walk.
CounterexampleReport counterexample_experiment(const CounterexampleConfig& config, const SolverOptions& opts = {});

}  // namespace ustab
