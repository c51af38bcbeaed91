#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ustab/optimizer.hpp"
#include "ustab/stability.hpp"

namespace ustab {

struct UtilitySpec {
  std::string family = "log";  // log | power | tabulated
  double alpha = 0.5;
  bool normalize = true;
  std::vector<double> grid;      // tabulated: abscissae
  std::vector<double> marginal;  // tabulated: U' on the grid
};

struct FamilyConfig {
  DriftFamilySpec drift;
  std::optional<double> zeta_amplitude;  // zeta drawn from the seed when set
};

struct StabilityConfig {
  int n_max = 1000;
  std::vector<int> ns;
  StabilityThresholds thresholds;
  double q_hat_factor = 2.0;
  int m_max = 10;
  std::vector<int> cm_ns = {1, 10, 100, 1000};
};

struct ExperimentConfig {
  MarketSpec market;
  UtilitySpec utility;
  SolverOptions solver;
  double x = 1.0;
  std::vector<double> q;
  double y = 1.0;
  std::vector<double> r;
  std::optional<FamilyConfig> family;
  StabilityConfig stability;
  CounterexampleConfig counterexample;
  std::string counterexample_mode = "both";  // both | diagonal | fixed
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

/// Parses a JSON document; every object rejects unknown keys. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json);
/// Throws IoError when unreadable, ConfigError when malformed.
ExperimentConfig load_config(const std::string& path);

/// A one-period market may be given as {"s0", "s1", "probabilities"}; it is
/// expanded into the tree form.
struct BuiltProblem {
  FiniteMarket market;
  MarketModel model;
  UtilityFunction utility;
};
BuiltProblem build_problem(const ExperimentConfig& config);

UtilityFunction make_utility(const UtilitySpec& spec);

/// The configured family, with zeta drawn from the seed when requested.
PerturbationFamily make_family(const ExperimentConfig& config, const ProbabilityMeasure& p);

}  // namespace ustab
