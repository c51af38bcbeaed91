#include "ustab/config.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ustab/error.hpp"

namespace ustab {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, where + ": " + what);
}

// Rejects keys outside `allowed` and non-object values.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(where, "unknown key \"" + it.key() + "\"");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> integers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> rows(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MarketSpec parse_market(const json& j) {
  MarketSpec spec;
  if (j.contains("s1")) {
    check_keys(j, "market", {"s0", "s1", "probabilities", "endowments"});
    if (!j.contains("s0") || !j.contains("probabilities")) fail("market", "one-period form needs s0, s1 and probabilities");
    const auto s0 = numbers(j["s0"], "market.s0");
    const auto s1 = rows(j["s1"], "market.s1");
    spec.parent.push_back(-1);
    spec.prices.push_back(s0);
    for (const auto& row : s1) {
      spec.parent.push_back(0);
      spec.prices.push_back(row);
    }
    spec.atoms = numbers(j["probabilities"], "market.probabilities");
  } else {
    check_keys(j, "market", {"parent", "prices", "atoms", "endowments"});
    if (!j.contains("parent") || !j.contains("prices") || !j.contains("atoms"))
      fail("market", "tree form needs parent, prices and atoms");
    spec.parent = integers(j["parent"], "market.parent");
    spec.prices = rows(j["prices"], "market.prices");
    spec.atoms = numbers(j["atoms"], "market.atoms");
  }
  if (j.contains("endowments")) spec.endowments = rows(j["endowments"], "market.endowments");
  return spec;
}

UtilitySpec parse_utility(const json& j) {
  check_keys(j, "utility", {"family", "alpha", "normalize", "grid", "marginal"});
  UtilitySpec u;
  if (j.contains("family")) u.family = string(j["family"], "utility.family");
  if (u.family != "log" && u.family != "power" && u.family != "tabulated")
    fail("utility.family", "must be log, power or tabulated");
  if (j.contains("alpha")) u.alpha = number(j["alpha"], "utility.alpha");
  if (j.contains("normalize")) u.normalize = boolean(j["normalize"], "utility.normalize");
  if (j.contains("grid")) u.grid = numbers(j["grid"], "utility.grid");
  if (j.contains("marginal")) u.marginal = numbers(j["marginal"], "utility.marginal");
  if (u.family == "tabulated" && (u.grid.size() < 2 || u.grid.size() != u.marginal.size()))
    fail("utility", "tabulated utilities need grid and marginal of equal length (at least 2)");
  return u;
}

FamilyConfig parse_family(const json& j) {
  check_keys(j, "family", {"zeta", "zeta_amplitude", "alpha", "alpha_start", "log", "x", "dx", "q", "dq", "y", "dy", "r", "dr"});
  FamilyConfig f;
  auto& d = f.drift;
  if (j.contains("zeta")) d.zeta = to_vector(numbers(j["zeta"], "family.zeta"));
  if (j.contains("zeta_amplitude")) f.zeta_amplitude = number(j["zeta_amplitude"], "family.zeta_amplitude");
  if (j.contains("zeta") == f.zeta_amplitude.has_value()) fail("family", "give exactly one of zeta and zeta_amplitude");
  if (j.contains("alpha")) d.alpha = number(j["alpha"], "family.alpha");
  d.alpha_start = j.contains("alpha_start") ? number(j["alpha_start"], "family.alpha_start") : d.alpha;
  if (j.contains("log")) d.log_utility = boolean(j["log"], "family.log");
  if (j.contains("x")) d.x = number(j["x"], "family.x");
  if (j.contains("dx")) d.dx = number(j["dx"], "family.dx");
  if (j.contains("q")) d.q = to_vector(numbers(j["q"], "family.q"));
  if (j.contains("dq")) d.dq = to_vector(numbers(j["dq"], "family.dq"));
  if (j.contains("y")) d.y = number(j["y"], "family.y");
  if (j.contains("dy")) d.dy = number(j["dy"], "family.dy");
  if (j.contains("r")) d.r = to_vector(numbers(j["r"], "family.r"));
  if (j.contains("dr")) d.dr = to_vector(numbers(j["dr"], "family.dr"));
  return f;
}

StabilityConfig parse_stability(const json& j) {
  check_keys(j, "stability", {"n_max", "ns", "thresholds", "q_hat_factor", "m_max", "cm_ns"});
  StabilityConfig s;
  if (j.contains("n_max")) s.n_max = integer(j["n_max"], "stability.n_max");
  if (s.n_max < 1) fail("stability.n_max", "must be at least 1");
  if (j.contains("ns")) s.ns = integers(j["ns"], "stability.ns");
  if (j.contains("q_hat_factor")) s.q_hat_factor = number(j["q_hat_factor"], "stability.q_hat_factor");
  if (j.contains("m_max")) s.m_max = integer(j["m_max"], "stability.m_max");
  if (j.contains("cm_ns")) s.cm_ns = integers(j["cm_ns"], "stability.cm_ns");
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    check_keys(t, "stability.thresholds", {"value", "kyfan", "hausdorff", "eps_ladder"});
    if (t.contains("value")) s.thresholds.value = number(t["value"], "thresholds.value");
    if (t.contains("kyfan")) s.thresholds.kyfan = number(t["kyfan"], "thresholds.kyfan");
    if (t.contains("hausdorff")) s.thresholds.hausdorff = number(t["hausdorff"], "thresholds.hausdorff");
    if (t.contains("eps_ladder")) s.thresholds.eps_ladder = numbers(t["eps_ladder"], "thresholds.eps_ladder");
  }
  for (int n : s.ns)
    if (n < 1) fail("stability.ns", "indices start at 1");
  return s;
}

void parse_counterexample(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "counterexample", {"mode", "levels", "fixed_level", "fixed_ns", "alpha", "x", "spike_tail",
                                   "spike_mass", "flat", "threshold", "n_search_cap"});
  auto& c = cfg.counterexample;
  if (j.contains("mode")) cfg.counterexample_mode = string(j["mode"], "counterexample.mode");
  if (cfg.counterexample_mode != "both" && cfg.counterexample_mode != "diagonal" && cfg.counterexample_mode != "fixed")
    fail("counterexample.mode", "must be both, diagonal or fixed");
  if (j.contains("levels")) c.levels = integers(j["levels"], "counterexample.levels");
  if (j.contains("fixed_level")) c.fixed_level = integer(j["fixed_level"], "counterexample.fixed_level");
  if (j.contains("fixed_ns")) c.fixed_ns = integers(j["fixed_ns"], "counterexample.fixed_ns");
  if (j.contains("alpha")) c.alpha = number(j["alpha"], "counterexample.alpha");
  if (j.contains("x")) c.x = number(j["x"], "counterexample.x");
  if (j.contains("spike_tail")) c.spike_tail = number(j["spike_tail"], "counterexample.spike_tail");
  if (j.contains("spike_mass")) c.spike_mass = number(j["spike_mass"], "counterexample.spike_mass");
  if (j.contains("flat")) c.flat = boolean(j["flat"], "counterexample.flat");
  if (j.contains("threshold")) c.threshold = number(j["threshold"], "counterexample.threshold");
  if (j.contains("n_search_cap")) c.n_search_cap = integer(j["n_search_cap"], "counterexample.n_search_cap");
  if (cfg.counterexample_mode == "diagonal") c.fixed_ns.clear();
  if (cfg.counterexample_mode == "fixed") c.levels.clear();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, "config", {"market", "utility", "solver", "point", "family", "stability", "counterexample", "output", "seed"});
  ExperimentConfig cfg;
  if (j.contains("market")) cfg.market = parse_market(j["market"]);
  if (j.contains("utility")) cfg.utility = parse_utility(j["utility"]);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver", {"tol", "max_iter"});
    if (s.contains("tol")) cfg.solver.tol = number(s["tol"], "solver.tol");
    if (s.contains("max_iter")) cfg.solver.max_iter = integer(s["max_iter"], "solver.max_iter");
    if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iter < 1) fail("solver", "tol must be positive and max_iter at least 1");
  }
  if (j.contains("point")) {
    const auto& p = j["point"];
    check_keys(p, "point", {"x", "q", "y", "r"});
    if (p.contains("x")) cfg.x = number(p["x"], "point.x");
    if (p.contains("q")) cfg.q = numbers(p["q"], "point.q");
    if (p.contains("y")) cfg.y = number(p["y"], "point.y");
    if (p.contains("r")) cfg.r = numbers(p["r"], "point.r");
  }
  if (j.contains("family")) cfg.family = parse_family(j["family"]);
  if (j.contains("stability")) cfg.stability = parse_stability(j["stability"]);
  if (j.contains("counterexample")) parse_counterexample(j["counterexample"], cfg);
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, "output", {"dir"});
    if (o.contains("dir")) cfg.out_dir = string(o["dir"], "output.dir");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

UtilityFunction make_utility(const UtilitySpec& spec) {
  UtilityFunction u = UtilityFunction::log();
  if (spec.family == "power") u = UtilityFunction::power(spec.alpha);
  if (spec.family == "tabulated") u = UtilityFunction::tabulated(spec.grid, spec.marginal);
  return spec.normalize ? u.normalized() : u;
}

BuiltProblem build_problem(const ExperimentConfig& config) {
  if (config.market.parent.empty()) throw Error(ErrorCode::kConfig, "config: no market given");
  FiniteMarket market = FiniteMarket::build(config.market);
  MarketModel model(martingale_measures(market), EndowmentBundle::from_spec(market.num_atoms(), config.market.endowments));
  return {std::move(market), std::move(model), make_utility(config.utility)};
}

PerturbationFamily make_family(const ExperimentConfig& config, const ProbabilityMeasure& p) {
  if (!config.family) throw Error(ErrorCode::kConfig, "config: no family given");
  DriftFamilySpec spec = config.family->drift;
  if (config.family->zeta_amplitude) {
    // uniform draws, centered under P and rescaled to the amplitude
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector z(static_cast<Eigen::Index>(p.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = unif(rng);
    z.array() -= p.expectation(z);
    const double top = z.cwiseAbs().maxCoeff();
    spec.zeta = top > 0.0 ? Vector(z * (*config.family->zeta_amplitude / top)) : z;
  }
  return drift_family(spec);
}

}  // namespace ustab
