#include "cglab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

namespace cglab {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::main: return "main";
    case Variant::robust_trial_order: return "robust_trial_order";
    case Variant::robust_composition: return "robust_composition";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (auto v : {Variant::main, Variant::robust_trial_order, Variant::robust_composition}) {
    if (variant_name(v) == name) return v;
  }
  return std::nullopt;
}

std::vector<District> default_l1_targets() {
  std::vector<District> t(kTrialDays, District::West);
  t[4] = District::North;
  t[9] = District::North;
  return t;
}

std::vector<District> default_l2_targets() { return std::vector<District>(kTrialDays, District::East); }

LevelSplit LevelConfig::split() const {
  if (!proportions.empty()) {
    LevelSplit s = truncate_and_rescale(proportions, rounding);
    s.lambda = lambda;
    return s;
  }
  return poisson_split(lambda, rounding);
}

MixtureBelief LevelConfig::belief(int level) const {
  if (level == 2 && !l2_belief.empty()) {
    const LevelSplit s = truncate_and_rescale(l2_belief, RoundingMode::largest_remainder);
    return {LevelK{2}, s.proportions};
  }
  return endowed_mixture(split(), LevelK{level});
}

namespace {

template <typename E>
struct EnumNames {
  E value;
  const char* name;
};

template <typename E, std::size_t N>
std::string enum_to(const EnumNames<E> (&names)[N], E v) {
  for (const auto& n : names) {
    if (n.value == v) return n.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E enum_from(const EnumNames<E> (&names)[N], const std::string& s, const char* what) {
  for (const auto& n : names) {
    if (s == n.name) return n.value;
  }
  throw Error(Errc::invalid_argument, std::string("unknown ") + what + ": " + s);
}

const EnumNames<DecisionMode> kDecisionModes[] = {{DecisionMode::argmax, "argmax"},
                                                  {DecisionMode::weighted_sample, "weighted_sample"}};
const EnumNames<RoundingMode> kRoundingModes[] = {{RoundingMode::exact_paper, "exact_paper"},
                                                  {RoundingMode::largest_remainder, "largest_remainder"}};
const EnumNames<L1Prediction> kL1Predictions[] = {{L1Prediction::display_argmax, "display_argmax"},
                                                  {L1Prediction::softmax, "softmax"}};
const EnumNames<ScoringMode> kScoringModes[] = {{ScoringMode::bernoulli, "bernoulli"},
                                                {ScoringMode::capacity_lottery, "capacity_lottery"}};
const EnumNames<Shrinkage> kShrinkages[] = {{Shrinkage::none, "none"}, {Shrinkage::pooled, "pooled"}};
const EnumNames<MetricPreset> kMetricPresets[] = {{MetricPreset::centroids, "centroids"},
                                                  {MetricPreset::collinear, "collinear"}};
const EnumNames<ScenarioSource::Kind> kSourceKinds[] = {{ScenarioSource::Kind::synthetic, "synthetic"},
                                                        {ScenarioSource::Kind::scenarios_file, "scenarios"},
                                                        {ScenarioSource::Kind::trips_file, "trips"}};

Json districts_json(const std::vector<District>& v) {
  Json j = Json::array();
  for (District d : v) j.push_back(district_name(d));
  return j;
}

std::vector<District> districts_from(const Json& j) {
  std::vector<District> out;
  for (const auto& e : j) {
    const auto d = parse_district(e.get<std::string>());
    if (!d) throw Error(Errc::invalid_argument, "unknown district: " + e.get<std::string>());
    out.push_back(*d);
  }
  return out;
}

Json levels_json(const LevelConfig& l) {
  return {{"lambda", l.lambda},
          {"proportions", l.proportions},
          {"l2_belief", l.l2_belief},
          {"rounding", enum_to(kRoundingModes, l.rounding)}};
}

LevelConfig levels_from(const Json& j, LevelConfig l) {
  l.lambda = j.value("lambda", l.lambda);
  l.proportions = j.value("proportions", l.proportions);
  l.l2_belief = j.value("l2_belief", l.l2_belief);
  if (j.contains("rounding")) l.rounding = enum_from(kRoundingModes, j.at("rounding").get<std::string>(), "rounding");
  return l;
}

Json roster_json(const RosterSize& r) { return {{"l1_per_cell", r.l1_per_cell}, {"l2_per_cell", r.l2_per_cell}}; }

RosterSize roster_from(const Json& j, RosterSize r) {
  r.l1_per_cell = j.value("l1_per_cell", r.l1_per_cell);
  r.l2_per_cell = j.value("l2_per_cell", r.l2_per_cell);
  return r;
}

Json synthetic_json(const SyntheticConfig& s) {
  Json dates = Json::array();
  for (Date d : s.dates) dates.push_back(format_date(d));
  return {{"drivers", s.drivers},
          {"days", s.days},
          {"start", format_date(s.start)},
          {"dates", dates},
          {"skew", s.skew},
          {"skew_concentration", s.skew_concentration},
          {"active_probability", s.active_probability},
          {"loyalty", s.loyalty},
          {"elsewhere_probability", s.elsewhere_probability},
          {"law", {{"intercept", s.law.intercept}, {"slope", s.law.slope}, {"sigma", s.law.sigma}}},
          {"bin_minutes", s.bin_minutes},
          {"seed", s.seed}};
}

SyntheticConfig synthetic_from(const Json& j) {
  SyntheticConfig s;
  s.drivers = j.value("drivers", s.drivers);
  s.days = j.value("days", s.days);
  if (j.contains("start")) s.start = parse_date(j.at("start").get<std::string>());
  if (j.contains("dates")) {
    for (const auto& d : j.at("dates")) s.dates.push_back(parse_date(d.get<std::string>()));
  }
  s.skew = j.value("skew", s.skew);
  s.skew_concentration = j.value("skew_concentration", s.skew_concentration);
  s.active_probability = j.value("active_probability", s.active_probability);
  s.loyalty = j.value("loyalty", s.loyalty);
  s.elsewhere_probability = j.value("elsewhere_probability", s.elsewhere_probability);
  if (j.contains("law")) {
    const auto& l = j.at("law");
    s.law.intercept = l.value("intercept", s.law.intercept);
    s.law.slope = l.value("slope", s.law.slope);
    s.law.sigma = l.value("sigma", s.law.sigma);
  }
  s.bin_minutes = j.value("bin_minutes", s.bin_minutes);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::invalid_argument, "config: " + m); };
  if (!days.empty() && days.size() != static_cast<std::size_t>(kTrialDays)) {
    fail("days must list exactly 16 trial dates");
  }
  std::array<int, kTrialDays> sorted = robust_order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < kTrialDays; ++i) {
    if (sorted[static_cast<std::size_t>(i)] != i) fail("robust_order must be a permutation of 0..15");
  }
  if (robust_order[0] != 0) fail("robust_order must keep the practice trial at position 0");
  if (cells.empty()) fail("at least one treatment cell is required");
  std::set<TreatmentCell> unique(cells.begin(), cells.end());
  if (unique.size() != cells.size()) fail("treatment cells must be distinct");
  for (const auto& r : {main_roster, robust_order_roster, robust_composition_roster}) {
    if (r.l1_per_cell < 0 || r.l2_per_cell < 0) fail("roster sizes must be non-negative");
  }
  if (!(roster_scale > 0.0)) fail("roster_scale must be positive");
  if (agents.temperature < 0.0) fail("temperature must be non-negative");
  for (double eta : {agents.learning_rate_bandit, agents.learning_rate_full}) {
    if (eta < 0.0 || eta > 1.0) fail("learning rates must lie in [0, 1]");
  }
  if (agents.frames_observed < 1) fail("frames_observed must be at least 1");
  if (agents.endowment_failure < 0.0 || agents.endowment_failure > 1.0) fail("endowment_failure must lie in [0, 1]");
  if (simulation.frames < 1 || simulation.outcome_replicates < 1 || simulation.system_replicates < 1) {
    fail("frame and replicate counts must be positive");
  }
  for (const auto* l : {&levels, &robust_composition_levels}) {
    if (l->proportions.empty() && !(l->lambda > 0.0)) fail("lambda must be positive");
    (void)l->split();
    (void)l->belief(2);
  }
  if (source.kind != ScenarioSource::Kind::synthetic && source.path.empty()) fail("source.path is required");
  if (source.kind == ScenarioSource::Kind::synthetic && source.calibrate) {
    if (source.l1_targets.size() != static_cast<std::size_t>(kTrialDays) ||
        source.l2_targets.size() != static_cast<std::size_t>(kTrialDays)) {
      fail("calibration targets must cover 16 trials");
    }
  }
}

RosterSize ExperimentConfig::roster(Variant v) const {
  const RosterSize base = v == Variant::main                 ? main_roster
                          : v == Variant::robust_trial_order ? robust_order_roster
                                                             : RosterSize{main_roster.l1_per_cell,
                                                                          robust_composition_roster.l2_per_cell};
  auto scaled = [&](int n) { return n == 0 ? 0 : std::max(1, static_cast<int>(std::lround(n * roster_scale))); };
  return {scaled(base.l1_per_cell), scaled(base.l2_per_cell)};
}

const LevelConfig& ExperimentConfig::level_config(Variant v) const {
  return v == Variant::robust_composition ? robust_composition_levels : levels;
}

std::array<int, kTrialDays> ExperimentConfig::trial_sequence(Variant v) const {
  std::array<int, kTrialDays> seq{};
  for (int i = 0; i < kTrialDays; ++i) seq[static_cast<std::size_t>(i)] = i;
  if (v == Variant::robust_trial_order) {
    for (int i = 0; i < kTrialDays; ++i) seq[static_cast<std::size_t>(robust_order[static_cast<std::size_t>(i)])] = i;
  }
  return seq;
}

void to_json(Json& j, const ExperimentConfig& c) {
  Json days = Json::array();
  for (Date d : c.days) days.push_back(format_date(d));
  Json cells = Json::array();
  for (const auto& cell : c.cells) cells.push_back(cell_name(cell));
  j = Json::object();
  j["source"] = {{"kind", enum_to(kSourceKinds, c.source.kind)},
                 {"path", c.source.path},
                 {"decision_mode", enum_to(kDecisionModes, c.source.decision_mode)},
                 {"synthetic", synthetic_json(c.source.synthetic)},
                 {"calibrate", c.source.calibrate},
                 {"l1_targets", districts_json(c.source.l1_targets)},
                 {"l2_targets", districts_json(c.source.l2_targets)},
                 {"calibration_min_share", c.source.calibration_min_share}};
  j["days"] = days;
  j["levels"] = levels_json(c.levels);
  j["robust_composition_levels"] = levels_json(c.robust_composition_levels);
  j["robust_order"] = c.robust_order;
  j["cells"] = cells;
  j["roster"] = {{"main", roster_json(c.main_roster)},
                 {"robust_trial_order", roster_json(c.robust_order_roster)},
                 {"robust_composition", roster_json(c.robust_composition_roster)},
                 {"scale", c.roster_scale}};
  j["agents"] = {{"temperature", c.agents.temperature},
                 {"learning_rate_bandit", c.agents.learning_rate_bandit},
                 {"learning_rate_full", c.agents.learning_rate_full},
                 {"frames_observed", c.agents.frames_observed},
                 {"endowment_failure", c.agents.endowment_failure},
                 {"l1_prediction", enum_to(kL1Predictions, c.agents.l1_prediction)},
                 {"l1_prediction_temperature", c.agents.l1_prediction_temperature}};
  j["simulation"] = {{"frames", c.simulation.frames},
                     {"outcome_replicates", c.simulation.outcome_replicates},
                     {"system_replicates", c.simulation.system_replicates},
                     {"coefficient_uncertainty", c.simulation.coefficient_uncertainty},
                     {"scoring", enum_to(kScoringModes, c.simulation.scoring)},
                     {"competitors_exclude_self", c.simulation.competitors_exclude_self}};
  j["model"] = {{"shrinkage", enum_to(kShrinkages, c.model.shrinkage)}, {"path", c.model.path}};
  j["metric"] = enum_to(kMetricPresets, c.metric);
  j["welfare"] = {{"initial_penalty", c.welfare.initial_penalty},
                  {"penalty_growth", c.welfare.penalty_growth},
                  {"violation_tolerance", c.welfare.violation_tolerance},
                  {"step_tolerance", c.welfare.step_tolerance},
                  {"restarts", c.welfare.restarts},
                  {"max_outer_iterations", c.welfare.max_outer_iterations},
                  {"max_inner_iterations", c.welfare.max_inner_iterations}};
  j["seed"] = c.seed;
}

void from_json(const Json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  try {
    if (j.contains("source")) {
      const auto& s = j.at("source");
      if (s.contains("kind")) c.source.kind = enum_from(kSourceKinds, s.at("kind").get<std::string>(), "source kind");
      c.source.path = s.value("path", c.source.path);
      if (s.contains("decision_mode")) {
        c.source.decision_mode = enum_from(kDecisionModes, s.at("decision_mode").get<std::string>(), "decision mode");
      }
      if (s.contains("synthetic")) c.source.synthetic = synthetic_from(s.at("synthetic"));
      c.source.calibrate = s.value("calibrate", c.source.calibrate);
      if (s.contains("l1_targets")) c.source.l1_targets = districts_from(s.at("l1_targets"));
      if (s.contains("l2_targets")) c.source.l2_targets = districts_from(s.at("l2_targets"));
      c.source.calibration_min_share = s.value("calibration_min_share", c.source.calibration_min_share);
    }
    if (j.contains("days")) {
      for (const auto& d : j.at("days")) c.days.push_back(parse_date(d.get<std::string>()));
    }
    if (j.contains("levels")) c.levels = levels_from(j.at("levels"), c.levels);
    if (j.contains("robust_composition_levels")) {
      c.robust_composition_levels = levels_from(j.at("robust_composition_levels"), c.robust_composition_levels);
    }
    if (j.contains("robust_order")) c.robust_order = j.at("robust_order").get<std::array<int, kTrialDays>>();
    if (j.contains("cells")) {
      c.cells.clear();
      for (const auto& e : j.at("cells")) {
        const auto cell = parse_cell(e.get<std::string>());
        if (!cell) throw Error(Errc::invalid_argument, "unknown treatment cell: " + e.get<std::string>());
        c.cells.push_back(*cell);
      }
    }
    if (j.contains("roster")) {
      const auto& r = j.at("roster");
      if (r.contains("main")) c.main_roster = roster_from(r.at("main"), c.main_roster);
      if (r.contains("robust_trial_order")) c.robust_order_roster = roster_from(r.at("robust_trial_order"), c.robust_order_roster);
      if (r.contains("robust_composition")) {
        c.robust_composition_roster = roster_from(r.at("robust_composition"), c.robust_composition_roster);
      }
      c.roster_scale = r.value("scale", c.roster_scale);
    }
    if (j.contains("agents")) {
      const auto& a = j.at("agents");
      c.agents.temperature = a.value("temperature", c.agents.temperature);
      c.agents.learning_rate_bandit = a.value("learning_rate_bandit", c.agents.learning_rate_bandit);
      c.agents.learning_rate_full = a.value("learning_rate_full", c.agents.learning_rate_full);
      c.agents.frames_observed = a.value("frames_observed", c.agents.frames_observed);
      c.agents.endowment_failure = a.value("endowment_failure", c.agents.endowment_failure);
      if (a.contains("l1_prediction")) {
        c.agents.l1_prediction = enum_from(kL1Predictions, a.at("l1_prediction").get<std::string>(), "l1_prediction");
      }
      c.agents.l1_prediction_temperature = a.value("l1_prediction_temperature", c.agents.l1_prediction_temperature);
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      c.simulation.frames = s.value("frames", c.simulation.frames);
      c.simulation.outcome_replicates = s.value("outcome_replicates", c.simulation.outcome_replicates);
      c.simulation.system_replicates = s.value("system_replicates", c.simulation.system_replicates);
      c.simulation.coefficient_uncertainty = s.value("coefficient_uncertainty", c.simulation.coefficient_uncertainty);
      if (s.contains("scoring")) c.simulation.scoring = enum_from(kScoringModes, s.at("scoring").get<std::string>(), "scoring");
      c.simulation.competitors_exclude_self = s.value("competitors_exclude_self", c.simulation.competitors_exclude_self);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.contains("shrinkage")) c.model.shrinkage = enum_from(kShrinkages, m.at("shrinkage").get<std::string>(), "shrinkage");
      c.model.path = m.value("path", c.model.path);
    }
    if (j.contains("metric")) c.metric = enum_from(kMetricPresets, j.at("metric").get<std::string>(), "metric preset");
    if (j.contains("welfare")) {
      const auto& w = j.at("welfare");
      c.welfare.initial_penalty = w.value("initial_penalty", c.welfare.initial_penalty);
      c.welfare.penalty_growth = w.value("penalty_growth", c.welfare.penalty_growth);
      c.welfare.violation_tolerance = w.value("violation_tolerance", c.welfare.violation_tolerance);
      c.welfare.step_tolerance = w.value("step_tolerance", c.welfare.step_tolerance);
      c.welfare.restarts = w.value("restarts", c.welfare.restarts);
      c.welfare.max_outer_iterations = w.value("max_outer_iterations", c.welfare.max_outer_iterations);
      c.welfare.max_inner_iterations = w.value("max_inner_iterations", c.welfare.max_inner_iterations);
    }
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config: ") + e.what());
  }
  c.validate();
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = read_json_file(path).get<ExperimentConfig>();
  c.base_dir = std::filesystem::path(path).parent_path().string();
  return c;
}

namespace {

Json effective_json(const ExperimentConfig& c, Variant v) {
  Json j = c;
  j["levels"] = levels_json(c.level_config(v));
  j.erase("robust_composition_levels");
  j.erase("robust_order");
  j["trial_sequence"] = c.trial_sequence(v);
  const RosterSize r = c.roster(v);
  j["roster"] = roster_json(r);
  j["variant"] = variant_name(v);
  return j;
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& c, Variant v) { return fnv1a(effective_json(c, v).dump()); }

std::uint64_t l1_config_hash(const ExperimentConfig& c, Variant v) {
  Json j = effective_json(c, v);
  j["roster"].erase("l2_per_cell");
  j.erase("levels");
  j.erase("variant");
  j.erase("welfare");
  j["simulation"].erase("system_replicates");
  j["simulation"].erase("outcome_replicates");
  j["agents"].erase("endowment_failure");
  j["agents"].erase("l1_prediction");
  j["agents"].erase("l1_prediction_temperature");
  return fnv1a(j.dump());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace cglab
