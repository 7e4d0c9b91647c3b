#include "cglab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cglab/log.hpp"
#include "cglab/report.hpp"
#include "cglab/synthetic.hpp"
#include "cglab/welfare.hpp"

namespace cglab {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagDisplay = 1;
constexpr std::uint64_t kTagRoster = 2;
constexpr std::uint64_t kTagDecide = 3;
constexpr std::uint64_t kTagScore = 4;
constexpr std::uint64_t kTagOutcome = 5;
constexpr std::uint64_t kTagSystem = 6;
constexpr std::uint64_t kTagWelfare = 7;
constexpr std::uint64_t kTagIngest = 8;

std::uint64_t cell_index(const TreatmentCell& cell) {
  for (std::size_t i = 0; i < kTreatmentCells.size(); ++i) {
    if (kTreatmentCells[i] == cell) return i;
  }
  return kTreatmentCells.size();
}

std::uint64_t day_key(Date d) { return static_cast<std::uint64_t>(d.time_since_epoch().count()); }

std::string resolve(const ExperimentConfig& c, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || c.base_dir.empty()) return path;
  return (fs::path(c.base_dir) / path).string();
}

std::vector<Date> generated_weekdays(const SyntheticConfig& sc) {
  std::vector<Date> out;
  if (!sc.dates.empty()) {
    for (Date d : sc.dates) {
      if (is_weekday(d)) out.push_back(d);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  for (Date d = sc.start; static_cast<int>(out.size()) < sc.days; d += std::chrono::days{1}) {
    if (is_weekday(d)) out.push_back(d);
  }
  return out;
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::l1: return "l1";
    case Stage::l2: return "l2";
    case Stage::system: return "system";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : {Stage::l1, Stage::l2, Stage::system}) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

const DisplayPayload& PreparedExperiment::display(int day, DisplayKind kind) const {
  const auto i = static_cast<std::size_t>(day);
  return kind == DisplayKind::hops_frames ? hops.at(i) : statics.at(i);
}

long PreparedExperiment::drivers(int day) const {
  return std::lround(scenarios.at(static_cast<std::size_t>(day)).deduced_flow.total());
}

long PreparedExperiment::competitors(int day) const {
  return drivers(day) - (config.simulation.competitors_exclude_self ? 1 : 0);
}

std::vector<DecisionScenario> ingest_corpus(std::span<const TripRecord> trips, DecisionMode mode, std::uint64_t seed) {
  const Strata strata = stratify_trips(trips);
  const auto days = select_target_days(strata, [](Date d) { return is_weekday(d); });
  std::vector<DecisionScenario> out;
  for (Date d : days) {
    try {
      out.push_back(ingest_day(strata, d, PipelineOptions{}, mode,
                               derive_seed(seed, {kTagIngest, day_key(d)})));
    } catch (const Error& e) {
      if (e.code() != Errc::empty_scenario) throw;
      warn("skipping " + format_date(d) + ": " + e.what());
    }
  }
  return out;
}

SyntheticConfig calibrated_synthetic(const ExperimentConfig& config, std::vector<Date>& trial_days) {
  const auto& src = config.source;
  SyntheticConfig sc = src.synthetic;
  const auto weekdays = generated_weekdays(sc);
  if (trial_days.empty()) {
    const int lookback = PipelineOptions{}.lookback_days;
    const int usable = static_cast<int>(weekdays.size()) - lookback;
    if (usable < kTrialDays) {
      throw Error(Errc::invalid_argument, "synthetic corpus too short for 16 trial days");
    }
    for (int k = 0; k < kTrialDays; ++k) {
      trial_days.push_back(weekdays[static_cast<std::size_t>(lookback + k * usable / kTrialDays)]);
    }
  }
  if (src.calibrate) {
    const double n_eff = sc.drivers * sc.active_probability * (1.0 - sc.elsewhere_probability);
    const auto belief = config.levels.belief(2).proportions;
    for (int k = 0; k < kTrialDays; ++k) {
      const auto i = static_cast<std::size_t>(k);
      sc.day_skew[trial_days[i]] =
          calibrate_day_skew(sc.law, n_eff, {src.l1_targets[i], src.l2_targets[i]}, belief, src.calibration_min_share);
    }
  }
  return sc;
}

PreparedExperiment prepare(const ExperimentConfig& config) {
  config.validate();
  std::vector<DecisionScenario> all;
  std::vector<Date> trial_days = config.days;
  const auto& src = config.source;

  if (src.kind == ScenarioSource::Kind::scenarios_file) {
    all = scenarios_from_json(read_json_file(resolve(config, src.path)));
    if (trial_days.empty()) {
      if (all.size() < static_cast<std::size_t>(kTrialDays)) {
        throw Error(Errc::invalid_argument, "scenario file holds fewer than 16 days");
      }
      for (int i = 0; i < kTrialDays; ++i) trial_days.push_back(all[static_cast<std::size_t>(i)].day);
    }
  } else {
    std::vector<TripRecord> trips;
    if (src.kind == ScenarioSource::Kind::trips_file) {
      if (trial_days.empty()) throw Error(Errc::invalid_argument, "config: days are required for a trip source");
      trips = read_trips_file(resolve(config, src.path));
    } else {
      const SyntheticConfig sc = calibrated_synthetic(config, trial_days);
      trips = generate_synthetic(sc);
    }
    all = ingest_corpus(trips, src.decision_mode, config.seed);
  }

  std::vector<DecisionScenario> trials;
  for (Date d : trial_days) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const DecisionScenario& s) { return s.day == d; });
    if (it == all.end()) throw Error(Errc::invalid_argument, "trial day " + format_date(d) + " has no scenario");
    trials.push_back(*it);
  }

  CounterfactualModel model;
  if (!config.model.path.empty()) {
    model = read_json_file(resolve(config, config.model.path)).get<CounterfactualModel>();
  } else {
    model = fit(training_data(all), config.model.shrinkage);
  }
  PreparedExperiment prep = prepare(config, std::move(trials), std::move(model));
  prep.training_days = config.model.path.empty() ? all.size() : 0;
  return prep;
}

PreparedExperiment prepare(const ExperimentConfig& config, std::vector<DecisionScenario> scenarios,
                           CounterfactualModel model) {
  config.validate();
  model.validate();
  if (scenarios.size() != static_cast<std::size_t>(kTrialDays)) {
    throw Error(Errc::invalid_argument, "an experiment needs 16 trial scenarios");
  }
  PreparedExperiment prep;
  prep.config = config;
  prep.scenarios = std::move(scenarios);
  prep.model = std::move(model);
  prep.metric = config.metric == MetricPreset::collinear ? GroundMetric::collinear()
                                                         : GroundMetric::from_action_set();
  SimulationOptions opts;
  opts.frames = config.simulation.frames;
  opts.coefficient_uncertainty = config.simulation.coefficient_uncertainty;
  for (std::size_t k = 0; k < prep.scenarios.size(); ++k) {
    const auto set = simulate_hypothetical_outcomes(prep.scenarios[k], prep.model, opts,
                                                    derive_seed(config.seed, {kTagDisplay, k}));
    prep.hops.push_back(summarize_display(set, DisplayKind::hops_frames));
    prep.statics.push_back(summarize_display(set, DisplayKind::static_point));
  }
  return prep;
}

std::span<const District> ResponsePool::get(int day, const TreatmentCell& cell) const {
  const auto it = decisions.find({day, cell_name(cell)});
  if (it == decisions.end()) return {};
  return it->second;
}

namespace {

Json pool_decisions_json(const ResponsePool& p) {
  Json arr = Json::array();
  for (const auto& [key, ds] : p.decisions) {
    Json names = Json::array();
    for (District d : ds) names.push_back(district_name(d));
    arr.push_back({{"trial", key.first}, {"cell", key.second}, {"decisions", names}});
  }
  return arr;
}

}  // namespace

std::uint64_t ResponsePool::content_hash() const { return fnv1a(pool_decisions_json(*this).dump()); }

void to_json(Json& j, const ResponsePool& p) {
  j = {{"schema", "cglab.pool/1"},
       {"level", p.level},
       {"config_hash", hex64(p.config_hash)},
       {"pool_hash", hex64(p.content_hash())},
       {"pools", pool_decisions_json(p)}};
}

void from_json(const Json& j, ResponsePool& p) {
  p = ResponsePool{};
  p.level = j.at("level").get<int>();
  p.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  for (const auto& e : j.at("pools")) {
    std::vector<District> ds;
    for (const auto& n : e.at("decisions")) {
      const auto d = parse_district(n.get<std::string>());
      if (!d) throw Error(Errc::invalid_argument, "bad district in pool");
      ds.push_back(*d);
    }
    p.decisions[{e.at("trial").get<int>(), e.at("cell").get<std::string>()}] = std::move(ds);
  }
}

std::vector<AgentState> make_roster(const ExperimentConfig& config, Variant variant, int level) {
  const RosterSize size = config.roster(variant);
  const int per_cell = level == 1 ? size.l1_per_cell : size.l2_per_cell;
  const LevelConfig& lc = config.level_config(variant);
  const MixtureBelief belief = lc.belief(level);
  std::vector<AgentState> out;
  const auto n_cells = config.cells.size();
  for (std::size_t g = 0; g < static_cast<std::size_t>(per_cell) * n_cells; ++g) {
    const TreatmentCell& cell = config.cells[g % n_cells];
    const std::size_t a = g / n_cells;
    AgentState s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "L%d-%s-%03zu", level, cell_name(cell).c_str(), a);
    s.id = buf;
    s.level = LevelK{level};
    s.belief = belief;
    s.temperature = config.agents.temperature;
    s.learning_rate = cell.feedback == FeedbackStructure::full ? config.agents.learning_rate_full
                                                               : config.agents.learning_rate_bandit;
    s.perception = cell.display == DisplayKind::hops_frames
                       ? PerceptionModel{PerceptionKind::sampled_frames, config.agents.frames_observed}
                       : PerceptionModel{PerceptionKind::exact_static, config.agents.frames_observed};
    s.l1_prediction = config.agents.l1_prediction;
    s.l1_prediction_temperature = config.agents.l1_prediction_temperature;
    if (level == 2) {
      Rng rng = make_rng(derive_seed(config.seed, {kTagRoster, 2, cell_index(cell), a}));
      s.acts_as_l1 = bernoulli(rng, config.agents.endowment_failure);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

TreatmentCell cell_of(const std::string& agent_id, const std::vector<TreatmentCell>& cells) {
  for (const auto& c : cells) {
    if (agent_id.find("-" + cell_name(c) + "-") != std::string::npos) return c;
  }
  throw Error(Errc::invalid_argument, "agent id names no configured cell: " + agent_id);
}

}  // namespace

LevelOutcome stage_outcome(const PreparedExperiment& prep, Variant variant, int level, int day,
                           const TreatmentCell& cell, const ResponsePool* l1_pool) {
  const auto& cfg = prep.config;
  const auto& scenario = prep.scenarios.at(static_cast<std::size_t>(day));
  if (level == 1) {
    return level_specific_outcome(LevelK{1}, scenario, {}, prep.model, MixtureBelief{LevelK{1}, {1.0}}, 1, 0);
  }
  if (l1_pool == nullptr) throw Error(Errc::staging_violation, "staging violation: no L1 pool");
  return level_specific_outcome(LevelK{2}, scenario, l1_pool->get(day, cell), prep.model,
                                cfg.level_config(variant).belief(2), cfg.simulation.outcome_replicates,
                                derive_seed(cfg.seed, {kTagOutcome, static_cast<std::uint64_t>(day), cell_index(cell)}));
}

StageResult run_stage(const PreparedExperiment& prep, Variant variant, Stage stage,
                      const ResponsePool* l1_pool, std::optional<std::vector<AgentState>> roster) {
  if (stage == Stage::system) throw Error(Errc::invalid_argument, "run_system runs the system stage");
  const auto& cfg = prep.config;
  const int level = stage == Stage::l1 ? 1 : 2;
  if (level == 2) {
    if (l1_pool == nullptr || l1_pool->decisions.empty()) {
      throw Error(Errc::staging_violation, "staging violation: the L2 stage needs a frozen L1 pool");
    }
    if (l1_pool->config_hash != l1_config_hash(cfg, variant)) {
      throw Error(Errc::config_mismatch, "L1 pool was produced under a different config");
    }
  }

  StageResult result;
  result.agents = roster ? std::move(*roster) : make_roster(cfg, variant, level);
  result.pool.level = level;
  result.pool.config_hash = level == 1 ? l1_config_hash(cfg, variant) : config_hash(cfg, variant);

  const auto seq = cfg.trial_sequence(variant);
  std::vector<std::vector<std::size_t>> by_cell(cfg.cells.size());
  for (std::size_t i = 0; i < result.agents.size(); ++i) {
    const TreatmentCell c = cell_of(result.agents[i].id, cfg.cells);
    const auto pos = std::find(cfg.cells.begin(), cfg.cells.end(), c) - cfg.cells.begin();
    by_cell[static_cast<std::size_t>(pos)].push_back(i);
  }

  for (int position = 1; position < kTrialDays; ++position) {
    const int day = seq[static_cast<std::size_t>(position)];
    const DecisionContext ctx{static_cast<double>(prep.drivers(day)), prep.competitors(day)};

    for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
      const TreatmentCell& cell = cfg.cells[ci];
      const auto cidx = cell_index(cell);
      const LevelOutcome outcome = stage_outcome(prep, variant, level, day, cell, l1_pool);
      const auto best = best_responses(outcome);
      const FlowDistribution realized_c = outcome.expected_flow.rescaled(static_cast<double>(ctx.competitor_count));
      const DisplayPayload& display = prep.display(day, cell.display);

      const auto& members = by_cell[ci];
      std::vector<Decision> decisions;
      decisions.reserve(members.size());
      for (std::size_t idx : members) {
        const AgentState& agent = result.agents[idx];
        Rng rng = make_rng(derive_seed(cfg.seed, {kTagDecide, fnv1a(agent.id), static_cast<std::uint64_t>(day)}));
        const Perceived perceived = perceive(display, agent.perception, rng);
        decisions.push_back(decide(agent, perceived, ctx, prep.model, rng));
      }

      std::vector<Score> scores;
      if (cfg.simulation.scoring == ScoringMode::capacity_lottery) {
        std::vector<District> choices;
        for (const auto& d : decisions) choices.push_back(d.chosen);
        Rng rng = make_rng(derive_seed(cfg.seed, {kTagScore, static_cast<std::uint64_t>(level), cidx,
                                                  static_cast<std::uint64_t>(day)}));
        scores = score_capacity_lottery(choices, outcome, rng);
      } else {
        for (std::size_t k = 0; k < members.size(); ++k) {
          Rng rng = make_rng(derive_seed(cfg.seed, {kTagScore, fnv1a(result.agents[members[k]].id),
                                                    static_cast<std::uint64_t>(day)}));
          scores.push_back(score_decision(decisions[k].chosen, outcome, rng));
        }
      }

      auto& pool = result.pool.decisions[{day, cell_name(cell)}];
      for (std::size_t k = 0; k < members.size(); ++k) {
        AgentState& agent = result.agents[members[k]];
        const Decision& decision = decisions[k];
        FeedbackPayload feedback = make_feedback(cell.feedback, scores[k], display, outcome, decision.anticipated_flow);
        agent = update_beliefs(agent, decision, feedback);

        TrialRecord rec;
        rec.agent_id = agent.id;
        rec.trial = position;
        rec.day_index = day;
        rec.cell = cell;
        rec.level = level;
        rec.acts_as_l1 = agent.acts_as_l1;
        rec.decision = decision;
        rec.feedback = std::move(feedback);
        rec.running_reward = agent.cumulative_reward;
        rec.pickups = agent.pickups;
        rec.best_set = best;
        rec.best_response = best_response_indicator(decision.chosen, outcome);
        rec.anticipation_error = ctx.competitor_count > 0
                                     ? anticipation_error(decision.anticipated_flow, realized_c, prep.metric)
                                     : 0.0;
        result.records.push_back(std::move(rec));
        pool.push_back(decision.chosen);
      }
    }
  }
  return result;
}

SystemResult run_system(const PreparedExperiment& prep, Variant variant, const ResponsePool* l1_pool,
                        const ResponsePool* l2_pool) {
  if (l1_pool == nullptr || l2_pool == nullptr || l1_pool->decisions.empty() || l2_pool->decisions.empty()) {
    throw Error(Errc::staging_violation, "staging violation: system outcomes need frozen L1 and L2 pools");
  }
  const auto& cfg = prep.config;
  const LevelSplit split = cfg.level_config(variant).split();
  const auto seq = cfg.trial_sequence(variant);
  SystemResult result;
  for (int position = 1; position < kTrialDays; ++position) {
    const int day = seq[static_cast<std::size_t>(position)];
    const auto& scenario = prep.scenarios[static_cast<std::size_t>(day)];
    const double n = static_cast<double>(prep.drivers(day));

    bool relaxed = false;
    const WelfareBounds bounds = feasible_bounds(prep.model, n, relaxed);
    const WelfareReport welfare =
        max_welfare(n, prep.model, bounds, cfg.welfare, derive_seed(cfg.seed, {kTagWelfare, static_cast<std::uint64_t>(day)}));

    for (const auto& cell : cfg.cells) {
      SystemCell sc;
      sc.day = day;
      sc.position = position;
      sc.cell = cell;
      sc.displayed = prep.display(day, cell.display).mean_flow;
      sc.outcomes = system_outcome(scenario, split, l1_pool->get(day, cell), l2_pool->get(day, cell), prep.model,
                                   cfg.simulation.system_replicates,
                                   derive_seed(cfg.seed, {kTagSystem, static_cast<std::uint64_t>(day), cell_index(cell)}));
      sc.max_pickups = welfare.max_pickups;
      sc.bounds_relaxed = relaxed;
      result.cells.push_back(std::move(sc));
    }
  }
  return result;
}

void to_json(Json& j, const SystemResult& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json reps = Json::array();
    for (const auto& rep : c.outcomes.replicates) {
      reps.push_back({rep.flow.at(0), rep.flow.at(1), rep.flow.at(2), rep.pickups[0], rep.pickups[1], rep.pickups[2]});
    }
    cells.push_back({{"trial", c.day},
                     {"position", c.position},
                     {"cell", cell_name(c.cell)},
                     {"displayed", c.displayed},
                     {"max_pickups", c.max_pickups},
                     {"bounds_relaxed", c.bounds_relaxed},
                     {"level_counts", c.outcomes.level_counts},
                     {"replicates", std::move(reps)}});
  }
  j = {{"schema", "cglab.system/1"}, {"cells", std::move(cells)}};
}

void from_json(const Json& j, SystemResult& r) {
  r = SystemResult{};
  for (const auto& cj : j.at("cells")) {
    SystemCell c;
    c.day = cj.at("trial").get<int>();
    c.position = cj.at("position").get<int>();
    const auto cell = parse_cell(cj.at("cell").get<std::string>());
    if (!cell) throw Error(Errc::invalid_argument, "bad cell in system outcomes");
    c.cell = *cell;
    c.displayed = cj.at("displayed").get<FlowDistribution>();
    c.max_pickups = cj.at("max_pickups").get<double>();
    c.bounds_relaxed = cj.at("bounds_relaxed").get<bool>();
    c.outcomes.level_counts = cj.at("level_counts").get<std::vector<long>>();
    for (const auto& rj : cj.at("replicates")) {
      SystemReplicate rep;
      rep.flow = FlowDistribution(PerDistrict{rj.at(0).get<double>(), rj.at(1).get<double>(), rj.at(2).get<double>()});
      rep.pickups = {rj.at(3).get<double>(), rj.at(4).get<double>(), rj.at(5).get<double>()};
      c.outcomes.replicates.push_back(rep);
    }
    r.cells.push_back(std::move(c));
  }
}

std::string event_line(const TrialRecord& r, Stage stage, int position, long competitors) {
  Json best = Json::array();
  for (District d : r.best_set) best.push_back(district_name(d));
  const Json j = {{"schema", kEventSchema},
                  {"stage", stage_name(stage)},
                  {"agent", r.agent_id},
                  {"level", r.level},
                  {"acts_as_l1", r.acts_as_l1},
                  {"cell", cell_name(r.cell)},
                  {"position", position},
                  {"trial", r.day_index},
                  {"chosen", district_name(r.decision.chosen)},
                  {"anticipated_flow", r.decision.anticipated_flow},
                  {"competitors", competitors},
                  {"best_responses", best},
                  {"best_response", r.best_response},
                  {"anticipation_error", r.anticipation_error},
                  {"feedback", r.feedback},
                  {"running_reward", r.running_reward.value},
                  {"pickups", r.pickups}};
  return j.dump();
}

std::string variant_dir(const std::string& root, Variant variant) {
  return (fs::path(root) / std::string(variant_name(variant))).string();
}

namespace {

void write_events(const std::string& path, const PreparedExperiment& prep, const StageResult& r, Stage stage) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  for (const auto& rec : r.records) {
    out << event_line(rec, stage, rec.trial, prep.competitors(rec.day_index)) << '\n';
  }
}

Json load_manifest(const std::string& dir, const ExperimentConfig& cfg, Variant variant) {
  const auto path = fs::path(dir) / "manifest.json";
  const std::string hash = hex64(config_hash(cfg, variant));
  if (fs::exists(path)) {
    Json m = read_json_file(path.string());
    if (m.value("config_hash", "") == hash) return m;
  }
  return {{"schema", kManifestSchema},
          {"variant", variant_name(variant)},
          {"config_hash", hash},
          {"l1_config_hash", hex64(l1_config_hash(cfg, variant))},
          {"stages", {{"l1", false}, {"l2", false}, {"system", false}}},
          {"artifacts", {{"config", "config.json"}, {"reports", "reports"}}},
          {"pool_hashes", Json::object()},
          {"seeds", {{"base", cfg.seed}}}};
}

ResponsePool load_pool(const std::string& dir, const Json& manifest, const char* key) {
  const auto& artifacts = manifest.at("artifacts");
  if (!artifacts.contains(key)) {
    throw Error(Errc::staging_violation, std::string("staging violation: missing ") + key);
  }
  const auto path = fs::path(dir) / artifacts.at(key).get<std::string>();
  if (!fs::exists(path)) throw Error(Errc::staging_violation, "staging violation: " + path.string() + " is missing");
  return read_json_file(path.string()).get<ResponsePool>();
}

}  // namespace

Json run_stage_on_disk(const PreparedExperiment& prep, Variant variant, Stage stage, const std::string& root) {
  const auto& cfg = prep.config;
  const std::string dir = variant_dir(root, variant);
  fs::create_directories(dir);
  Json manifest = load_manifest(dir, cfg, variant);
  write_json_file((fs::path(dir) / "config.json").string(), {{"variant", variant_name(variant)}, {"config", cfg}});
  auto& stages = manifest["stages"];
  auto& artifacts = manifest["artifacts"];

  if (stage == Stage::l1) {
    if (variant == Variant::robust_composition) {
      const std::string main_dir = variant_dir(root, Variant::main);
      const auto pool_path = fs::path(main_dir) / "l1_pool.json";
      const auto events_path = fs::path(main_dir) / "events_l1.ndjson";
      if (!fs::exists(pool_path) || !fs::exists(events_path)) {
        throw Error(Errc::staging_violation, "staging violation: robust_composition needs the main L1 pool");
      }
      const auto pool = read_json_file(pool_path.string()).get<ResponsePool>();
      if (pool.config_hash != l1_config_hash(cfg, variant)) {
        throw Error(Errc::config_mismatch, "main L1 pool was produced under a different L1 config");
      }
      artifacts["l1_pool"] = "../main/l1_pool.json";
      artifacts["l1_events"] = "../main/events_l1.ndjson";
      manifest["pool_hashes"]["l1"] = hex64(pool.content_hash());
    } else {
      const StageResult r = run_stage(prep, variant, Stage::l1);
      write_events((fs::path(dir) / "events_l1.ndjson").string(), prep, r, Stage::l1);
      write_json_file((fs::path(dir) / "l1_pool.json").string(), r.pool);
      artifacts["l1_pool"] = "l1_pool.json";
      artifacts["l1_events"] = "events_l1.ndjson";
      manifest["pool_hashes"]["l1"] = hex64(r.pool.content_hash());
    }
    manifest["seeds"]["l1"] = cfg.seed;
    stages["l1"] = true;
    stages["l2"] = false;
    stages["system"] = false;
  } else if (stage == Stage::l2) {
    if (!stages.value("l1", false)) throw Error(Errc::staging_violation, "staging violation: run the l1 stage first");
    const ResponsePool l1 = load_pool(dir, manifest, "l1_pool");
    const StageResult r = run_stage(prep, variant, Stage::l2, &l1);
    write_events((fs::path(dir) / "events_l2.ndjson").string(), prep, r, Stage::l2);
    write_json_file((fs::path(dir) / "l2_pool.json").string(), r.pool);
    artifacts["l2_pool"] = "l2_pool.json";
    artifacts["l2_events"] = "events_l2.ndjson";
    manifest["pool_hashes"]["l2"] = hex64(r.pool.content_hash());
    manifest["seeds"]["l2"] = cfg.seed;
    stages["l2"] = true;
    stages["system"] = false;
  } else {
    if (!stages.value("l1", false) || !stages.value("l2", false)) {
      throw Error(Errc::staging_violation, "staging violation: run the l1 and l2 stages first");
    }
    const ResponsePool l1 = load_pool(dir, manifest, "l1_pool");
    const ResponsePool l2 = load_pool(dir, manifest, "l2_pool");
    const SystemResult r = run_system(prep, variant, &l1, &l2);
    write_json_file((fs::path(dir) / "system.json").string(), r);
    artifacts["system"] = "system.json";
    manifest["seeds"]["system"] = cfg.seed;
    stages["system"] = true;
  }
  write_json_file((fs::path(dir) / "manifest.json").string(), manifest);
  return manifest;
}

Json run_replication(const PreparedExperiment& prep, Variant variant, const std::string& root) {
  run_stage_on_disk(prep, variant, Stage::l1, root);
  run_stage_on_disk(prep, variant, Stage::l2, root);
  Json manifest = run_stage_on_disk(prep, variant, Stage::system, root);
  export_report((fs::path(variant_dir(root, variant)) / "manifest.json").string());
  return manifest;
}

}  // namespace cglab
