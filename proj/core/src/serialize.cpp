#include "cglab/serialize.hpp"

#include <fstream>
#include <sstream>

namespace cglab {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::invalid_argument, what); }

District district_from_json(const Json& j) {
  const auto d = parse_district(j.get<std::string>());
  if (!d) bad("unknown district: " + j.get<std::string>());
  return *d;
}

Classification parse_classification(const std::string& s) {
  for (auto c : {Classification::pickup_in_action_ca, Classification::pickup_elsewhere,
                 Classification::no_pickup}) {
    if (classification_name(c) == s) return c;
  }
  bad("unknown classification: " + s);
}

PriorSource parse_prior_source(const std::string& s) {
  for (auto p : {PriorSource::observed, PriorSource::own, PriorSource::population, PriorSource::uniform}) {
    if (prior_source_name(p) == s) return p;
  }
  bad("unknown prior source: " + s);
}

}  // namespace

Json per_district_json(const PerDistrict& v) {
  Json j = Json::object();
  for (District d : kAllDistricts) j[std::string(district_name(d))] = v[index(d)];
  return j;
}

PerDistrict per_district_from_json(const Json& j) {
  if (!j.is_object()) bad("per-district value must be an object");
  PerDistrict out{};
  for (District d : kAllDistricts) {
    const std::string key(district_name(d));
    if (!j.contains(key)) bad("missing district " + key);
    out[index(d)] = j.at(key).get<double>();
  }
  return out;
}

void to_json(Json& j, const FlowDistribution& f) { j = per_district_json(f.counts()); }
void from_json(const Json& j, FlowDistribution& f) { f = FlowDistribution(per_district_from_json(j)); }

void to_json(Json& j, const DecisionScenario& s) {
  j = Json::object();
  j["day"] = format_date(s.day);
  j["total_drivers"] = s.total_drivers;
  j["deduced_flow"] = s.deduced_flow;
  j["historical_pickups"] = per_district_json(s.historical_pickups);
  Json candidates = Json::array();
  for (const auto& c : s.candidates) {
    Json cj;
    cj["taxi_id"] = c.taxi_id;
    cj["origin_ca"] = c.origin_ca;
    cj["classification"] = classification_name(c.classification);
    if (c.observed_district) cj["observed_district"] = district_name(*c.observed_district);
    cj["prior"] = {{"weights", per_district_json(c.prior.weights)},
                   {"source", prior_source_name(c.prior.source)}};
    Json dyads = Json::array();
    for (const auto& d : c.search_dyads) dyads.push_back({d.from_ca, d.to_ca, d.weight});
    cj["search_dyads"] = std::move(dyads);
    candidates.push_back(std::move(cj));
  }
  j["candidates"] = std::move(candidates);
}

void from_json(const Json& j, DecisionScenario& s) {
  s = DecisionScenario{};
  s.day = parse_date(j.at("day").get<std::string>());
  s.total_drivers = j.at("total_drivers").get<long>();
  s.deduced_flow = j.at("deduced_flow").get<FlowDistribution>();
  s.historical_pickups = per_district_from_json(j.at("historical_pickups"));
  for (const auto& cj : j.at("candidates")) {
    CandidateDriver c;
    c.taxi_id = cj.at("taxi_id").get<std::string>();
    c.origin_ca = cj.at("origin_ca").get<int>();
    c.classification = parse_classification(cj.at("classification").get<std::string>());
    if (cj.contains("observed_district")) c.observed_district = district_from_json(cj.at("observed_district"));
    c.prior.weights = per_district_from_json(cj.at("prior").at("weights"));
    c.prior.source = parse_prior_source(cj.at("prior").at("source").get<std::string>());
    for (const auto& d : cj.at("search_dyads")) {
      c.search_dyads.push_back({d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()});
    }
    s.candidates.push_back(std::move(c));
  }
}

Json scenarios_json(const std::vector<DecisionScenario>& scenarios) {
  return {{"schema", kScenarioSchema}, {"scenarios", scenarios}};
}

std::vector<DecisionScenario> scenarios_from_json(const Json& j) {
  if (j.value("schema", "") != kScenarioSchema) bad("not a scenario document");
  return j.at("scenarios").get<std::vector<DecisionScenario>>();
}

void to_json(Json& j, const CounterfactualModel& m) {
  j = Json::object();
  j["schema"] = kModelSchema;
  j["sigma"] = m.sigma;
  Json districts = Json::object();
  for (District d : kAllDistricts) {
    const auto& c = m.districts[index(d)];
    districts[std::string(district_name(d))] = {{"intercept", c.intercept},
                                                {"slope", c.slope},
                                                {"flow_min", c.flow_min},
                                                {"flow_max", c.flow_max}};
  }
  j["districts"] = std::move(districts);
  if (!m.draws.empty()) {
    Json draws = Json::array();
    for (const auto& d : m.draws) {
      draws.push_back({{"intercept", per_district_json(d.intercept)},
                       {"slope", per_district_json(d.slope)},
                       {"sigma", d.sigma}});
    }
    j["draws"] = std::move(draws);
  }
}

void from_json(const Json& j, CounterfactualModel& m) {
  try {
    if (j.value("schema", "") != kModelSchema) bad("not a model document");
    m = CounterfactualModel{};
    m.sigma = j.at("sigma").get<double>();
    for (District d : kAllDistricts) {
      const auto& cj = j.at("districts").at(std::string(district_name(d)));
      m.districts[index(d)] = {cj.at("intercept").get<double>(), cj.at("slope").get<double>(),
                               cj.at("flow_min").get<double>(), cj.at("flow_max").get<double>()};
    }
    if (j.contains("draws")) {
      for (const auto& dj : j.at("draws")) {
        m.draws.push_back({per_district_from_json(dj.at("intercept")), per_district_from_json(dj.at("slope")),
                           dj.at("sigma").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed model: ") + e.what());
  }
  m.validate();
}

void to_json(Json& j, const DisplayPayload& p) {
  j = Json::object();
  j["schema"] = kDisplaySchema;
  j["kind"] = display_name(p.kind);
  if (p.kind == DisplayKind::static_point) {
    j["static"] = {{"flow", p.mean_flow}, {"probability", per_district_json(p.mean_probability)}};
    return;
  }
  Json frames = Json::array();
  for (const auto& f : p.frames) {
    frames.push_back({{"flow", f.flow}, {"probability", per_district_json(f.probability)}});
  }
  j["frames"] = std::move(frames);
  j["frame_interval"] = p.frame_interval;
}

void from_json(const Json& j, DisplayPayload& p) {
  p = DisplayPayload{};
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "static") {
    p.kind = DisplayKind::static_point;
    p.mean_flow = j.at("static").at("flow").get<FlowDistribution>();
    p.mean_probability = per_district_from_json(j.at("static").at("probability"));
    return;
  }
  if (kind != "hops") bad("unknown display kind: " + kind);
  HypotheticalOutcomeSet set;
  for (const auto& fj : j.at("frames")) {
    OutcomeFrame f;
    f.flow = fj.at("flow").get<FlowDistribution>();
    f.probability = per_district_from_json(fj.at("probability"));
    set.frames.push_back(std::move(f));
  }
  p = summarize_display(set, DisplayKind::hops_frames);
  p.frame_interval = j.value("frame_interval", kFrameIntervalSeconds);
}

void to_json(Json& j, const LevelOutcome& o) {
  j = {{"level", o.level.k},
       {"flow", o.expected_flow},
       {"probability", per_district_json(o.pickup_probabilities)},
       {"source", o.source == OutcomeSource::l0_data ? "l0_data" : "l0_plus_l1_mixture"}};
}

void from_json(const Json& j, LevelOutcome& o) {
  o.level = LevelK{j.at("level").get<int>()};
  o.expected_flow = j.at("flow").get<FlowDistribution>();
  o.pickup_probabilities = per_district_from_json(j.at("probability"));
  o.source = j.at("source").get<std::string>() == "l0_data" ? OutcomeSource::l0_data
                                                            : OutcomeSource::l0_plus_l1_mixture;
}

void to_json(Json& j, const FeedbackPayload& p) {
  j = {{"structure", feedback_name(p.structure)},
       {"got_pickup", p.got_pickup},
       {"reward_delta", p.reward_delta.value}};
  if (p.structure == FeedbackStructure::bandit || !p.full) return;
  const auto& f = *p.full;
  j["displayed"] = {{"flow", f.displayed_flow}, {"probability", per_district_json(f.displayed_probability)}};
  j["outcome"] = f.outcome;
  j["anticipated_flow"] = f.anticipated_flow;
  j["prediction_error"] = per_district_json(f.prediction_error);
  j["anticipation_error"] = per_district_json(f.anticipation_error);
}

void from_json(const Json& j, FeedbackPayload& p) {
  p = FeedbackPayload{};
  const auto structure = j.at("structure").get<std::string>();
  p.structure = structure == "full" ? FeedbackStructure::full : FeedbackStructure::bandit;
  p.got_pickup = j.at("got_pickup").get<bool>();
  p.reward_delta = Cents{j.at("reward_delta").get<std::int64_t>()};
  if (p.structure == FeedbackStructure::bandit) return;
  FullFeedback f;
  f.displayed_flow = j.at("displayed").at("flow").get<FlowDistribution>();
  f.displayed_probability = per_district_from_json(j.at("displayed").at("probability"));
  f.outcome = j.at("outcome").get<LevelOutcome>();
  f.anticipated_flow = j.at("anticipated_flow").get<FlowDistribution>();
  f.prediction_error = per_district_from_json(j.at("prediction_error"));
  f.anticipation_error = per_district_from_json(j.at("anticipation_error"));
  p.full = std::move(f);
}

void to_json(Json& j, const Decision& d) {
  j = {{"chosen", district_name(d.chosen)}, {"anticipated_flow", d.anticipated_flow}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::io, "cannot parse " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::io, "write failed for " + path);
}

}  // namespace cglab
