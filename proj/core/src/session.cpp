#include "cglab/session.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cglab/log.hpp"
#include "cglab/report.hpp"

namespace cglab {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagSessionId = 20;
constexpr std::uint64_t kTagSessionScore = 21;
constexpr std::uint64_t kTagAssignment = 22;

std::string_view phase_name(SessionPhase p) {
  switch (p) {
    case SessionPhase::instructions: return "instructions";
    case SessionPhase::trials: return "trials";
    case SessionPhase::complete: return "complete";
  }
  return "?";
}

Json cell_json(const TreatmentCell& c) {
  return {{"name", cell_name(c)}, {"display", display_name(c.display)}, {"feedback", feedback_name(c.feedback)}};
}

/// Probability the comprehension question asks about: the frame mean for
/// hops payloads, the point value otherwise.
double frame_mean_probability(const DisplayPayload& p, District d) {
  if (p.frames.empty()) return p.mean_probability[index(d)];
  double sum = 0.0;
  for (const auto& f : p.frames) sum += f.probability[index(d)];
  return sum / static_cast<double>(p.frames.size());
}

}  // namespace

void to_json(Json& j, const SessionServiceConfig& c) {
  j = {{"assignment", c.assignment == AssignmentMode::random ? "random" : "balancing"},
       {"l1_instructions", c.l1_instructions},
       {"l2_instructions", c.l2_instructions},
       {"comprehension_tolerance", c.comprehension_tolerance},
       {"store_dir", c.store_dir},
       {"seed", c.seed}};
}

void from_json(const Json& j, SessionServiceConfig& c) {
  c = SessionServiceConfig{};
  const auto mode = j.value("assignment", std::string("balancing"));
  if (mode == "random") {
    c.assignment = AssignmentMode::random;
  } else if (mode != "balancing") {
    throw Error(Errc::invalid_argument, "unknown assignment mode: " + mode);
  }
  c.l1_instructions = j.value("l1_instructions", c.l1_instructions);
  c.l2_instructions = j.value("l2_instructions", c.l2_instructions);
  c.comprehension_tolerance = j.value("comprehension_tolerance", c.comprehension_tolerance);
  c.store_dir = j.value("store_dir", c.store_dir);
  c.seed = j.value("seed", c.seed);
}

void apply_event(SessionState& s, const Json& e) {
  const auto type = e.at("type").get<std::string>();
  if (type == "created") {
    s = SessionState{};
    s.id = e.at("session").get<std::string>();
    s.cell = parse_cell(e.at("cell").get<std::string>()).value();
    s.level = e.at("level").get<int>();
  } else if (type == "comprehension") {
    ++s.comprehension_attempts;
    if (e.at("passed").get<bool>()) {
      s.phase = SessionPhase::trials;
      s.cursor = 1;
    }
  } else if (type == "response") {
    if (e.at("got_pickup").get<bool>()) ++s.pickups;
    s.running_reward.value += e.at("reward_delta").get<std::int64_t>();
    s.cursor = e.at("trial").get<int>() + 1;
    if (s.cursor >= kTrialDays) s.phase = SessionPhase::complete;
  } else {
    throw Error(Errc::invalid_argument, "unknown session event type: " + type);
  }
  s.events.push_back(e);
}

SessionState replay(const std::vector<Json>& events) {
  SessionState s;
  for (const auto& e : events) apply_event(s, e);
  return s;
}

SessionService::SessionService(std::shared_ptr<const PreparedExperiment> prep, Variant variant,
                               std::optional<ResponsePool> l1_pool, SessionServiceConfig config)
    : prep_(std::move(prep)), variant_(variant), l1_pool_(std::move(l1_pool)), config_(std::move(config)) {
  if (!prep_) throw Error(Errc::invalid_argument, "session service needs a prepared experiment");
  if (l1_pool_ && l1_pool_->decisions.empty()) l1_pool_.reset();
  for (const auto& c : prep_->config.cells) cell_counts_[c] = 0;
  if (!config_.store_dir.empty()) load_store();
}

void SessionService::load_store() {
  fs::create_directories(config_.store_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config_.store_dir)) {
    if (entry.path().extension() == ".ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto entry = std::make_shared<Entry>();
    entry->state = replay(read_events(f.string()));
    if (entry->state.id.empty()) continue;
    ++cell_counts_[entry->state.cell];
    sessions_[entry->state.id] = std::move(entry);
    ++created_;
  }
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::not_found, "no session " + id);
  return it->second;
}

void SessionService::append(Entry& entry, Json event) {
  event["schema"] = kSessionEventSchema;
  event["session"] = entry.state.id.empty() ? event.at("session") : Json(entry.state.id);
  if (!config_.store_dir.empty()) {
    const auto path = fs::path(config_.store_dir) / (event.at("session").get<std::string>() + ".ndjson");
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::io, "cannot append to " + path.string());
    out << event.dump() << '\n';
    out.flush();
  }
  apply_event(entry.state, event);
}

int SessionService::day_at(int position) const {
  return prep_->config.trial_sequence(variant_)[static_cast<std::size_t>(position)];
}

const LevelOutcome& SessionService::outcome(int level, int day, const TreatmentCell& cell) {
  std::lock_guard lock(outcome_mutex_);
  const auto key = std::make_tuple(level, day, cell);
  auto it = outcomes_.find(key);
  if (it == outcomes_.end()) {
    it = outcomes_.emplace(key, stage_outcome(*prep_, variant_, level, day, cell, l1_pool_ ? &*l1_pool_ : nullptr))
             .first;
  }
  return it->second;
}

Json SessionService::question(const SessionState& s) const {
  const DisplayPayload& practice = prep_->display(day_at(0), s.cell.display);
  const District target = argmax_district(practice.mean_probability);
  if (s.cell.display == DisplayKind::hops_frames) {
    return {{"kind", "estimate_probability"},
            {"district", district_name(target)},
            {"prompt", "Estimate the pickup probability of " + std::string(district_name(target)) +
                           " from the animation on the practice trial."}};
  }
  Json options = Json::array();
  for (District d : kAllDistricts) options.push_back(district_name(d));
  return {{"kind", "choose_district"},
          {"options", options},
          {"prompt", "Which district has the highest pickup probability on the practice trial?"}};
}

Json SessionService::state_json(const SessionState& s) const {
  return {{"schema", kSessionSchema},
          {"session", s.id},
          {"cell", cell_json(s.cell)},
          {"level", s.level},
          {"instructions", s.level == 1 ? config_.l1_instructions : config_.l2_instructions},
          {"phase", phase_name(s.phase)},
          {"cursor", s.cursor},
          {"running_reward", s.running_reward.value},
          {"pickups", s.pickups},
          {"comprehension", {{"attempts", s.comprehension_attempts},
                             {"passed", s.phase != SessionPhase::instructions},
                             {"question", question(s)}}}};
}

Json SessionService::create_session(const Json& request) {
  int level = 0;
  if (request.is_object() && request.contains("level") && !request.at("level").is_null()) {
    if (!request.at("level").is_number_integer()) throw Error(Errc::validation, "level must be 1 or 2");
    level = request.at("level").get<int>();
    if (level != 1 && level != 2) throw Error(Errc::validation, "level must be 1 or 2");
  } else {
    level = l1_pool_ ? 2 : 1;
  }
  if (level == 2 && !l1_pool_) {
    throw Error(Errc::staging_violation, "staging violation: L2 sessions need a collected L1 pool");
  }

  auto entry = std::make_shared<Entry>();
  std::string id;
  TreatmentCell cell;
  {
    std::unique_lock lock(sessions_mutex_);
    const auto n = created_++;
    id = hex64(derive_seed(config_.seed, {kTagSessionId, n}));
    const auto& cells = prep_->config.cells;
    if (config_.assignment == AssignmentMode::random) {
      Rng rng = make_rng(derive_seed(config_.seed, {kTagAssignment, n}));
      cell = cells[uniform_index(rng, cells.size())];
    } else {
      cell = cells.front();
      for (const auto& c : cells) {
        if (cell_counts_[c] < cell_counts_[cell]) cell = c;
      }
    }
    ++cell_counts_[cell];
    sessions_[id] = entry;
  }
  std::lock_guard guard(entry->mutex);
  append(*entry, {{"type", "created"}, {"session", id}, {"cell", cell_name(cell)}, {"level", level}});
  return state_json(entry->state);
}

Json SessionService::get_session(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return state_json(entry->state);
}

Json SessionService::get_trial(const std::string& id, int t) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  const auto& s = entry->state;
  if (s.phase == SessionPhase::complete || t != s.cursor) {
    throw Error(Errc::trial_order_violation,
                "trial order violation: requested trial " + std::to_string(t) + ", cursor is " + std::to_string(s.cursor));
  }
  const int day = day_at(t);
  const long competitors = prep_->competitors(day);
  Json districts = Json::array();
  for (District d : kAllDistricts) districts.push_back(district_name(d));
  return {{"schema", kTrialSchema},
          {"session", s.id},
          {"trial", t},
          {"practice", t == 0},
          {"display", prep_->display(day, s.cell.display)},
          {"competitor_count", competitors},
          {"elicitation", {{"districts", districts}, {"sum", competitors}, {"integers", true}, {"imputed", "East"}}}};
}

Json SessionService::submit_response(const std::string& id, int t, const Json& body) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  const auto& s = entry->state;
  if (s.phase == SessionPhase::trials && t < s.cursor && t >= 1) {
    throw Error(Errc::duplicate_submission, "duplicate submission for trial " + std::to_string(t));
  }
  if (s.phase == SessionPhase::complete) {
    throw Error(Errc::duplicate_submission, "session is complete");
  }
  if (s.phase != SessionPhase::trials || t != s.cursor) {
    throw Error(Errc::trial_order_violation,
                "trial order violation: submitted trial " + std::to_string(t) + ", cursor is " + std::to_string(s.cursor));
  }

  if (!body.is_object() || !body.contains("chosen") || !body.at("chosen").is_string()) {
    throw Error(Errc::validation, "chosen district is required");
  }
  const auto chosen = parse_district(body.at("chosen").get<std::string>());
  if (!chosen) throw Error(Errc::validation, "unknown district " + body.at("chosen").get<std::string>());
  if (!body.contains("anticipated") || !body.at("anticipated").is_object()) {
    throw Error(Errc::validation, "anticipated flows are required");
  }
  const int day = day_at(t);
  const long competitors = prep_->competitors(day);
  PerDistrict anticipated{};
  long sum = 0;
  for (District d : kAllDistricts) {
    const auto& a = body.at("anticipated");
    const std::string name(district_name(d));
    if (!a.contains(name) || !a.at(name).is_number_integer() || a.at(name).get<long>() < 0) {
      throw Error(Errc::validation, "anticipated " + name + " must be a non-negative integer");
    }
    anticipated[index(d)] = static_cast<double>(a.at(name).get<long>());
    sum += a.at(name).get<long>();
  }
  if (sum != competitors) {
    throw Error(Errc::validation, "anticipated flows must sum to " + std::to_string(competitors) +
                                      "; residual " + std::to_string(competitors - sum));
  }

  const LevelOutcome& out = outcome(s.level, day, s.cell);
  Rng rng = make_rng(derive_seed(config_.seed, {kTagSessionScore, fnv1a(s.id), static_cast<std::uint64_t>(t)}));
  const Score score = score_decision(*chosen, out, rng);
  const FlowDistribution anticipated_flow(anticipated);
  const FeedbackPayload feedback =
      make_feedback(s.cell.feedback, score, prep_->display(day, s.cell.display), out, anticipated_flow);

  append(*entry, {{"type", "response"},
                  {"trial", t},
                  {"day", day},
                  {"chosen", district_name(*chosen)},
                  {"anticipated", per_district_json(anticipated)},
                  {"got_pickup", score.got_pickup},
                  {"reward_delta", score.reward_delta.value}});
  return {{"schema", kSessionSchema},
          {"session", s.id},
          {"trial", t},
          {"feedback", feedback},
          {"running_reward", s.running_reward.value},
          {"pickups", s.pickups},
          {"cursor", s.cursor},
          {"phase", phase_name(s.phase)}};
}

Json SessionService::comprehension(const std::string& id, const Json& body) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  const auto& s = entry->state;
  if (s.phase != SessionPhase::instructions) {
    throw Error(Errc::invalid_state, "comprehension check already passed");
  }
  const DisplayPayload& practice = prep_->display(day_at(0), s.cell.display);
  const District target = argmax_district(practice.mean_probability);
  bool passed = false;
  Json answer;
  if (s.cell.display == DisplayKind::hops_frames) {
    if (!body.is_object() || !body.contains("estimate") || !body.at("estimate").is_number()) {
      throw Error(Errc::validation, "estimate is required");
    }
    const double estimate = body.at("estimate").get<double>();
    passed = std::abs(estimate - frame_mean_probability(practice, target)) <= config_.comprehension_tolerance;
    answer = estimate;
  } else {
    if (!body.is_object() || !body.contains("answer") || !body.at("answer").is_string()) {
      throw Error(Errc::validation, "answer is required");
    }
    const auto d = parse_district(body.at("answer").get<std::string>());
    if (!d) throw Error(Errc::validation, "unknown district " + body.at("answer").get<std::string>());
    passed = *d == target;
    answer = district_name(*d);
  }
  append(*entry, {{"type", "comprehension"}, {"answer", answer}, {"passed", passed}});
  return {{"schema", kSessionSchema},
          {"session", s.id},
          {"passed", passed},
          {"retry", !passed},
          {"attempts", s.comprehension_attempts},
          {"cursor", s.cursor}};
}

Json SessionService::summary(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  const auto& s = entry->state;
  Json trials = Json::array();
  for (const auto& e : s.events) {
    if (e.at("type") != "response") continue;
    trials.push_back({{"trial", e.at("trial")},
                      {"chosen", e.at("chosen")},
                      {"got_pickup", e.at("got_pickup")},
                      {"reward_delta", e.at("reward_delta")}});
  }
  return {{"schema", kSessionSchema},
          {"session", s.id},
          {"cell", cell_json(s.cell)},
          {"level", s.level},
          {"phase", phase_name(s.phase)},
          {"completed_trials", trials.size()},
          {"running_reward", s.running_reward.value},
          {"payout_dollars", s.running_reward.dollars()},
          {"pickups", s.pickups},
          {"trials", trials}};
}

SessionState SessionService::state(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return entry->state;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace cglab
