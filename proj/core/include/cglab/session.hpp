#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cglab/experiment.hpp"

namespace cglab {

inline constexpr const char* kSessionSchema = "cglab.session/1";
inline constexpr const char* kTrialSchema = "cglab.trial/1";
inline constexpr const char* kSessionEventSchema = "cglab.session-event/1";

enum class AssignmentMode { balancing, random };

struct SessionServiceConfig {
  AssignmentMode assignment = AssignmentMode::balancing;
  std::string l1_instructions =
      "You play as a Level-1 driver. Ignore the display and expect every other driver to search "
      "where they usually do.";
  std::string l2_instructions =
      "You play as a Level-2 driver. Some drivers search where they usually do; the rest follow the "
      "display, each believing nobody else uses it.";
  /// Accepted distance between a hops probability estimate and the frame mean.
  double comprehension_tolerance = 0.1;
  /// Directory of per-session event files; empty keeps sessions in memory only.
  std::string store_dir;
  std::uint64_t seed = 1;
};

void to_json(Json& j, const SessionServiceConfig& c);
void from_json(const Json& j, SessionServiceConfig& c);

enum class SessionPhase { instructions, trials, complete };

struct SessionState {
  std::string id;
  TreatmentCell cell;
  int level = 1;
  SessionPhase phase = SessionPhase::instructions;
  /// Next trial position; 0 while the practice trial is shown.
  int cursor = 0;
  int comprehension_attempts = 0;
  Cents running_reward = kBasePay;
  long pickups = 0;
  std::vector<Json> events;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

/// Applies one event to a state; replaying a session's events from an empty
/// state reconstructs it.
void apply_event(SessionState& state, const Json& event);
SessionState replay(const std::vector<Json>& events);

/// Human-in-the-loop backend. The prepared experiment and pools are shared
/// read-only; every session serializes its own transitions.
class SessionService {
 public:
  SessionService(std::shared_ptr<const PreparedExperiment> prep, Variant variant,
                 std::optional<ResponsePool> l1_pool, SessionServiceConfig config);

  /// Body: {"level": 1 | 2} or {} for auto-assignment (level 1 until an L1
  /// pool exists, level 2 afterwards).
  Json create_session(const Json& request);
  Json get_session(const std::string& id) const;
  Json get_trial(const std::string& id, int t) const;
  /// Body: {"chosen": "West", "anticipated": {"West": n, "North": n, "East": n}}.
  Json submit_response(const std::string& id, int t, const Json& body);
  /// Static cells: {"answer": "<district>"}; hops cells: {"estimate": p}.
  Json comprehension(const std::string& id, const Json& body);
  Json summary(const std::string& id) const;

  /// Copy of the session's state (for tests and replay checks).
  SessionState state(const std::string& id) const;
  std::size_t session_count() const;

  const PreparedExperiment& experiment() const { return *prep_; }

 private:
  struct Entry {
    mutable std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append(Entry& entry, Json event);
  const LevelOutcome& outcome(int level, int day, const TreatmentCell& cell);
  int day_at(int position) const;
  Json state_json(const SessionState& s) const;
  Json question(const SessionState& s) const;
  void load_store();

  std::shared_ptr<const PreparedExperiment> prep_;
  Variant variant_;
  std::optional<ResponsePool> l1_pool_;
  SessionServiceConfig config_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<TreatmentCell, long> cell_counts_;
  std::uint64_t created_ = 0;

  std::mutex outcome_mutex_;
  std::map<std::tuple<int, int, TreatmentCell>, LevelOutcome> outcomes_;
};

}  // namespace cglab
