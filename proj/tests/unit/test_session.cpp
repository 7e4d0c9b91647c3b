#include <doctest.h>

#include <atomic>
#include <map>
#include <set>
#include <thread>

#include "cglab/session.hpp"
#include "unit/fixture.hpp"

using namespace cglab;
using cglab::test::error_of;

namespace {

/// Full-size displays (1,000 frames) over the small corpus, plus a frozen L1 pool.
std::shared_ptr<const PreparedExperiment> session_prep() {
  static const auto prep = [] {
    ExperimentConfig c = test::small_config();
    c.simulation.frames = 1000;
    const auto& small = *test::small_prep();
    return std::make_shared<const PreparedExperiment>(prepare(c, small.scenarios, small.model));
  }();
  return prep;
}

const ResponsePool& l1_pool() {
  static const ResponsePool pool = run_stage(*session_prep(), Variant::main, Stage::l1).pool;
  return pool;
}

SessionService service(bool with_pool, SessionServiceConfig cfg = {}) {
  return SessionService(session_prep(), Variant::main, with_pool ? std::optional(l1_pool()) : std::nullopt, cfg);
}

std::string id_of(const Json& j) { return j.at("session").get<std::string>(); }

Json anticipation(long west, long north, long east) {
  return {{"West", west}, {"North", north}, {"East", east}};
}

Json response(District chosen, long competitors) {
  const long w = competitors / 3;
  const long n = competitors / 3;
  return {{"chosen", district_name(chosen)}, {"anticipated", anticipation(w, n, competitors - w - n)}};
}

/// Answers the comprehension question correctly for either display kind.
void pass_comprehension(SessionService& svc, const std::string& id) {
  const SessionState s = svc.state(id);
  const auto& practice = svc.experiment().display(0, s.cell.display);
  const District target = argmax_district(practice.mean_probability);
  Json body;
  if (s.cell.display == DisplayKind::hops_frames) {
    double mean = 0.0;
    for (const auto& f : practice.frames) mean += f.probability[index(target)];
    body = {{"estimate", mean / static_cast<double>(practice.frames.size())}};
  } else {
    body = {{"answer", district_name(target)}};
  }
  REQUIRE(svc.comprehension(id, body).at("passed") == true);
}

std::string session_in(SessionService& svc, const TreatmentCell& cell, int level) {
  for (int i = 0; i < 8; ++i) {
    const auto id = id_of(svc.create_session({{"level", level}}));
    if (svc.state(id).cell == cell) return id;
  }
  FAIL("no session landed in the cell");
  return {};
}

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("first four balanced sessions cover every cell") {
    auto svc = service(false);
    std::set<std::string> cells;
    for (int i = 0; i < 4; ++i) {
      const Json s = svc.create_session(Json::object());
      cells.insert(s.at("cell").at("name").get<std::string>());
      CHECK(s.at("level") == 1);
      CHECK(s.at("instructions") == SessionServiceConfig{}.l1_instructions);
      CHECK(s.at("cursor") == 0);
      CHECK(s.at("running_reward") == 200);
    }
    CHECK(cells.size() == 4);
    CHECK(svc.session_count() == 4);
  }

  TEST_CASE("random assignment frequencies") {
    SessionServiceConfig cfg;
    cfg.assignment = AssignmentMode::random;
    cfg.seed = 77;
    auto svc = service(false, cfg);
    std::map<std::string, int> counts;
    for (int i = 0; i < 1000; ++i) ++counts[svc.create_session({{"level", 1}}).at("cell").at("name").get<std::string>()];
    CHECK(counts.size() == 4);
    for (const auto& [cell, n] : counts) {
      CAPTURE(cell);
      CHECK(std::abs(n / 1000.0 - 0.25) <= 0.05);
    }
  }

  TEST_CASE("level requests") {
    auto bare = service(false);
    CHECK(error_of([&] { bare.create_session({{"level", 2}}); }) == Errc::staging_violation);
    CHECK(error_of([&] { bare.create_session({{"level", 3}}); }) == Errc::validation);
    CHECK(error_of([&] { bare.create_session({{"level", "two"}}); }) == Errc::validation);
    CHECK(bare.create_session({{"level", nullptr}}).at("level") == 1);

    auto pooled = service(true);
    const Json l2 = pooled.create_session(Json::object());
    CHECK(l2.at("level") == 2);
    CHECK(l2.at("instructions") == SessionServiceConfig{}.l2_instructions);
    CHECK(pooled.create_session({{"level", 1}}).at("level") == 1);
  }

  TEST_CASE("trial payloads") {
    auto svc = service(false);
    const auto& prep = *session_prep();
    const auto hops = session_in(svc, {DisplayKind::hops_frames, FeedbackStructure::bandit}, 1);
    const auto stat = session_in(svc, {DisplayKind::static_point, FeedbackStructure::full}, 1);

    const Json ht = svc.get_trial(hops, 0);
    CHECK(ht.at("practice") == true);
    CHECK(ht.at("display").at("frames").size() == 1000);
    CHECK(ht.at("display").at("frame_interval") == 0.2);
    const Json st = svc.get_trial(stat, 0);
    CHECK_FALSE(st.at("display").contains("frames"));
    CHECK(st.at("display").contains("static"));
    CHECK(st.at("competitor_count") == prep.drivers(0) - 1);
    CHECK(st.at("elicitation").at("sum") == prep.drivers(0) - 1);

    ExperimentConfig inclusive = prep.config;
    inclusive.simulation.competitors_exclude_self = false;
    auto prep2 = std::make_shared<const PreparedExperiment>(prepare(inclusive, prep.scenarios, prep.model));
    SessionService svc2(prep2, Variant::main, std::nullopt, {});
    const auto id = id_of(svc2.create_session({{"level", 1}}));
    CHECK(svc2.get_trial(id, 0).at("competitor_count") == prep.drivers(0));
  }

  TEST_CASE("cursor contract") {
    auto svc = service(false);
    const auto id = id_of(svc.create_session({{"level", 1}}));
    CHECK(error_of([&] { svc.get_trial(id, 1); }) == Errc::trial_order_violation);
    CHECK(error_of([&] { svc.submit_response(id, 0, response(District::West, 10)); }) ==
          Errc::trial_order_violation);
    CHECK(error_of([&] { svc.get_trial("feedface", 0); }) == Errc::not_found);
    pass_comprehension(svc, id);
    CHECK(error_of([&] { svc.comprehension(id, {{"answer", "West"}, {"estimate", 0.5}}); }) == Errc::invalid_state);

    CHECK(svc.get_session(id).at("cursor") == 1);
    CHECK(error_of([&] { svc.get_trial(id, 2); }) == Errc::trial_order_violation);
    const long c1 = svc.get_trial(id, 1).at("competitor_count").get<long>();
    const Json r = svc.submit_response(id, 1, response(District::North, c1));
    CHECK(r.at("cursor") == 2);
    CHECK(svc.get_session(id).at("cursor") == 2);
    CHECK(error_of([&] { svc.submit_response(id, 1, response(District::North, c1)); }) == Errc::duplicate_submission);
    CHECK(error_of([&] { svc.submit_response(id, 3, response(District::North, c1)); }) == Errc::trial_order_violation);
    CHECK(error_of([&] { svc.get_trial(id, 1); }) == Errc::trial_order_violation);
  }

  TEST_CASE("elicitation validation reports the residual") {
    auto svc = service(false);
    const auto id = id_of(svc.create_session({{"level", 1}}));
    pass_comprehension(svc, id);
    const long c = svc.get_trial(id, 1).at("competitor_count").get<long>();
    const Json short_by_12 = {{"chosen", "East"}, {"anticipated", anticipation(c - 12, 0, 0)}};
    try {
      svc.submit_response(id, 1, short_by_12);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::validation);
      CHECK(std::string(e.what()).find("residual 12") != std::string::npos);
    }
    CHECK(error_of([&] { svc.submit_response(id, 1, {{"chosen", "South"}, {"anticipated", anticipation(c, 0, 0)}}); }) ==
          Errc::validation);
    CHECK(error_of([&] { svc.submit_response(id, 1, {{"chosen", "West"}, {"anticipated", anticipation(c + 1, -1, 0)}}); }) ==
          Errc::validation);
    CHECK(error_of([&] { svc.submit_response(id, 1, {{"chosen", "West"}}); }) == Errc::validation);
    CHECK(error_of([&] {
            svc.submit_response(id, 1, {{"chosen", "West"}, {"anticipated", {{"West", 1.5}, {"North", 0}, {"East", 0}}}});
          }) == Errc::validation);
    CHECK(svc.get_session(id).at("cursor") == 1);
  }

  TEST_CASE("comprehension checks") {
    auto svc = service(false);
    const auto hops = session_in(svc, {DisplayKind::hops_frames, FeedbackStructure::full}, 1);
    const auto& practice = svc.experiment().display(0, DisplayKind::hops_frames);
    const District target = argmax_district(practice.mean_probability);
    double mean = 0.0;
    for (const auto& f : practice.frames) mean += f.probability[index(target)];
    mean /= static_cast<double>(practice.frames.size());

    const Json q = svc.get_session(hops).at("comprehension").at("question");
    CHECK(q.at("kind") == "estimate_probability");
    CHECK(q.at("district") == district_name(target));
    const Json miss = svc.comprehension(hops, {{"estimate", mean + 0.3}});
    CHECK(miss.at("passed") == false);
    CHECK(miss.at("retry") == true);
    CHECK(svc.get_session(hops).at("cursor") == 0);
    const Json hit = svc.comprehension(hops, {{"estimate", mean - 0.08}});
    CHECK(hit.at("passed") == true);
    CHECK(hit.at("attempts") == 2);
    CHECK(hit.at("cursor") == 1);

    const auto stat = session_in(svc, {DisplayKind::static_point, FeedbackStructure::bandit}, 1);
    const District best = argmax_district(svc.experiment().display(0, DisplayKind::static_point).mean_probability);
    const District wrong = best == District::West ? District::East : District::West;
    CHECK(svc.comprehension(stat, {{"answer", district_name(wrong)}}).at("passed") == false);
    CHECK(error_of([&] { svc.comprehension(stat, {{"estimate", 0.5}}); }) == Errc::validation);
    CHECK(svc.comprehension(stat, {{"answer", district_name(best)}}).at("passed") == true);
  }

  TEST_CASE("full session: rewards, summary and replay") {
    auto svc = service(true);
    const auto& prep = *session_prep();
    for (const auto& cell : prep.config.cells) {
      for (int level : {1, 2}) {
        const auto id = session_in(svc, cell, level);
        pass_comprehension(svc, id);
        for (int t = 1; t < kTrialDays; ++t) {
          const long c = svc.get_trial(id, t).at("competitor_count").get<long>();
          const Json r = svc.submit_response(id, t, response(district_at(static_cast<std::size_t>(t % 3)), c));
          const Json& fb = r.at("feedback");
          if (cell.feedback == FeedbackStructure::bandit) {
            CHECK(fb.size() == 3);
            CHECK_FALSE(fb.contains("outcome"));
            CHECK_FALSE(fb.contains("displayed"));
          } else {
            CHECK(fb.contains("outcome"));
            CHECK(fb.at("outcome").at("level") == level);
          }
          CHECK(r.at("running_reward") == 200 + 20 * r.at("pickups").get<long>());
        }
        const Json s = svc.summary(id);
        CHECK(s.at("phase") == "complete");
        CHECK(s.at("completed_trials") == 15);
        CHECK(s.at("running_reward") == 200 + 20 * s.at("pickups").get<long>());
        CHECK(s.at("payout_dollars") == doctest::Approx(2.0 + 0.2 * s.at("pickups").get<double>()));
        CHECK(error_of([&] { svc.submit_response(id, 15, response(District::West, 10)); }) == Errc::duplicate_submission);
        CHECK(error_of([&] { svc.get_trial(id, 15); }) == Errc::trial_order_violation);

        const SessionState st = svc.state(id);
        CHECK(replay(st.events) == st);
      }
    }
  }

  TEST_CASE("session feedback matches the simulated harness outcome") {
    auto svc = service(true);
    const auto& prep = *session_prep();
    for (int level : {1, 2}) {
      const auto id = session_in(svc, {DisplayKind::hops_frames, FeedbackStructure::full}, level);
      pass_comprehension(svc, id);
      for (int t = 1; t <= 3; ++t) {
        const long c = svc.get_trial(id, t).at("competitor_count").get<long>();
        const Json r = svc.submit_response(id, t, response(District::East, c));
        const auto fb = r.at("feedback").get<FeedbackPayload>();
        REQUIRE(fb.full.has_value());
        const LevelOutcome want = stage_outcome(prep, Variant::main, level, t,
                                                {DisplayKind::hops_frames, FeedbackStructure::full}, &l1_pool());
        CHECK(fb.full->outcome.expected_flow == want.expected_flow);
        CHECK(fb.full->outcome.pickup_probabilities == want.pickup_probabilities);
        CHECK(fb.full->displayed_flow == prep.display(t, DisplayKind::hops_frames).mean_flow);
        // A simulated agent receiving the same score and anticipation gets the same payload.
        const auto sim = make_feedback(FeedbackStructure::full, {fb.got_pickup, fb.reward_delta},
                                       prep.display(t, DisplayKind::hops_frames), want, fb.full->anticipated_flow);
        CHECK(Json(sim) == r.at("feedback"));
      }
    }
  }

  TEST_CASE("concurrent submissions: exactly one wins") {
    auto svc = service(false);
    const auto id = id_of(svc.create_session({{"level", 1}}));
    pass_comprehension(svc, id);
    const long c = svc.get_trial(id, 1).at("competitor_count").get<long>();
    std::atomic<int> ok{0}, dup{0}, other{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&] {
        try {
          svc.submit_response(id, 1, response(District::West, c));
          ++ok;
        } catch (const Error& e) {
          (e.code() == Errc::duplicate_submission ? dup : other)++;
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 1);
    CHECK(dup == 7);
    CHECK(other == 0);
    CHECK(svc.state(id).cursor == 2);
  }

  TEST_CASE("sessions persist and reload from the store") {
    SessionServiceConfig cfg;
    cfg.store_dir = test::scratch("session_store");
    std::string id;
    SessionState before;
    {
      auto svc = service(true, cfg);
      id = id_of(svc.create_session({{"level", 2}}));
      pass_comprehension(svc, id);
      const long c = svc.get_trial(id, 1).at("competitor_count").get<long>();
      svc.submit_response(id, 1, response(District::West, c));
      svc.create_session({{"level", 1}});
      before = svc.state(id);
    }
    auto reloaded = service(true, cfg);
    CHECK(reloaded.session_count() == 2);
    CHECK(reloaded.state(id) == before);
    const Json next = reloaded.create_session(Json::object());
    CHECK(next.at("session") != id);
    CHECK(reloaded.get_trial(id, 2).at("trial") == 2);
  }

  TEST_CASE("session ids are reproducible from the seed") {
    auto a = service(false);
    auto b = service(false);
    for (int i = 0; i < 5; ++i) {
      CHECK(a.create_session(Json::object()).at("session") == b.create_session(Json::object()).at("session"));
    }
  }

  TEST_CASE("service config round-trip") {
    SessionServiceConfig c;
    c.assignment = AssignmentMode::random;
    c.comprehension_tolerance = 0.05;
    c.seed = 5;
    const Json j = c;
    const auto back = j.get<SessionServiceConfig>();
    CHECK(back.assignment == AssignmentMode::random);
    CHECK(back.comprehension_tolerance == 0.05);
    CHECK(Json(back) == j);
    CHECK(error_of([] { Json{{"assignment", "lottery"}}.get<SessionServiceConfig>(); }) == Errc::invalid_argument);
  }
}
