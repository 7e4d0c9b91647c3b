#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cglab/experiment.hpp"
#include "cglab/http_server.hpp"
#include "cglab/report.hpp"
#include "cglab/session.hpp"
#include "cglab/synthetic.hpp"
#include "cglab/welfare.hpp"

using namespace cglab;
namespace fs = std::filesystem;

namespace {

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

ExperimentConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config(path);
  if (seed) c.seed = *seed;
  return c;
}

std::vector<Date> parse_dates(const std::string& csv) {
  std::vector<Date> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_date(item));
  }
  return out;
}

DecisionScenario pick_scenario(const std::vector<DecisionScenario>& all, const std::string& day, int idx) {
  if (!day.empty()) {
    const Date d = parse_date(day);
    for (const auto& s : all) {
      if (s.day == d) return s;
    }
    throw Error(Errc::not_found, "no scenario for " + day);
  }
  if (idx < 0 || static_cast<std::size_t>(idx) >= all.size()) throw Error(Errc::not_found, "scenario index out of range");
  return all[static_cast<std::size_t>(idx)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cglab: congestion-game experiment laboratory"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  const auto add_seed = [&seed](CLI::App* sub) { sub->add_option("--seed", seed, "Base RNG seed"); };

  // synth
  auto* synth = app.add_subcommand("synth", "Write a calibrated synthetic trip corpus (CSV)");
  std::string synth_config, synth_out = "trips.csv";
  synth->add_option("--config", synth_config, "Experiment config (defaults when omitted)");
  synth->add_option("--out", synth_out, "Output trip CSV");
  add_seed(synth);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Trips -> decision scenarios");
  std::string trips_path, ingest_out = "scenarios.json", ingest_days, ingest_mode = "argmax";
  ingest->add_option("--trips", trips_path, "Trip CSV")->required();
  ingest->add_option("--out", ingest_out, "Scenario JSON");
  ingest->add_option("--days", ingest_days, "Comma-separated dates (default: every weekday)");
  ingest->add_option("--decision-mode", ingest_mode, "argmax | weighted_sample");
  add_seed(ingest);

  // fit
  auto* fitc = app.add_subcommand("fit", "Scenarios -> counterfactual model");
  std::string fit_scenarios, fit_out = "model.json", fit_shrinkage = "pooled";
  fitc->add_option("--scenarios", fit_scenarios, "Scenario JSON")->required();
  fitc->add_option("--out", fit_out, "Model JSON");
  fitc->add_option("--shrinkage", fit_shrinkage, "pooled | none");
  add_seed(fitc);

  // simulate-display
  auto* sim = app.add_subcommand("simulate-display", "Scenario + model -> display payload");
  std::string sim_scenarios, sim_model, sim_day, sim_kind = "hops", sim_out = "-";
  int sim_index = 0, sim_frames = 1000;
  sim->add_option("--scenarios", sim_scenarios, "Scenario JSON")->required();
  sim->add_option("--model", sim_model, "Model JSON")->required();
  sim->add_option("--day", sim_day, "Scenario date");
  sim->add_option("--index", sim_index, "Scenario index when --day is absent");
  sim->add_option("--kind", sim_kind, "hops | static");
  sim->add_option("--frames", sim_frames, "Hypothetical outcomes to simulate");
  sim->add_option("--out", sim_out, "Output JSON ('-' for stdout)");
  add_seed(sim);

  // run
  auto* run = app.add_subcommand("run", "Config -> staged experiment on disk");
  std::string run_config, run_out = "runs", run_stage = "all", run_variant = "main";
  run->add_option("--config", run_config, "Experiment config");
  run->add_option("--out", run_out, "Output root directory");
  run->add_option("--stage", run_stage, "l1 | l2 | system | all");
  run->add_option("--variant", run_variant, "main | robust_trial_order | robust_composition");
  add_seed(run);

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Manifest -> report files");
  std::string manifest_path;
  metrics->add_option("--manifest", manifest_path, "manifest.json of a completed run")->required();
  add_seed(metrics);

  // optimize
  auto* opt = app.add_subcommand("optimize", "Model -> welfare optimum");
  std::string opt_model, opt_scenarios, opt_day;
  int opt_index = 0;
  double opt_drivers = 0.0;
  opt->add_option("--model", opt_model, "Model JSON")->required();
  opt->add_option("--scenarios", opt_scenarios, "Scenario JSON supplying N");
  opt->add_option("--day", opt_day, "Scenario date");
  opt->add_option("--index", opt_index, "Scenario index when --day is absent");
  opt->add_option("--drivers", opt_drivers, "N (overrides the scenario)");
  add_seed(opt);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Start the session service");
  std::string serve_config, serve_manifest, serve_host = "127.0.0.1", serve_variant = "main", serve_store,
                                            serve_assignment = "balancing";
  int serve_port = 8080;
  serve_cmd->add_option("--config", serve_config, "Experiment config");
  serve_cmd->add_option("--manifest", serve_manifest, "Run manifest whose L1 pool scores L2 sessions");
  serve_cmd->add_option("--variant", serve_variant, "Trial order variant");
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port");
  serve_cmd->add_option("--store", serve_store, "Session event directory");
  serve_cmd->add_option("--assignment", serve_assignment, "balancing | random");
  add_seed(serve_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const ExperimentConfig c = config_with_seed(synth_config, std::nullopt);
      std::vector<Date> days = c.days;
      SyntheticConfig sc = calibrated_synthetic(c, days);
      if (seed) sc.seed = *seed;
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw Error(Errc::io, "cannot write " + synth_out);
      write_trips(out, generate_synthetic(sc));
      std::string list;
      for (Date d : days) list += (list.empty() ? "" : ",") + format_date(d);
      std::cerr << "trial days: " << list << '\n';
    } else if (ingest->parsed()) {
      DecisionMode mode = DecisionMode::argmax;
      if (ingest_mode == "weighted_sample") {
        mode = DecisionMode::weighted_sample;
      } else if (ingest_mode != "argmax") {
        throw Error(Errc::invalid_argument, "unknown decision mode " + ingest_mode);
      }
      const auto trips = read_trips_file(trips_path);
      auto all = ingest_corpus(trips, mode, seed.value_or(0));
      if (!ingest_days.empty()) {
        const auto keep = parse_dates(ingest_days);
        std::erase_if(all, [&](const DecisionScenario& s) {
          return std::find(keep.begin(), keep.end(), s.day) == keep.end();
        });
      }
      write_json_file(ingest_out, scenarios_json(all));
      std::cerr << all.size() << " scenarios\n";
    } else if (fitc->parsed()) {
      Shrinkage sh = Shrinkage::pooled;
      if (fit_shrinkage == "none") {
        sh = Shrinkage::none;
      } else if (fit_shrinkage != "pooled") {
        throw Error(Errc::invalid_argument, "unknown shrinkage " + fit_shrinkage);
      }
      const auto all = scenarios_from_json(read_json_file(fit_scenarios));
      write_json_file(fit_out, fit(training_data(all), sh));
    } else if (sim->parsed()) {
      const auto all = scenarios_from_json(read_json_file(sim_scenarios));
      const auto model = read_json_file(sim_model).get<CounterfactualModel>();
      SimulationOptions o;
      o.frames = sim_frames;
      const auto set = simulate_hypothetical_outcomes(pick_scenario(all, sim_day, sim_index), model, o, seed.value_or(0));
      const DisplayKind kind = sim_kind == "static" ? DisplayKind::static_point : DisplayKind::hops_frames;
      emit(summarize_display(set, kind), sim_out);
    } else if (run->parsed()) {
      const ExperimentConfig c = config_with_seed(run_config, seed);
      const auto variant = parse_variant(run_variant);
      if (!variant) throw Error(Errc::invalid_argument, "unknown variant " + run_variant);
      const PreparedExperiment prep = prepare(c);
      if (run_stage == "all") {
        emit(run_replication(prep, *variant, run_out), "-");
      } else {
        const auto stage = parse_stage(run_stage);
        if (!stage) throw Error(Errc::invalid_argument, "unknown stage " + run_stage);
        Json manifest = run_stage_on_disk(prep, *variant, *stage, run_out);
        if (*stage == Stage::system) {
          export_report((fs::path(variant_dir(run_out, *variant)) / "manifest.json").string());
        }
        emit(manifest, "-");
      }
    } else if (metrics->parsed()) {
      for (const auto& p : export_report(manifest_path)) std::cout << p << '\n';
    } else if (opt->parsed()) {
      const auto model = read_json_file(opt_model).get<CounterfactualModel>();
      double n = opt_drivers;
      if (n <= 0.0) {
        if (opt_scenarios.empty()) throw Error(Errc::invalid_argument, "give --drivers or --scenarios");
        const auto all = scenarios_from_json(read_json_file(opt_scenarios));
        n = pick_scenario(all, opt_day, opt_index).deduced_flow.total();
      }
      bool relaxed = false;
      const WelfareBounds bounds = feasible_bounds(model, n, relaxed);
      const auto r = max_welfare(n, model, bounds, AugmentedLagrangianOptions{}, seed.value_or(0));
      Json restarts = r.restart_pickups;
      emit({{"drivers", n},
            {"max_pickups", r.max_pickups},
            {"optimal_flow", r.optimal_flow},
            {"restart_pickups", restarts},
            {"bounds_relaxed", relaxed}},
           "-");
    } else if (serve_cmd->parsed()) {
      ExperimentConfig c;
      std::optional<ResponsePool> pool;
      if (!serve_manifest.empty()) {
        const fs::path dir = fs::path(serve_manifest).parent_path();
        const Json manifest = read_json_file(serve_manifest);
        c = read_json_file((dir / "config.json").string()).at("config").get<ExperimentConfig>();
        if (manifest.at("stages").value("l1", false)) {
          pool = read_json_file((dir / manifest.at("artifacts").at("l1_pool").get<std::string>()).string())
                     .get<ResponsePool>();
        }
      } else {
        c = config_with_seed(serve_config, std::nullopt);
      }
      if (seed) c.seed = *seed;
      const auto variant = parse_variant(serve_variant);
      if (!variant) throw Error(Errc::invalid_argument, "unknown variant " + serve_variant);
      SessionServiceConfig sc;
      sc.store_dir = serve_store;
      sc.seed = c.seed;
      sc.assignment = serve_assignment == "random" ? AssignmentMode::random : AssignmentMode::balancing;
      auto prep = std::make_shared<const PreparedExperiment>(prepare(c));
      SessionService service(prep, *variant, std::move(pool), sc);
      return serve(service, serve_host, serve_port) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
