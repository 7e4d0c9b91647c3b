#include "cglab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cglab/config.hpp"
#include "cglab/experiment.hpp"
#include "cglab/metrics.hpp"

namespace cglab {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(Errc::io, "cannot write " + path);
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> summary_cells(const Summary& s) { return {num(s.median), num(s.lower), num(s.upper)}; }

struct TrialGroup {
  std::vector<double> anticipation;
  long best = 0;
  long count = 0;
  std::string best_set;
};

using GroupKey = std::tuple<int, int, std::string>;  // level, position, cell

void collect(const std::vector<Json>& events, std::map<GroupKey, TrialGroup>& groups) {
  for (const auto& e : events) {
    auto& g = groups[{e.at("level").get<int>(), e.at("position").get<int>(), e.at("cell").get<std::string>()}];
    g.anticipation.push_back(e.at("anticipation_error").get<double>());
    g.best += e.at("best_response").get<bool>() ? 1 : 0;
    ++g.count;
    if (g.best_set.empty()) {
      for (const auto& d : e.at("best_responses")) {
        if (!g.best_set.empty()) g.best_set += '|';
        g.best_set += d.get<std::string>();
      }
    }
  }
}

const TrialGroup* find_group(const std::map<GroupKey, TrialGroup>& groups, int level, int position,
                             const std::string& cell) {
  const auto it = groups.find({level, position, cell});
  return it == groups.end() ? nullptr : &it->second;
}

std::vector<std::string> group_cells(const TrialGroup* g) {
  if (g == nullptr || g->count == 0) return {"", "", "", ""};
  auto s = summary_cells(summarize(g->anticipation));
  s.insert(s.begin(), num(static_cast<double>(g->best) / static_cast<double>(g->count)));
  return s;
}

}  // namespace

std::vector<Json> read_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path);
  std::vector<Json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Json::parse(line));
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<std::string> export_report(const std::string& manifest_path) {
  const Json manifest = read_json_file(manifest_path);
  const auto& stages = manifest.at("stages");
  for (const char* s : {"l1", "l2", "system"}) {
    if (!stages.value(s, false)) {
      throw Error(Errc::staging_violation, std::string("staging violation: stage ") + s + " is incomplete");
    }
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  const auto& artifacts = manifest.at("artifacts");
  const auto artifact = [&](const char* key) { return (dir / artifacts.at(key).get<std::string>()).string(); };

  const Json config_doc = read_json_file(artifact("config"));
  const ExperimentConfig config = config_doc.at("config").get<ExperimentConfig>();
  const GroundMetric metric =
      config.metric == MetricPreset::collinear ? GroundMetric::collinear() : GroundMetric::from_action_set();

  const auto l1_events = read_events(artifact("l1_events"));
  const auto l2_events = read_events(artifact("l2_events"));
  const SystemResult system = read_json_file(artifact("system")).get<SystemResult>();

  std::map<GroupKey, TrialGroup> groups;
  collect(l1_events, groups);
  collect(l2_events, groups);

  const fs::path out_dir = dir / artifacts.value("reports", std::string("reports"));
  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  const auto path_of = [&](const char* name) {
    paths.push_back((out_dir / name).string());
    return paths.back();
  };

  {
    CsvWriter agg(path_of(kAggregateReport),
                  {"position", "trial", "display", "feedback", "shift_median", "shift_lower", "shift_upper",
                   "welfare_median", "welfare_lower", "welfare_upper", "welfare_clamped", "bounds_relaxed",
                   "l1_best_response_rate", "l1_anticipation_median", "l1_anticipation_lower",
                   "l1_anticipation_upper", "l2_best_response_rate", "l2_anticipation_median",
                   "l2_anticipation_lower", "l2_anticipation_upper"});
    CsvWriter sys(path_of(kSystemReport), {"position", "trial", "display", "feedback", "replicate", "flow_west",
                                           "flow_north", "flow_east", "pickups_west", "pickups_north",
                                           "pickups_east", "total_pickups", "max_pickups", "welfare_ratio",
                                           "distribution_shift"});
    CsvWriter diff(path_of(kFlowDifferenceReport),
                   {"position", "trial", "display", "feedback", "replicate", "diff_west", "diff_north", "diff_east",
                    "share_diff_west", "share_diff_north", "share_diff_east"});
    for (const auto& c : system.cells) {
      const std::string name = cell_name(c.cell);
      const std::string display = c.cell.display == DisplayKind::hops_frames ? "hops" : "static";
      const std::string feedback = c.cell.feedback == FeedbackStructure::full ? "full" : "bandit";
      const std::vector<std::string> lead{std::to_string(c.position), std::to_string(c.day), display, feedback};

      const ShiftResult shift = distribution_shift(c.displayed, c.outcomes, metric);
      const RatioResult ratio = welfare_ratio(c.outcomes, c.max_pickups);

      auto row = lead;
      for (auto& s : summary_cells(shift.summary)) row.push_back(s);
      for (auto& s : summary_cells(ratio.summary)) row.push_back(s);
      row.push_back(ratio.clamped ? "1" : "0");
      row.push_back(c.bounds_relaxed ? "1" : "0");
      for (auto& s : group_cells(find_group(groups, 1, c.position, name))) row.push_back(s);
      for (auto& s : group_cells(find_group(groups, 2, c.position, name))) row.push_back(s);
      agg.row(row);

      for (std::size_t r = 0; r < c.outcomes.replicates.size(); ++r) {
        const auto& rep = c.outcomes.replicates[r];
        auto srow = lead;
        srow.push_back(std::to_string(r));
        for (std::size_t d = 0; d < kDistricts; ++d) srow.push_back(num(rep.flow.at(d)));
        for (std::size_t d = 0; d < kDistricts; ++d) srow.push_back(num(rep.pickups[d]));
        srow.push_back(num(rep.total_pickups()));
        srow.push_back(num(c.max_pickups));
        srow.push_back(num(ratio.ratios[r]));
        srow.push_back(num(shift.values[r]));
        sys.row(srow);

        const double total = rep.flow.total();
        const FlowDistribution shown = c.displayed.rescaled(total);
        auto drow = lead;
        drow.push_back(std::to_string(r));
        PerDistrict d{};
        for (std::size_t k = 0; k < kDistricts; ++k) d[k] = shown.at(k) - rep.flow.at(k);
        // Force exact conservation in the printed counts.
        d[2] = -(d[0] + d[1]);
        for (double v : d) drow.push_back(num(v));
        for (double v : d) drow.push_back(num(total > 0 ? v / total : 0.0));
        diff.row(drow);
      }
    }
  }

  {
    CsvWriter br(path_of(kBestResponseReport),
                 {"level", "position", "trial", "display", "feedback", "best_responses", "best_response_rate", "agents"});
    const auto seq = config.trial_sequence(parse_variant(config_doc.at("variant").get<std::string>()).value());
    for (const auto& [key, g] : groups) {
      const auto& [level, position, cell] = key;
      const auto tc = parse_cell(cell).value();
      br.row({std::to_string(level), std::to_string(position), std::to_string(seq[static_cast<std::size_t>(position)]),
              tc.display == DisplayKind::hops_frames ? "hops" : "static",
              tc.feedback == FeedbackStructure::full ? "full" : "bandit", g.best_set,
              num(static_cast<double>(g.best) / static_cast<double>(g.count)), std::to_string(g.count)});
    }
  }

  {
    CsvWriter ind(path_of(kIndividualReport),
                  {"stage", "agent", "level", "acts_as_l1", "display", "feedback", "position", "trial", "chosen",
                   "best_response", "anticipation_error", "got_pickup", "running_reward_cents"});
    for (const auto* events : {&l1_events, &l2_events}) {
      for (const auto& e : *events) {
        const auto tc = parse_cell(e.at("cell").get<std::string>()).value();
        ind.row({e.at("stage").get<std::string>(), e.at("agent").get<std::string>(),
                 std::to_string(e.at("level").get<int>()), e.at("acts_as_l1").get<bool>() ? "1" : "0",
                 tc.display == DisplayKind::hops_frames ? "hops" : "static",
                 tc.feedback == FeedbackStructure::full ? "full" : "bandit",
                 std::to_string(e.at("position").get<int>()), std::to_string(e.at("trial").get<int>()),
                 e.at("chosen").get<std::string>(), e.at("best_response").get<bool>() ? "1" : "0",
                 num(e.at("anticipation_error").get<double>()),
                 e.at("feedback").at("got_pickup").get<bool>() ? "1" : "0",
                 std::to_string(e.at("running_reward").get<long>())});
      }
    }
  }
  return paths;
}

}  // namespace cglab
