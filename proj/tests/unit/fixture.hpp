#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>

#include "cglab/experiment.hpp"

namespace cglab::test {

/// Desk-scale config: a short synthetic corpus, few frames and replicates
/// and a tenth of the default roster.
inline ExperimentConfig small_config() {
  ExperimentConfig c;
  c.source.synthetic.drivers = 240;
  c.source.synthetic.days = 30;
  c.simulation.frames = 200;
  c.simulation.outcome_replicates = 100;
  c.simulation.system_replicates = 20;
  c.roster_scale = 0.1;
  c.welfare.restarts = 3;
  return c;
}

inline std::shared_ptr<const PreparedExperiment> small_prep() {
  static const auto prep = std::make_shared<const PreparedExperiment>(prepare(small_config()));
  return prep;
}

/// Fresh scratch directory under the build tree.
inline std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::path(CGLAB_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Code of the cglab::Error `f` throws; empty when it returns normally.
template <typename F>
std::optional<Errc> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace cglab::test
