#include "cglab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cglab {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_levels: return "degenerate_levels";
    case Errc::no_belief: return "no_belief";
    case Errc::empty_scenario: return "empty_scenario";
    case Errc::degenerate_training: return "degenerate_training";
    case Errc::mass_mismatch: return "mass_mismatch";
    case Errc::staging_violation: return "staging_violation";
    case Errc::constraint_set_empty: return "constraint_set_empty";
    case Errc::perception_mismatch: return "perception_mismatch";
    case Errc::config_mismatch: return "config_mismatch";
    case Errc::trial_order_violation: return "trial_order_violation";
    case Errc::validation: return "validation";
    case Errc::duplicate_submission: return "duplicate_submission";
    case Errc::not_found: return "not_found";
    case Errc::invalid_state: return "invalid_state";
    case Errc::io: return "io";
  }
  return "unknown";
}

namespace {

// Approximate community-area centroids (degrees).
struct LatLon {
  double lat;
  double lon;
};
constexpr LatLon kWestLoop{41.8748, -87.6705};
constexpr LatLon kNorthLoop{41.9008, -87.6340};
constexpr LatLon kLoop{41.8785, -87.6295};

Point2 project(LatLon p) {
  constexpr double kRefLat = 41.88;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  return {(p.lon + 87.65) * 111.32 * std::cos(kRefLat * kDegToRad), (p.lat - kRefLat) * 110.57};
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

ActionSet make_default() {
  std::array<Point2, kDistricts> pts = {project(kWestLoop), project(kNorthLoop), project(kLoop)};
  const double mean = (dist(pts[0], pts[1]) + dist(pts[0], pts[2]) + dist(pts[1], pts[2])) / 3.0;
  for (auto& p : pts) {
    p.x /= mean;
    p.y /= mean;
  }
  return {DistrictInfo{District::West, "West District", 28, pts[0]},
          DistrictInfo{District::North, "North District", 8, pts[1]},
          DistrictInfo{District::East, "East District", 32, pts[2]}};
}

}  // namespace

const ActionSet& default_action_set() {
  static const ActionSet set = make_default();
  return set;
}

void validate_action_set(const ActionSet& set) {
  for (std::size_t i = 0; i < kDistricts; ++i) {
    if (set[i].id != district_at(i)) {
      throw Error(Errc::invalid_argument, "action set must list West, North, East in order");
    }
    if (set[i].community_area < 1 || set[i].community_area > 77) {
      throw Error(Errc::invalid_argument, "community area code out of range");
    }
    for (std::size_t j = i + 1; j < kDistricts; ++j) {
      if (set[i].community_area == set[j].community_area) {
        throw Error(Errc::invalid_argument, "duplicate community area in action set");
      }
      if (set[i].position == set[j].position) {
        throw Error(Errc::invalid_argument, "district positions must be pairwise distinct");
      }
    }
  }
}

std::string_view district_name(District d) {
  switch (d) {
    case District::West: return "West";
    case District::North: return "North";
    case District::East: return "East";
  }
  return "?";
}

std::optional<District> parse_district(std::string_view name) {
  for (District d : kAllDistricts) {
    if (name == district_name(d)) return d;
  }
  if (name == "W" || name == "west") return District::West;
  if (name == "N" || name == "north") return District::North;
  if (name == "E" || name == "east") return District::East;
  return std::nullopt;
}

int community_area(District d, const ActionSet& set) { return set[index(d)].community_area; }

std::optional<District> district_from_ca(int ca, const ActionSet& set) {
  for (const auto& info : set) {
    if (info.community_area == ca) return info.id;
  }
  return std::nullopt;
}

FlowDistribution::FlowDistribution(const PerDistrict& counts) : counts_(counts) {
  for (double c : counts_) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Error(Errc::invalid_argument, "flow counts must be finite and non-negative");
    }
  }
}

District argmax_district(const PerDistrict& values, const ActionSet& set) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kDistricts; ++i) {
    if (values[i] > values[best] ||
        (values[i] == values[best] && set[i].community_area < set[best].community_area)) {
      best = i;
    }
  }
  return district_at(best);
}

double FlowDistribution::total() const { return counts_[0] + counts_[1] + counts_[2]; }

FlowDistribution FlowDistribution::rescaled(double new_total) const {
  const double t = total();
  PerDistrict out{};
  for (std::size_t i = 0; i < kDistricts; ++i) {
    out[i] = t > 0.0 ? counts_[i] * (new_total / t) : new_total / static_cast<double>(kDistricts);
  }
  return FlowDistribution(out);
}

PerDistrict FlowDistribution::shares() const {
  const double t = total();
  PerDistrict out{};
  for (std::size_t i = 0; i < kDistricts; ++i) {
    out[i] = t > 0.0 ? counts_[i] / t : 1.0 / static_cast<double>(kDistricts);
  }
  return out;
}

std::string_view display_name(DisplayKind k) {
  return k == DisplayKind::static_point ? "static" : "hops";
}

std::string_view feedback_name(FeedbackStructure f) {
  return f == FeedbackStructure::bandit ? "bandit" : "full";
}

std::string cell_name(const TreatmentCell& cell) {
  return std::string(display_name(cell.display)) + "_" + std::string(feedback_name(cell.feedback));
}

std::optional<TreatmentCell> parse_cell(std::string_view name) {
  for (const auto& c : kTreatmentCells) {
    if (cell_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace cglab
