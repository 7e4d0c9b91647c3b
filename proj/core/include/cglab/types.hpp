#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cglab {

inline constexpr std::size_t kDistricts = 3;

/// Machine-readable error codes; the session service echoes these verbatim.
enum class Errc {
  invalid_argument,
  degenerate_levels,
  no_belief,
  empty_scenario,
  degenerate_training,
  mass_mismatch,
  staging_violation,
  constraint_set_empty,
  perception_mismatch,
  config_mismatch,
  trial_order_violation,
  validation,
  duplicate_submission,
  not_found,
  invalid_state,
  io,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// The three actions of the game. Index order (W, N, E) is used for every
/// per-district array in the library.
enum class District : std::uint8_t { West = 0, North = 1, East = 2 };

inline constexpr std::array<District, kDistricts> kAllDistricts = {District::West, District::North,
                                                                   District::East};

constexpr std::size_t index(District d) { return static_cast<std::size_t>(d); }
constexpr District district_at(std::size_t i) { return static_cast<District>(i); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct DistrictInfo {
  District id;
  std::string label;
  int community_area = 0;
  Point2 position;
};

using ActionSet = std::array<DistrictInfo, kDistricts>;

/// West Loop (CA 28), North Loop (CA 8) and the Loop (CA 32), positioned at
/// their approximate centroids scaled to unit mean pairwise distance.
const ActionSet& default_action_set();
/// Validates ids unique, CA codes unique and positions pairwise distinct.
void validate_action_set(const ActionSet& set);

std::string_view district_name(District d);
std::optional<District> parse_district(std::string_view name);
int community_area(District d, const ActionSet& set = default_action_set());
std::optional<District> district_from_ca(int ca, const ActionSet& set = default_action_set());

using PerDistrict = std::array<double, kDistricts>;

/// Greatest value; ties go to the smallest CA code.
District argmax_district(const PerDistrict& values, const ActionSet& set = default_action_set());

/// Non-negative driver counts per district.
class FlowDistribution {
 public:
  FlowDistribution() = default;
  explicit FlowDistribution(const PerDistrict& counts);

  double operator[](District d) const { return counts_[index(d)]; }
  double at(std::size_t i) const { return counts_.at(i); }
  const PerDistrict& counts() const { return counts_; }
  double total() const;

  /// Same shape scaled to `new_total`. A zero flow rescales to an even split.
  FlowDistribution rescaled(double new_total) const;
  PerDistrict shares() const;

  friend bool operator==(const FlowDistribution&, const FlowDistribution&) = default;

 private:
  PerDistrict counts_{};
};

/// Integer cents keep the reward invariant (base + 0.2 x pickups) exact.
struct Cents {
  std::int64_t value = 0;
  double dollars() const { return static_cast<double>(value) / 100.0; }
  friend auto operator<=>(const Cents&, const Cents&) = default;
};

inline constexpr Cents kBasePay{200};
inline constexpr Cents kPickupBonus{20};

enum class DisplayKind { static_point, hops_frames };
enum class FeedbackStructure { bandit, full };

struct TreatmentCell {
  DisplayKind display = DisplayKind::static_point;
  FeedbackStructure feedback = FeedbackStructure::bandit;
  friend auto operator<=>(const TreatmentCell&, const TreatmentCell&) = default;
};

/// Static+Bandit, Static+Full, NetHOPs+Bandit, NetHOPs+Full.
inline constexpr std::array<TreatmentCell, 4> kTreatmentCells = {
    TreatmentCell{DisplayKind::static_point, FeedbackStructure::bandit},
    TreatmentCell{DisplayKind::static_point, FeedbackStructure::full},
    TreatmentCell{DisplayKind::hops_frames, FeedbackStructure::bandit},
    TreatmentCell{DisplayKind::hops_frames, FeedbackStructure::full},
};

std::string cell_name(const TreatmentCell& cell);
std::optional<TreatmentCell> parse_cell(std::string_view name);
std::string_view display_name(DisplayKind k);
std::string_view feedback_name(FeedbackStructure f);

}  // namespace cglab
