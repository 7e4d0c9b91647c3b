#include "cglab/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cglab/rng.hpp"

namespace cglab {

double PickupLaw::expected_pickups(District d, double flow) const {
  if (flow <= 0.0) return 0.0;
  const double p = std::exp(intercept[index(d)] + slope[index(d)] * std::log(flow));
  return std::clamp(p, 0.0, flow);
}

double PickupLaw::probability(District d, double flow) const {
  if (flow <= 0.0) return 1.0;
  return std::min(1.0, expected_pickups(d, flow) / flow);
}

namespace {

constexpr std::array<int, 5> kOrigins = {28, 8, 32, 24, 33};
constexpr std::array<int, 2> kElsewhere = {6, 7};

double gamma_variate(Rng& rng, double shape) {
  // Marsaglia-Tsang; boost shape < 1 via the u^(1/shape) trick.
  if (shape < 1.0) {
    const double u = std::max(uniform01(rng), 1e-300);
    return gamma_variate(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(std::max(u, 1e-300)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::size_t sample_index(Rng& rng, const PerDistrict& w) {
  const double total = w[0] + w[1] + w[2];
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return kDistricts - 1;
}

struct Driver {
  std::string id;
  std::array<std::size_t, kOrigins.size()> preference{};  // district index per origin
};

std::vector<Driver> make_drivers(const SyntheticConfig& cfg) {
  std::vector<Driver> drivers(static_cast<std::size_t>(cfg.drivers));
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%05zu", i);
    drivers[i].id = buf;
    Rng rng = make_rng(derive_seed(cfg.seed, {0xD1, i}));
    // First three shuffled origins cover every district; the rest are free.
    std::array<std::size_t, kOrigins.size()> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
    for (std::size_t k = 0; k < order.size(); ++k) {
      drivers[i].preference[order[k]] = k < kDistricts ? k : uniform_index(rng, kDistricts);
    }
  }
  return drivers;
}

class DayWriter {
 public:
  DayWriter(Date day, int bin, std::vector<TripRecord>& out) : day_(day), bin_(bin), out_(out) {}

  void trip(const std::string& id, int start_min, int end_min, int pickup_ca, int dropoff_ca) {
    auto snap = [&](int m) { return bin_ > 0 ? m - m % bin_ : m; };
    out_.push_back({id, make_timestamp(day_, snap(start_min)), make_timestamp(day_, snap(end_min)),
                    pickup_ca, dropoff_ca});
  }

 private:
  Date day_;
  int bin_;
  std::vector<TripRecord>& out_;
};

int action_ca(std::size_t district) { return default_action_set()[district].community_area; }

void generate_weekend(const SyntheticConfig& cfg, const std::vector<Driver>& drivers, Date day,
                      std::vector<TripRecord>& out) {
  DayWriter w(day, cfg.bin_minutes, out);
  const auto day_key = static_cast<std::uint64_t>(day.time_since_epoch().count());
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    Rng rng = make_rng(derive_seed(cfg.seed, {0xE7, day_key, i}));
    if (!bernoulli(rng, 0.3)) continue;
    const int start = 7 * 60 + static_cast<int>(uniform_index(rng, 300));
    w.trip(drivers[i].id, start, start + 10 + static_cast<int>(uniform_index(rng, 15)),
           kOrigins[uniform_index(rng, kOrigins.size())], kOrigins[uniform_index(rng, kOrigins.size())]);
  }
}

void generate_weekday(const SyntheticConfig& cfg, const std::vector<Driver>& drivers, Date day,
                      const PerDistrict& skew, std::vector<TripRecord>& out) {
  DayWriter w(day, cfg.bin_minutes, out);
  const auto day_key = static_cast<std::uint64_t>(day.time_since_epoch().count());
  std::array<std::vector<std::size_t>, kDistricts> searchers;
  std::vector<std::size_t> origin_of(drivers.size(), 0);
  std::vector<int> last_drop(drivers.size(), 0);
  std::vector<char> active(drivers.size(), 0);

  auto next_pickup = [&](Rng& rng, const Driver& d, std::size_t origin) {
    if (bernoulli(rng, cfg.loyalty)) return action_ca(d.preference[origin]);
    return action_ca(uniform_index(rng, kDistricts));
  };

  for (std::size_t i = 0; i < drivers.size(); ++i) {
    const Driver& d = drivers[i];
    Rng rng = make_rng(derive_seed(cfg.seed, {0xA1, day_key, i}));
    if (!bernoulli(rng, cfg.active_probability)) continue;
    active[i] = 1;

    const std::size_t goal = sample_index(rng, skew);
    std::vector<std::size_t> matching;
    for (std::size_t o = 0; o < kOrigins.size(); ++o) {
      if (d.preference[o] == goal) matching.push_back(o);
    }
    const std::size_t origin = matching[uniform_index(rng, matching.size())];
    origin_of[i] = origin;

    // Early AM chain ending with a drop-off at `origin` between 08:40 and 08:58.
    const int n_prior = 1 + static_cast<int>(uniform_index(rng, 3));
    std::vector<std::size_t> drops(static_cast<std::size_t>(n_prior));
    for (auto& o : drops) o = uniform_index(rng, kOrigins.size());
    drops.back() = origin;
    std::vector<std::array<int, 2>> times(drops.size());
    int end = 8 * 60 + 40 + static_cast<int>(uniform_index(rng, 19));
    last_drop[i] = end;
    for (std::size_t k = drops.size(); k-- > 0;) {
      const int start = end - 8 - static_cast<int>(uniform_index(rng, 13));
      times[k] = {start, end};
      end = start - 3 - static_cast<int>(uniform_index(rng, 10));
    }
    for (std::size_t k = 0; k < drops.size(); ++k) {
      if (times[k][0] < 7 * 60) continue;
      const int pickup = k == 0 ? kOrigins[uniform_index(rng, kOrigins.size())]
                                : next_pickup(rng, d, drops[k - 1]);
      w.trip(d.id, times[k][0], times[k][1], pickup, kOrigins[drops[k]]);
    }

    if (bernoulli(rng, cfg.elsewhere_probability)) {
      const int start = 9 * 60 + static_cast<int>(uniform_index(rng, 15));
      w.trip(d.id, start, start + 12, kElsewhere[uniform_index(rng, kElsewhere.size())],
             kOrigins[uniform_index(rng, kOrigins.size())]);
      active[i] = 2;
      continue;
    }
    searchers[goal].push_back(i);
  }

  for (std::size_t g = 0; g < kDistricts; ++g) {
    auto& list = searchers[g];
    Rng rng = make_rng(derive_seed(cfg.seed, {0xB2, day_key, g}));
    const double flow = static_cast<double>(list.size());
    long pickups = 0;
    if (flow > 0.0) {
      const double log_mu = cfg.law.intercept[g] + cfg.law.slope[g] * std::log(flow) +
                            cfg.law.sigma * standard_normal(rng);
      pickups = std::clamp(std::lround(std::exp(log_mu)), 0L, static_cast<long>(list.size()));
    }
    for (std::size_t k = list.size(); k > 1; --k) std::swap(list[k - 1], list[uniform_index(rng, k)]);
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::size_t i = list[k];
      Rng trng = make_rng(derive_seed(cfg.seed, {0xC3, day_key, i}));
      const int start = k < static_cast<std::size_t>(pickups)
                            ? 9 * 60 + static_cast<int>(uniform_index(trng, 15))
                            : 9 * 60 + 16 + static_cast<int>(uniform_index(trng, 35));
      const std::size_t drop = uniform_index(trng, kOrigins.size());
      const int stop = start + 8 + static_cast<int>(uniform_index(trng, 13));
      w.trip(drivers[i].id, start, stop, action_ca(g), kOrigins[drop]);
      if (stop + 10 < 10 * 60) {
        const int s2 = stop + 4 + static_cast<int>(uniform_index(trng, 6));
        w.trip(drivers[i].id, s2, s2 + 10, next_pickup(trng, drivers[i], drop),
               kOrigins[uniform_index(trng, kOrigins.size())]);
      }
    }
  }

  // Midday trips fall outside the AM stratum.
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    if (!active[i]) continue;
    Rng rng = make_rng(derive_seed(cfg.seed, {0xF4, day_key, i}));
    const int start = 11 * 60 + static_cast<int>(uniform_index(rng, 180));
    w.trip(drivers[i].id, start, start + 15, kOrigins[uniform_index(rng, kOrigins.size())],
           kOrigins[uniform_index(rng, kOrigins.size())]);
  }
}

PerDistrict day_skew_for(const SyntheticConfig& cfg, Date day) {
  if (auto it = cfg.day_skew.find(day); it != cfg.day_skew.end()) return it->second;
  if (cfg.skew_concentration <= 0.0) return cfg.skew;
  Rng rng = make_rng(derive_seed(cfg.seed, {0x5E, static_cast<std::uint64_t>(day.time_since_epoch().count())}));
  PerDistrict s{};
  double total = 0.0;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    s[i] = gamma_variate(rng, std::max(1e-3, cfg.skew[i] * cfg.skew_concentration));
    total += s[i];
  }
  for (auto& v : s) v /= total;
  return s;
}

}  // namespace

std::vector<TripRecord> generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.drivers <= 0) throw Error(Errc::invalid_argument, "synthetic corpus needs drivers > 0");
  if (cfg.dates.empty() && cfg.days <= 0) {
    throw Error(Errc::invalid_argument, "synthetic corpus needs days > 0");
  }
  for (double s : cfg.skew) {
    if (!(s >= 0.0)) throw Error(Errc::invalid_argument, "skew must be non-negative");
  }
  const auto drivers = make_drivers(cfg);
  std::vector<TripRecord> out;

  if (!cfg.dates.empty()) {
    auto dates = cfg.dates;
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    for (Date d : dates) {
      if (is_weekday(d)) {
        generate_weekday(cfg, drivers, d, day_skew_for(cfg, d), out);
      } else {
        generate_weekend(cfg, drivers, d, out);
      }
    }
    return out;
  }

  int weekdays = 0;
  for (Date d = cfg.start; weekdays < cfg.days; d += std::chrono::days{1}) {
    if (is_weekday(d)) {
      generate_weekday(cfg, drivers, d, day_skew_for(cfg, d), out);
      ++weekdays;
    } else {
      generate_weekend(cfg, drivers, d, out);
    }
  }
  return out;
}

PerDistrict calibrate_day_skew(const PickupLaw& law, double n_drivers, const TrialTarget& target,
                               std::span<const double> l2_belief, double min_share) {
  if (l2_belief.size() != 2) throw Error(Errc::invalid_argument, "L2 belief must cover L0 and L1");
  if (target.l1_best == target.l2_best) {
    throw Error(Errc::invalid_argument, "L1 and L2 targets must differ under full L1 crowding");
  }
  auto margin = [&](const PerDistrict& flow, District want) {
    const double p_want = law.probability(want, flow[index(want)]);
    double other = 0.0;
    for (District d : kAllDistricts) {
      if (d != want) other = std::max(other, law.probability(d, flow[index(d)]));
    }
    return (p_want - other) / p_want;
  };

  PerDistrict best{};
  double best_score = -1.0;
  constexpr int kSteps = 100;
  for (int i = 0; i <= kSteps; ++i) {
    for (int j = 0; i + j <= kSteps; ++j) {
      const PerDistrict s{i / double(kSteps), j / double(kSteps), (kSteps - i - j) / double(kSteps)};
      if (*std::min_element(s.begin(), s.end()) < min_share) continue;
      PerDistrict l0{}, l2{};
      for (std::size_t k = 0; k < kDistricts; ++k) {
        l0[k] = n_drivers * s[k];
        l2[k] = n_drivers * l2_belief[0] * s[k];
      }
      l2[index(target.l1_best)] += n_drivers * l2_belief[1];
      const double score = std::min(margin(l0, target.l1_best), margin(l2, target.l2_best));
      if (score > best_score) {
        best_score = score;
        best = s;
      }
    }
  }
  if (best_score <= 0.0) {
    throw Error(Errc::invalid_argument, "no day skew realizes the requested best responses");
  }
  return best;
}

}  // namespace cglab
