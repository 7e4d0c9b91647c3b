#include "cglab/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cglab {

void CounterfactualModel::validate() const {
  for (const auto& c : districts) {
    if (!std::isfinite(c.intercept) || !std::isfinite(c.slope)) {
      throw Error(Errc::invalid_argument, "model coefficients must be finite");
    }
    if (!(c.flow_min >= 1.0) || !(c.flow_min <= c.flow_max)) {
      throw Error(Errc::invalid_argument, "model flow bounds must satisfy 1 <= flow_min <= flow_max");
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(Errc::invalid_argument, "model sigma must be positive");
  }
  for (const auto& d : draws) {
    if (!(d.sigma > 0.0)) throw Error(Errc::invalid_argument, "posterior draw sigma must be positive");
  }
}

std::vector<TrainingObservation> training_data(std::span<const DecisionScenario> scenarios) {
  std::vector<TrainingObservation> out;
  for (const auto& s : scenarios) {
    for (District d : kAllDistricts) {
      const double flow = s.deduced_flow[d];
      const double pickups = s.historical_pickups[index(d)];
      if (flow >= 1.0 && pickups >= 1.0) out.push_back({d, flow, pickups});
    }
  }
  return out;
}

namespace {

struct OlsFit {
  std::size_t n = 0;
  double x_mean = 0.0;
  double y_mean = 0.0;
  double sxx = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_var = 0.0;
  double flow_min = std::numeric_limits<double>::infinity();
  double flow_max = 0.0;
};

OlsFit ols(const std::vector<TrainingObservation>& obs) {
  OlsFit f;
  f.n = obs.size();
  for (const auto& o : obs) {
    f.x_mean += std::log(o.flow);
    f.y_mean += std::log(o.pickups);
    f.flow_min = std::min(f.flow_min, o.flow);
    f.flow_max = std::max(f.flow_max, o.flow);
  }
  f.x_mean /= static_cast<double>(f.n);
  f.y_mean /= static_cast<double>(f.n);
  double sxy = 0.0;
  for (const auto& o : obs) {
    const double dx = std::log(o.flow) - f.x_mean;
    f.sxx += dx * dx;
    sxy += dx * (std::log(o.pickups) - f.y_mean);
  }
  if (!(f.sxx > 1e-12)) throw Error(Errc::degenerate_training, "degenerate training data");
  f.slope = sxy / f.sxx;
  f.intercept = f.y_mean - f.slope * f.x_mean;
  double rss = 0.0;
  for (const auto& o : obs) {
    const double r = std::log(o.pickups) - (f.intercept + f.slope * std::log(o.flow));
    rss += r * r;
  }
  f.residual_var = f.n > 2 ? rss / static_cast<double>(f.n - 2) : 0.0;
  return f;
}

double shrink_weight(double tau2, double sampling_var) {
  const double denom = tau2 + sampling_var;
  return denom > 0.0 ? tau2 / denom : 1.0;
}

}  // namespace

CounterfactualModel fit(std::span<const TrainingObservation> data, Shrinkage shrinkage) {
  std::array<std::vector<TrainingObservation>, kDistricts> by_district;
  for (const auto& o : data) {
    if (!(o.flow >= 1.0) || !(o.pickups >= 1.0) || !std::isfinite(o.flow) || !std::isfinite(o.pickups)) {
      throw Error(Errc::degenerate_training, "degenerate training data");
    }
    by_district[index(o.district)].push_back(o);
  }
  std::array<OlsFit, kDistricts> fits;
  for (std::size_t d = 0; d < kDistricts; ++d) {
    if (by_district[d].size() < 3) throw Error(Errc::degenerate_training, "degenerate training data");
    fits[d] = ols(by_district[d]);
  }

  CounterfactualModel model;
  for (std::size_t d = 0; d < kDistricts; ++d) {
    model.districts[d] = {fits[d].intercept, fits[d].slope, std::max(1.0, fits[d].flow_min),
                          fits[d].flow_max};
  }

  if (shrinkage == Shrinkage::pooled) {
    std::vector<TrainingObservation> all(data.begin(), data.end());
    const OlsFit global = ols(all);
    double slope_dev = 0.0, level_dev = 0.0, slope_var = 0.0, level_var = 0.0;
    std::array<double, kDistricts> global_level{};
    for (std::size_t d = 0; d < kDistricts; ++d) {
      global_level[d] = global.intercept + global.slope * fits[d].x_mean;
      slope_dev += std::pow(fits[d].slope - global.slope, 2);
      level_dev += std::pow(fits[d].y_mean - global_level[d], 2);
      slope_var += fits[d].residual_var / fits[d].sxx;
      level_var += fits[d].residual_var / static_cast<double>(fits[d].n);
    }
    const double n = static_cast<double>(kDistricts);
    const double tau2_slope = std::max(0.0, slope_dev / n - slope_var / n);
    const double tau2_level = std::max(0.0, level_dev / n - level_var / n);
    for (std::size_t d = 0; d < kDistricts; ++d) {
      const double ws = shrink_weight(tau2_slope, fits[d].residual_var / fits[d].sxx);
      const double wl = shrink_weight(tau2_level, fits[d].residual_var / static_cast<double>(fits[d].n));
      const double slope = ws * fits[d].slope + (1.0 - ws) * global.slope;
      const double level = wl * fits[d].y_mean + (1.0 - wl) * global_level[d];
      model.districts[d].slope = slope;
      model.districts[d].intercept = level - slope * fits[d].x_mean;
    }
  }

  double rss = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < kDistricts; ++d) {
    for (const auto& o : by_district[d]) {
      const double r = std::log(o.pickups) -
                       (model.districts[d].intercept + model.districts[d].slope * std::log(o.flow));
      rss += r * r;
      ++n;
    }
  }
  const double dof = static_cast<double>(n) - 2.0 * static_cast<double>(kDistricts);
  model.sigma = std::max(1e-12, dof > 0.0 ? std::sqrt(rss / dof) : 0.0);
  return model;
}

namespace {

double log_mean(const DistrictCoefficients& c, double intercept, double slope, double flow) {
  (void)c;
  return intercept + slope * std::log(flow);
}

double clamp_to_flow(double pickups, double flow) { return std::clamp(pickups, 0.0, flow); }

}  // namespace

double predict_pickups(const CounterfactualModel& model, District d, double flow) {
  if (flow <= 0.0) return 0.0;
  const auto& c = model.districts[index(d)];
  const double eval = std::min(flow, c.flow_max);
  const double mu = log_mean(c, c.intercept, c.slope, eval);
  return clamp_to_flow(std::exp(mu + 0.5 * model.sigma * model.sigma), flow);
}

PerDistrict predict_pickups(const CounterfactualModel& model, const FlowDistribution& flow) {
  PerDistrict out{};
  for (District d : kAllDistricts) out[index(d)] = predict_pickups(model, d, flow[d]);
  return out;
}

PerDistrict predict_pickups(const CounterfactualModel& model, const FlowDistribution& flow,
                            DrawMode mode, Rng& rng) {
  if (mode == DrawMode::mean) return predict_pickups(model, flow);
  const PosteriorDraw* draw =
      model.draws.empty() ? nullptr : &model.draws[uniform_index(rng, model.draws.size())];
  PerDistrict out{};
  for (District d : kAllDistricts) {
    const auto i = index(d);
    const double f = flow[d];
    const double z = standard_normal(rng);
    if (f <= 0.0) continue;
    const auto& c = model.districts[i];
    const double eval = std::min(f, c.flow_max);
    const double a = draw ? draw->intercept[i] : c.intercept;
    const double b = draw ? draw->slope[i] : c.slope;
    const double s = draw ? draw->sigma : model.sigma;
    out[i] = clamp_to_flow(std::exp(log_mean(c, a, b, eval) + s * z), f);
  }
  return out;
}

double pickup_probability(double pickups, double flow) {
  if (flow <= 0.0) return 1.0;
  return std::clamp(pickups / flow, 0.0, 1.0);
}

PerDistrict pickup_probability(const CounterfactualModel& model, const FlowDistribution& flow) {
  const auto pickups = predict_pickups(model, flow);
  PerDistrict out{};
  for (std::size_t i = 0; i < kDistricts; ++i) out[i] = pickup_probability(pickups[i], flow.at(i));
  return out;
}

PerDistrict pickup_probability(const CounterfactualModel& model, const FlowDistribution& flow,
                               DrawMode mode, Rng& rng) {
  const auto pickups = predict_pickups(model, flow, mode, rng);
  PerDistrict out{};
  for (std::size_t i = 0; i < kDistricts; ++i) out[i] = pickup_probability(pickups[i], flow.at(i));
  return out;
}

HypotheticalOutcomeSet simulate_hypothetical_outcomes(const DecisionScenario& scenario,
                                                      const CounterfactualModel& model,
                                                      const SimulationOptions& options,
                                                      std::uint64_t seed) {
  if (options.frames <= 0) throw Error(Errc::invalid_argument, "frame count must be positive");
  // Cumulative prior weights per candidate, normalized.
  std::vector<PerDistrict> cumulative(scenario.candidates.size());
  for (std::size_t i = 0; i < scenario.candidates.size(); ++i) {
    const auto& w = scenario.candidates[i].prior.weights;
    const double total = w[0] + w[1] + w[2];
    if (!(total > 0.0)) throw Error(Errc::invalid_argument, "candidate has an empty search prior");
    cumulative[i] = {w[0] / total, (w[0] + w[1]) / total, 1.0};
  }

  HypotheticalOutcomeSet set;
  set.frames.resize(static_cast<std::size_t>(options.frames));
  for (std::size_t f = 0; f < set.frames.size(); ++f) {
    Rng rng = make_rng(derive_seed(seed, {f}));
    PerDistrict counts{};
    for (const auto& c : cumulative) {
      if (c[0] >= 1.0) {
        counts[0] += 1.0;
        continue;
      }
      const double u = uniform01(rng);
      counts[u < c[0] ? 0 : (u < c[1] ? 1 : 2)] += 1.0;
    }
    OutcomeFrame& frame = set.frames[f];
    frame.flow = FlowDistribution(counts);
    frame.pickups = options.coefficient_uncertainty
                        ? predict_pickups(model, frame.flow, DrawMode::posterior_sample, rng)
                        : predict_pickups(model, frame.flow);
    for (std::size_t i = 0; i < kDistricts; ++i) {
      frame.probability[i] = pickup_probability(frame.pickups[i], counts[i]);
    }
  }
  return set;
}

DisplayPayload summarize_display(const HypotheticalOutcomeSet& set, DisplayKind kind) {
  if (set.frames.empty()) throw Error(Errc::invalid_argument, "hypothetical outcome set is empty");
  DisplayPayload payload;
  payload.kind = kind;
  PerDistrict flow{}, prob{};
  for (const auto& fr : set.frames) {
    for (std::size_t i = 0; i < kDistricts; ++i) {
      flow[i] += fr.flow.at(i);
      prob[i] += fr.probability[i];
    }
  }
  const double n = static_cast<double>(set.frames.size());
  for (std::size_t i = 0; i < kDistricts; ++i) {
    flow[i] /= n;
    prob[i] /= n;
  }
  payload.mean_flow = FlowDistribution(flow);
  payload.mean_probability = prob;
  if (kind == DisplayKind::hops_frames) payload.frames = set.frames;
  return payload;
}

}  // namespace cglab
