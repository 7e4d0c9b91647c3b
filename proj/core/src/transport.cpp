#include "cglab/transport.hpp"

#include <cmath>
#include <limits>

namespace cglab {

GroundMetric::GroundMetric(std::vector<Point2> positions) : positions_(std::move(positions)) {
  const std::size_t n = positions_.size();
  distance_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      distance_[i * n + j] =
          std::hypot(positions_[i].x - positions_[j].x, positions_[i].y - positions_[j].y);
    }
  }
}

GroundMetric GroundMetric::collinear() { return GroundMetric({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}); }

GroundMetric GroundMetric::from_action_set(const ActionSet& set) {
  std::vector<Point2> p;
  for (const auto& d : set) p.push_back(d.position);
  return GroundMetric(std::move(p));
}

namespace {

struct Edge {
  std::size_t to;
  double capacity;
  double cost;
  std::size_t reverse;
};

class FlowGraph {
 public:
  explicit FlowGraph(std::size_t n) : adj_(n) {}

  void add(std::size_t from, std::size_t to, double capacity, double cost) {
    adj_[from].push_back({to, capacity, cost, adj_[to].size()});
    adj_[to].push_back({from, 0.0, -cost, adj_[from].size() - 1});
  }

  /// Sends up to `amount` from s to t at minimum cost; returns the cost.
  double min_cost_flow(std::size_t s, std::size_t t, double amount, double eps) {
    const std::size_t n = adj_.size();
    double cost = 0.0;
    while (amount > eps) {
      // Bellman-Ford: residual costs may be negative.
      std::vector<double> dist(n, std::numeric_limits<double>::infinity());
      std::vector<std::size_t> prev_node(n, n), prev_edge(n, 0);
      dist[s] = 0.0;
      for (std::size_t round = 0; round + 1 < n; ++round) {
        bool changed = false;
        for (std::size_t u = 0; u < n; ++u) {
          if (dist[u] == std::numeric_limits<double>::infinity()) continue;
          for (std::size_t k = 0; k < adj_[u].size(); ++k) {
            const Edge& e = adj_[u][k];
            if (e.capacity > eps && dist[u] + e.cost < dist[e.to] - 1e-15) {
              dist[e.to] = dist[u] + e.cost;
              prev_node[e.to] = u;
              prev_edge[e.to] = k;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (prev_node[t] == n) break;
      double push = amount;
      for (std::size_t v = t; v != s; v = prev_node[v]) {
        push = std::min(push, adj_[prev_node[v]][prev_edge[v]].capacity);
      }
      for (std::size_t v = t; v != s; v = prev_node[v]) {
        Edge& e = adj_[prev_node[v]][prev_edge[v]];
        e.capacity -= push;
        adj_[v][e.reverse].capacity += push;
        cost += push * e.cost;
      }
      amount -= push;
    }
    return cost;
  }

 private:
  std::vector<std::vector<Edge>> adj_;
};

}  // namespace

double transport_cost(std::span<const double> supply, std::span<const double> demand,
                      const GroundMetric& metric) {
  const std::size_t n = metric.size();
  if (supply.size() != n || demand.size() != n) {
    throw Error(Errc::invalid_argument, "transport vectors must match the metric size");
  }
  double total = 0.0;
  for (double x : supply) total += x;
  // Nodes: 0 source, 1..n supply, n+1..2n demand, 2n+1 sink.
  FlowGraph g(2 * n + 2);
  const std::size_t sink = 2 * n + 1;
  const double inf = total + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    g.add(0, 1 + i, supply[i], 0.0);
    g.add(1 + n + i, sink, demand[i], 0.0);
    for (std::size_t j = 0; j < n; ++j) g.add(1 + i, 1 + n + j, inf, metric(i, j));
  }
  return g.min_cost_flow(0, sink, total, 1e-12 * std::max(1.0, total));
}

double emd(const FlowDistribution& a, const FlowDistribution& b, const GroundMetric& metric) {
  const double ta = a.total();
  const double tb = b.total();
  if (std::abs(ta - tb) > 1e-6) throw Error(Errc::mass_mismatch, "mass mismatch");
  if (!(ta > 0.0)) throw Error(Errc::invalid_argument, "emd needs positive mass");
  if (metric.size() != kDistricts) throw Error(Errc::invalid_argument, "metric must cover three districts");
  return transport_cost(a.counts(), b.counts(), metric) / ta;
}

}  // namespace cglab
