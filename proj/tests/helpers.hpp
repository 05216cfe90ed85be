#pragma once

// Shared test utilities: random graph/assignment generation and a brute-force
// reimplementation of every metric, written against the definitions rather
// than the library (enumerate neighbor pairs, filter, divide).

#include "docd/graph.hpp"
#include "docd/metrics.hpp"

#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace testutil {

// Random attachment tree plus up to `extra` chords; connected by construction.
// Requires n >= 2.
inline docd::Graph random_connected_graph(std::mt19937& rng, int n, int extra) {
  std::vector<std::pair<docd::VertexId, docd::VertexId>> edges;
  std::set<std::pair<int, int>> have;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> d(0, v - 1);
    int u = d(rng);
    edges.emplace_back(u, v);
    have.emplace(u, v);
  }
  std::uniform_int_distribution<int> dv(0, n - 1);
  for (int k = 0; k < extra; ++k) {
    int a = dv(rng), b = dv(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!have.emplace(a, b).second) continue;
    edges.emplace_back(a, b);
  }
  return docd::Graph::from_edges(edges);
}

// Random overlapping assignment with <= k communities; every community that
// appears is non-empty, not every vertex need be covered by a second home.
inline docd::CommunityAssignment random_assignment(std::mt19937& rng,
                                                   const docd::Graph& g, int k) {
  std::map<docd::CommunityId, std::set<docd::VertexId>> comms;
  std::uniform_int_distribution<int> dc(0, k - 1);
  std::uniform_int_distribution<int> overlap(0, 3);
  for (docd::VertexId v : g.vertices()) {
    comms[dc(rng)].insert(v);
    if (overlap(rng) == 0) comms[dc(rng)].insert(v);
  }
  return docd::CommunityAssignment::from_communities(comms);
}

inline long edges_among_filtered(const docd::Graph& g, docd::VertexId v,
                                 const std::set<docd::VertexId>* filter) {
  const auto& nb = g.neighbors(v);
  long mu = 0;
  for (size_t i = 0; i < nb.size(); ++i) {
    if (filter && !filter->count(nb[i])) continue;
    for (size_t j = i + 1; j < nb.size(); ++j) {
      if (filter && !filter->count(nb[j])) continue;
      if (g.has_edge(nb[i], nb[j])) ++mu;
    }
  }
  return mu;
}

inline double ratio_of(const docd::Graph& g, docd::VertexId v, long mu) {
  int d = g.degree(v);
  if (d <= 1) return 0.0;
  return 2.0 * static_cast<double>(mu) /
         (static_cast<double>(d) * static_cast<double>(d - 1));
}

inline double cc_brute(const docd::Graph& g, docd::VertexId v) {
  return ratio_of(g, v, edges_among_filtered(g, v, nullptr));
}

inline double nm_brute(const docd::Graph& g, docd::VertexId v,
                       const std::set<docd::VertexId>& members) {
  return ratio_of(g, v, edges_among_filtered(g, v, &members));
}

inline double onm_brute(const docd::Graph& g, docd::VertexId v,
                        const docd::CommunityAssignment& a) {
  std::set<docd::VertexId> uni;
  auto it = a.membership.find(v);
  if (it != a.membership.end())
    for (docd::CommunityId c : it->second) {
      const auto& m = a.communities.at(c);
      uni.insert(m.begin(), m.end());
    }
  return ratio_of(g, v, edges_among_filtered(g, v, &uni));
}

inline double cm_brute(const docd::Graph& g, const docd::CommunityAssignment& a,
                       docd::CommunityId c) {
  const auto& members = a.communities.at(c);
  double sum = 0.0;
  for (docd::VertexId v : members) sum += nm_brute(g, v, members);
  return sum / static_cast<double>(members.size());
}

inline double overall_brute(const docd::Graph& g,
                            const docd::CommunityAssignment& a) {
  double sum = 0.0;
  for (const auto& [c, members] : a.communities) {
    (void)members;
    sum += cm_brute(g, a, c);
  }
  return sum / static_cast<double>(a.communities.size());
}

}  // namespace testutil
