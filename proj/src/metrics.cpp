#include "docd/metrics.hpp"

#include <algorithm>

namespace docd {

CommunityAssignment CommunityAssignment::from_communities(
    const std::map<CommunityId, std::set<VertexId>>& comms) {
  CommunityAssignment a;
  a.communities = comms;
  for (const auto& [c, members] : comms)
    for (VertexId v : members) a.membership[v].insert(c);
  return a;
}

bool CommunityAssignment::is_member(CommunityId c, VertexId v) const {
  auto it = communities.find(c);
  return it != communities.end() && it->second.count(v) != 0;
}

void CommunityAssignment::validate_against(const Graph& g) const {
  for (const auto& [c, members] : communities) {
    if (members.empty())
      throw DomainError("community " + std::to_string(c) + " is empty");
    for (VertexId v : members) {
      if (!g.has_vertex(v))
        throw DomainError("community member " + std::to_string(v) + " not in graph");
      auto it = membership.find(v);
      if (it == membership.end() || !it->second.count(c))
        throw DomainError("membership map out of sync for vertex " + std::to_string(v));
    }
  }
  for (const auto& [v, cs] : membership)
    for (CommunityId c : cs)
      if (!is_member(c, v))
        throw DomainError("membership map out of sync for vertex " + std::to_string(v));
}

double pair_ratio(long mu, int degree) {
  if (degree <= 1) return 0.0;
  return 2.0 * static_cast<double>(mu) /
         (static_cast<double>(degree) * static_cast<double>(degree - 1));
}

namespace {

// Edges among N(v) whose endpoints both satisfy `keep`.
template <class Pred>
long mu_among_neighbors(const Graph& g, VertexId v, Pred keep) {
  const auto& nbrs = g.neighbors(v);
  long mu = 0;
  for (size_t i = 0; i < nbrs.size(); ++i) {
    if (!keep(nbrs[i])) continue;
    for (size_t j = i + 1; j < nbrs.size(); ++j)
      if (keep(nbrs[j]) && g.has_edge(nbrs[i], nbrs[j])) ++mu;
  }
  return mu;
}

}  // namespace

double cluster_coefficient(const Graph& g, VertexId v) {
  long mu = mu_among_neighbors(g, v, [](VertexId) { return true; });
  return pair_ratio(mu, g.degree(v));
}

double node_modularity_local(const Graph& g, VertexId v, const std::set<VertexId>& members) {
  long mu = mu_among_neighbors(g, v, [&](VertexId w) { return members.count(w) != 0; });
  return pair_ratio(mu, g.degree(v));
}

double node_modularity(const Graph& g, VertexId v, const CommunityAssignment& a,
                       CommunityId c) {
  auto it = a.communities.find(c);
  if (it == a.communities.end())
    throw DomainError("unknown community " + std::to_string(c));
  return node_modularity_local(g, v, it->second);
}

double onm_local(const Graph& g, VertexId v, const std::set<VertexId>& union_members) {
  long mu = mu_among_neighbors(g, v,
                               [&](VertexId w) { return union_members.count(w) != 0; });
  return pair_ratio(mu, g.degree(v));
}

double overlapped_node_modularity(const Graph& g, VertexId v,
                                  const CommunityAssignment& a) {
  auto it = a.membership.find(v);
  if (it == a.membership.end() || it->second.empty())
    throw DomainError("vertex " + std::to_string(v) + " has no community");
  std::set<VertexId> uni;
  for (CommunityId c : it->second) {
    const auto& members = a.communities.at(c);
    uni.insert(members.begin(), members.end());
  }
  return onm_local(g, v, uni);
}

double community_modularity(const Graph& g, const CommunityAssignment& a, CommunityId c) {
  auto it = a.communities.find(c);
  if (it == a.communities.end())
    throw DomainError("unknown community " + std::to_string(c));
  if (it->second.empty())
    throw DomainError("community " + std::to_string(c) + " is empty");
  double sum = 0.0;
  for (VertexId v : it->second) sum += node_modularity_local(g, v, it->second);
  return sum / static_cast<double>(it->second.size());
}

double overall_modularity(const Graph& g, const CommunityAssignment& a) {
  if (a.communities.empty()) throw DomainError("assignment has no communities");
  double sum = 0.0;
  for (const auto& [c, members] : a.communities) sum += community_modularity(g, a, c);
  return sum / static_cast<double>(a.communities.size());
}

double benefit_exclude(double cm, long l, double nm_u) {
  if (l <= 1) throw DomainError("benefit_exclude needs a community of size >= 2");
  double cm_after = (cm * static_cast<double>(l) - nm_u) / static_cast<double>(l - 1);
  return cm_after - cm;
}

double benefit_include(double cm, long l, double nm_u) {
  if (l <= 0) throw DomainError("benefit_include needs a non-empty community");
  double cm_after = (cm * static_cast<double>(l) + nm_u) / static_cast<double>(l + 1);
  return cm_after - cm;
}

}  // namespace docd
