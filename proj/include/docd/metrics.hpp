#pragma once

#include "docd/graph.hpp"

#include <map>
#include <set>

namespace docd {

using CommunityId = int;

// Overlapping community assignment: a vertex may belong to several communities.
// `membership` and `communities` are kept mutually consistent.
struct CommunityAssignment {
  std::map<VertexId, std::set<CommunityId>> membership;
  std::map<CommunityId, std::set<VertexId>> communities;

  static CommunityAssignment from_communities(
      const std::map<CommunityId, std::set<VertexId>>& comms);

  bool is_member(CommunityId c, VertexId v) const;
  // Every referenced vertex must exist in g; every community must be non-empty.
  void validate_against(const Graph& g) const;

  bool operator==(const CommunityAssignment&) const = default;
};

// 2*mu / (deg*(deg-1)); exactly 0.0 when deg <= 1 (the ratio is otherwise undefined
// and a degree-0/1 vertex has no neighbor pairs to close).
double pair_ratio(long mu, int degree);

// Fraction of closed neighbor pairs: mu = edges among N(v).
double cluster_coefficient(const Graph& g, VertexId v);

// mu = edges among N(v) with BOTH endpoints inside `members`. v itself does not
// need to be a member (movement evaluates "as if joined" scores).
double node_modularity_local(const Graph& g, VertexId v, const std::set<VertexId>& members);
double node_modularity(const Graph& g, VertexId v, const CommunityAssignment& a, CommunityId c);

// Same shape, but against the union of v's own communities.
double onm_local(const Graph& g, VertexId v, const std::set<VertexId>& union_members);
double overlapped_node_modularity(const Graph& g, VertexId v, const CommunityAssignment& a);

// Mean NM over community members; overall = mean of community scores.
double community_modularity(const Graph& g, const CommunityAssignment& a, CommunityId c);
double overall_modularity(const Graph& g, const CommunityAssignment& a);

// Score delta for removing/adding a member, from the head's running aggregates:
//   exclude: (cm*l - nm_u)/(l-1) - cm      (requires l >= 2)
//   include: (cm*l + nm_u)/(l+1) - cm
double benefit_exclude(double cm, long l, double nm_u);
double benefit_include(double cm, long l, double nm_u);

}  // namespace docd
