#include "docd/protocol.hpp"

#include "docd/engine.hpp"
#include "docd/metrics.hpp"
#include "doctest.h"
#include "helpers.hpp"

#include <random>
#include <set>
#include <string>
#include <vector>

using namespace docd;

TEST_CASE("message kinds keep their wire order") {
  std::vector<Payload> all = {CcMsg{},       JoinCom{},        CompleteMsg{},
                              MovementMsg{}, OnmMsg{},         DecisionMsg{},
                              LeaveAcceptedMsg{}, JoinReqMsg{}, MergeReqMsg{},
                              ConfirmMsg{},  UpdateComMsg{}};
  REQUIRE(all.size() == kMessageKinds.size());
  for (size_t i = 0; i < all.size(); ++i) {
    Message m;
    m.payload = all[i];
    CHECK(m.kind_index() == static_cast<int>(i));
    CHECK(std::string(m.kind_name()) == kMessageKinds[i]);
  }
  CHECK(std::string(kMessageKinds[10]) == "Update_Com");
  CHECK(std::string(kMessageKinds[0]) == "CC_msg");
}

TEST_CASE("flood keys deduplicate by full identity") {
  FloodKey a{3, 7, 3, 0};
  FloodKey b{3, 7, 3, 1};
  CHECK(a < b);
  CHECK(a == FloodKey{3, 7, 3, 0});
  std::set<FloodKey> seen{a};
  CHECK(seen.count(a) == 1);
  CHECK(seen.count(b) == 0);
}

TEST_CASE("node state record helpers") {
  NodeState s;
  s.id = 4;
  s.cl = {CommunityRecord{2, 5, VertexId{1}, 0.5}, CommunityRecord{4, 3, {}, 0.25}};
  CHECK(s.find(2) != nullptr);
  CHECK(s.find(2)->c_size == 5);
  CHECK(s.find(9) == nullptr);
  CHECK(s.is_head_of(4));
  CHECK(!s.is_head_of(2));
  REQUIRE(s.headed_record() != nullptr);
  CHECK(s.headed_record()->c_id == 4);
  CHECK(s.overlapped());

  NodeState lone;
  lone.id = 0;
  lone.cl = {CommunityRecord{7, 2, VertexId{7}, 0.0}};
  CHECK(!lone.overlapped());
  CHECK(lone.headed_record() == nullptr);
}

namespace {

// Strict local maxima of (cc, -id): the election rule. Any strict total order
// makes its local-maximum set independent, which is the adjacent-heads
// impossibility argument.
std::set<VertexId> elected_heads(const Graph& g) {
  std::set<VertexId> heads;
  auto key = [&](VertexId v) {
    return std::make_pair(cluster_coefficient(g, v), -v);
  };
  for (VertexId v : g.vertices()) {
    bool top = true;
    for (VertexId w : g.neighbors(v))
      if (key(w) > key(v)) top = false;
    if (top) heads.insert(v);
  }
  return heads;
}

void check_structure(const Graph& g, const RunResult& r) {
  std::set<VertexId> final_heads;
  for (const auto& n : r.nodes) {
    // Records sorted and unique by community id.
    for (size_t i = 0; i + 1 < n.cl.size(); ++i)
      CHECK(n.cl[i].c_id < n.cl[i + 1].c_id);
    CHECK(!n.cl.empty());  // everyone keeps at least one home
    CHECK(n.overlapped() == (n.cl.size() >= 2));
    for (const auto& rec : n.cl) {
      if (!rec.p_id) {
        CHECK(rec.c_id == n.id);  // community ids are their head's id
        final_heads.insert(n.id);
        CHECK(rec.c_size >= 1);
        CHECK(rec.cm >= 0.0);
      } else {
        CHECK(g.has_edge(n.id, *rec.p_id));  // parent links are graph edges
      }
    }
  }

  // Elected heads are pairwise non-adjacent by the strict-order argument;
  // verify election independence directly on the graph.
  auto elected = elected_heads(g);
  for (VertexId v : elected)
    for (VertexId w : g.neighbors(v)) CHECK(!elected.count(w));

  // Any surviving head either won the election or founded a replacement
  // community for itself after a forced leave; never someone else's id.
  for (const auto& n : r.nodes)
    for (const auto& rec : n.cl)
      if (!rec.p_id) CHECK(rec.c_id == n.id);

  // Parent chains terminate without cycles (broken links allowed: a stale
  // record's parent may have left).
  std::map<VertexId, const NodeState*> by_id;
  for (const auto& n : r.nodes) by_id[n.id] = &n;
  for (const auto& n : r.nodes) {
    for (const auto& rec : n.cl) {
      std::set<VertexId> seen{n.id};
      const NodeState* cur = &n;
      const CommunityRecord* rc = &rec;
      while (rc && rc->p_id) {
        VertexId p = *rc->p_id;
        CHECK(!seen.count(p));  // no cycles
        if (seen.count(p)) break;
        seen.insert(p);
        cur = by_id.at(p);
        rc = cur->find(rec.c_id);
      }
    }
  }
  (void)final_heads;
}

}  // namespace

TEST_CASE("triangle collapses to one community under its least id") {
  Graph g = Graph::from_edges({{0, 1}, {1, 2}, {2, 0}});
  auto r = run_protocol(g);
  check_structure(g, r);
  REQUIRE(r.nodes.size() == 3);
  for (const auto& n : r.nodes) {
    REQUIRE(n.cl.size() == 1);
    CHECK(n.cl[0].c_id == 0);
  }
  CHECK(r.nodes[0].is_head_of(0));
  CHECK(r.nodes[0].cl[0].c_size == 3);
  CHECK(r.nodes[0].cl[0].cm == 1.0);
}

TEST_CASE("path of three keeps the zero-cc election tie order") {
  Graph g = Graph::from_edges({{0, 1}, {1, 2}});
  auto r = run_protocol(g);
  check_structure(g, r);
  for (const auto& n : r.nodes) {
    REQUIRE(n.cl.size() == 1);
    CHECK(n.cl[0].c_id == 0);
  }
  CHECK(r.nodes[0].cl[0].c_size == 3);
  CHECK(r.nodes[0].cl[0].cm == 0.0);
}

TEST_CASE("structural invariants hold across a random corpus") {
  std::mt19937 rng(31);
  for (int iter = 0; iter < 40; ++iter) {
    int n = 2 + static_cast<int>(rng() % 23);
    auto g = testutil::random_connected_graph(rng, n, static_cast<int>(rng() % 18));
    auto r = run_protocol(g);
    check_structure(g, r);
  }
}

TEST_CASE("every vertex is covered at phase one termination and beyond") {
  std::mt19937 rng(37);
  for (int iter = 0; iter < 15; ++iter) {
    int n = 2 + static_cast<int>(rng() % 20);
    auto g = testutil::random_connected_graph(rng, n, static_cast<int>(rng() % 10));
    auto r = run_protocol(g);
    std::set<VertexId> covered;
    for (const auto& node : r.nodes) {
      CHECK(node.joined);
      for (const auto& rec : node.cl) covered.insert(node.id), (void)rec;
    }
    CHECK(covered.size() == g.vertices().size());
  }
}
