#include "docd/engine.hpp"

#include "docd/oracle.hpp"
#include "docd/report.hpp"
#include "doctest.h"
#include "helpers.hpp"

#include <random>
#include <sstream>
#include <string>

using namespace docd;

TEST_CASE("two vertices form one zero-score community") {
  Graph g = Graph::from_edges({{0, 1}});
  auto o = outcome_from_run(run_protocol(g));
  REQUIRE(o.assignment.communities.size() == 1);
  CHECK(o.assignment.communities.at(0) == std::set<VertexId>{0, 1});
  CHECK(o.head.at(0) == 0);
  CHECK(o.stored_size.at(0) == 2);
  CHECK(o.stored_cm.at(0) == 0.0);
  CHECK(o.overlapped_nodes.empty());
}

TEST_CASE("empty graph terminates with nothing to report") {
  Graph g;
  auto o = outcome_from_run(run_protocol(g));
  CHECK(o.assignment.communities.empty());
  CHECK(o.rounds.phase1 == 0);
}

TEST_CASE("karate run has sane round and message counters") {
  Graph g = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  auto r = run_protocol(g);
  int d = g.diameter();
  CHECK(r.rounds.phase1_selection <= d + 1);
  CHECK(r.rounds.phase1 <= 2 * (d + 1));
  CHECK(r.rounds.phase1 >= 1);
  CHECK(r.rounds.movement >= 1);
  CHECK(r.messages.at("CC_msg") == 2 * g.edge_count());
  for (const char* k : kMessageKinds) CHECK(r.messages.at(k) >= 0);
  CHECK(r.total_ticks > 0);

  auto o = outcome_from_run(r);
  CHECK(!o.assignment.communities.empty());
  for (const auto& [c, members] : o.assignment.communities) {
    (void)c;
    CHECK(!members.empty());
  }
}

TEST_CASE("repeated runs are identical") {
  std::mt19937 rng(41);
  for (int iter = 0; iter < 8; ++iter) {
    int n = 2 + static_cast<int>(rng() % 22);
    auto g = testutil::random_connected_graph(rng, n, static_cast<int>(rng() % 14));
    auto r1 = run_protocol(g);
    auto r2 = run_protocol(g);
    CHECK(outcome_from_run(r1) == outcome_from_run(r2));
    CHECK(r1.messages == r2.messages);
    CHECK(r1.rounds == r2.rounds);
    CHECK(r1.total_ticks == r2.total_ticks);
  }
}

TEST_CASE("parallel mode matches sequential on larger graphs") {
  std::mt19937 rng(43);
  for (int iter = 0; iter < 4; ++iter) {
    auto g = testutil::random_connected_graph(rng, 80, 120);
    EngineConfig seq;
    EngineConfig par;
    par.parallel = true;
    CHECK(outcome_from_run(run_protocol(g, seq)) ==
          outcome_from_run(run_protocol(g, par)));
  }

  Graph karate = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  EngineConfig par;
  par.parallel = true;
  CHECK(outcome_from_run(run_protocol(karate)) ==
        outcome_from_run(run_protocol(karate, par)));
}

TEST_CASE("extra sweeps still converge and stay valid") {
  Graph g = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  for (int sweeps : {0, 1, 3}) {
    EngineConfig cfg;
    cfg.extra_sweeps = sweeps;
    auto o = outcome_from_run(run_protocol(g, cfg));
    CHECK(!o.assignment.communities.empty());
    o.assignment.validate_against(g);
  }
}

TEST_CASE("an impossible round budget raises DivergenceError") {
  Graph g = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  EngineConfig cfg;
  cfg.max_rounds = 1;
  try {
    run_protocol(g, cfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
    CHECK(!e.snapshot().empty());
    CHECK(e.snapshot().find("tick=") != std::string::npos);
  }
}

TEST_CASE("trace logs every delivery") {
  Graph g = Graph::from_edges({{0, 1}, {1, 2}, {2, 0}});
  std::ostringstream trace;
  EngineConfig cfg;
  cfg.trace = &trace;
  auto r = run_protocol(g, cfg);
  std::string t = trace.str();
  CHECK(t.find("round=1 kind=CC_msg") != std::string::npos);
  CHECK(t.find("from=0 to=1") != std::string::npos);

  long lines = 0;
  for (char ch : t)
    if (ch == '\n') ++lines;
  long delivered = 0;
  for (const auto& [k, cnt] : r.messages) {
    (void)k;
    delivered += cnt;
  }
  CHECK(lines == delivered);
}

TEST_CASE("report JSON carries the schema and serializes stably") {
  Graph g = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  auto o = outcome_from_run(run_protocol(g));
  auto doc = build_report(g, o);
  CHECK(doc.contains("communities"));
  CHECK(doc.contains("overlapped_nodes"));
  CHECK(doc.contains("overlapped_communities"));
  CHECK(doc.contains("rounds"));
  CHECK(doc.contains("messages"));
  CHECK(doc.contains("modularity"));
  CHECK(doc["meta"]["schema_version"] == 1);
  CHECK(doc["meta"]["n"] == 34);
  CHECK(doc["meta"]["m"] == 78);
  CHECK(doc["meta"]["diameter"] == 5);
  CHECK(doc["messages"].size() == kMessageKinds.size());
  CHECK(doc.dump(2) == build_report(g, o).dump(2));

  // DOT rendering mentions every vertex and flags overlap.
  std::ostringstream dot;
  write_dot(g, o, dot);
  std::string d = dot.str();
  CHECK(d.find("graph communities {") == 0);
  CHECK(d.find("overlapped=") != std::string::npos);
  for (VertexId v : g.vertices())
    CHECK(d.find("\"" + std::to_string(v) + "\"") != std::string::npos);
}
