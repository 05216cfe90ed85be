#include "docd/graph.hpp"

#include "doctest.h"

#include <algorithm>
#include <sstream>
#include <string>

using namespace docd;

namespace {

Graph parse(const std::string& text, bool relabel = false) {
  std::istringstream in(text);
  LoadOptions opts;
  opts.relabel = relabel;
  return load_edge_list(in, opts);
}

}  // namespace

TEST_CASE("edge list accepts whitespace, commas, comments, blanks") {
  Graph g = parse("# header\n1 2\n2,3\n\n3\t1\n");
  CHECK(g.vertex_count() == 3);
  CHECK(g.edge_count() == 3);
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(2, 3));
  CHECK(g.has_edge(3, 1));
}

TEST_CASE("duplicate edges collapse silently") {
  Graph g = parse("0 1\n1 0\n0 1\n1 2\n");
  CHECK(g.vertex_count() == 3);
  CHECK(g.edge_count() == 2);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 2);
}

TEST_CASE("malformed lines raise ParseError with the line number") {
  CHECK_THROWS_AS(parse("0 1\n2\n"), ParseError);
  try {
    parse("0 1\n2 3 4\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("self loops are rejected") {
  try {
    parse("0 1\n1 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(Graph::from_edges({{2, 2}}), DomainError);
}

TEST_CASE("non-integer tokens need relabel") {
  CHECK_THROWS_AS(parse("a b\n"), ParseError);
  CHECK_THROWS_AS(parse("1 -2\n"), ParseError);

  Graph g = parse("a b\nb a\n# comment\n", /*relabel=*/true);
  CHECK(g.vertex_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.label_map().at("a") == 0);
  CHECK(g.label_map().at("b") == 1);
}

TEST_CASE("relabel interns labels in first-appearance order") {
  Graph g = parse("carol bob\nbob alice\n", true);
  CHECK(g.label_map().at("carol") == 0);
  CHECK(g.label_map().at("bob") == 1);
  CHECK(g.label_map().at("alice") == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
}

TEST_CASE("vertices and neighbor lists are ascending") {
  Graph g = Graph::from_edges({{5, 1}, {3, 5}, {1, 3}, {5, 0}});
  CHECK(g.vertices() == std::vector<VertexId>{0, 1, 3, 5});
  CHECK(g.neighbors(5) == std::vector<VertexId>{0, 1, 3});
  CHECK(std::is_sorted(g.neighbors(1).begin(), g.neighbors(1).end()));
}

TEST_CASE("unknown vertex raises DomainError") {
  Graph g = Graph::from_edges({{0, 1}});
  CHECK_THROWS_AS(g.neighbors(7), DomainError);
  CHECK_THROWS_AS((void)g.has_edge(0, 7), DomainError);
}

TEST_CASE("links_among counts induced edges") {
  // K4 on {0,1,2,3}
  Graph g = Graph::from_edges({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(g.links_among({0, 1, 2, 3}) == 6);
  CHECK(g.links_among({1, 2, 3}) == 3);  // neighbors of 0
  CHECK(g.links_among({0}) == 0);
  CHECK(g.links_among({}) == 0);
  CHECK(g.links_among({2, 2, 3, 3}) == 1);  // duplicates ignored
}

TEST_CASE("star leaves are pairwise non-adjacent") {
  Graph g = Graph::from_edges({{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(g.links_among(g.neighbors(0)) == 0);
}

TEST_CASE("connectivity, components, diameter") {
  Graph path = Graph::from_edges({{0, 1}, {1, 2}, {2, 3}});
  CHECK(path.connected());
  CHECK(path.diameter() == 3);

  Graph k3 = Graph::from_edges({{0, 1}, {1, 2}, {2, 0}});
  CHECK(k3.diameter() == 1);

  Graph two = Graph::from_edges({{0, 1}, {1, 2}, {2, 0}, {7, 8}});
  CHECK(!two.connected());
  auto comps = two.components();
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<VertexId>{0, 1, 2});
  CHECK(comps[1] == std::vector<VertexId>{7, 8});
  CHECK(two.diameter() == 1);  // largest over components
}

TEST_CASE("degree sum is twice the edge count") {
  Graph g = parse("0 1\n1 2\n2 3\n3 0\n0 2\n");
  long sum = 0;
  for (VertexId v : g.vertices()) sum += g.degree(v);
  CHECK(sum == 2 * g.edge_count());
  CHECK(g.links_among(g.vertices()) == g.edge_count());
}

TEST_CASE("serialize is canonical and round-trips") {
  Graph g = parse("3 1\n2 3\n1 2\n0 3\n");
  std::ostringstream a;
  g.serialize(a);
  CHECK(a.str() == "0 3\n1 2\n1 3\n2 3\n");

  std::istringstream back(a.str());
  Graph h = load_edge_list(back);
  std::ostringstream b;
  h.serialize(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("karate fixture has the canonical shape") {
  Graph g = load_edge_list_file(std::string(DOCD_DATA) + "/karate.txt");
  CHECK(g.vertex_count() == 34);
  CHECK(g.edge_count() == 78);
  CHECK(g.degree(1) == 16);
  CHECK(g.diameter() == 5);
  CHECK(g.connected());
}
