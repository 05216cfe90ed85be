#include "docd/graph.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace docd {

int Graph::slot(VertexId v) const {
  auto it = index_.find(v);
  if (it == index_.end())
    throw DomainError("unknown vertex " + std::to_string(v));
  return it->second;
}

const std::vector<VertexId>& Graph::neighbors(VertexId v) const {
  return adj_[slot(v)];
}

bool Graph::has_edge(VertexId u, VertexId v) const {
  const auto& nu = neighbors(u);
  slot(v);  // validate v too
  return std::binary_search(nu.begin(), nu.end(), v);
}

void Graph::add_edge(VertexId u, VertexId v) {
  for (VertexId w : {u, v}) {
    if (!index_.count(w)) {
      index_[w] = static_cast<int>(ids_.size());
      ids_.push_back(w);
      adj_.emplace_back();
    }
  }
  adj_[index_[u]].push_back(v);
  adj_[index_[v]].push_back(u);
}

void Graph::finalize() {
  // Sort ids ascending and rebuild slots so iteration order is deterministic.
  std::vector<VertexId> order = ids_;
  std::sort(order.begin(), order.end());
  std::vector<std::vector<VertexId>> adj(order.size());
  for (size_t i = 0; i < order.size(); ++i) adj[i] = std::move(adj_[index_[order[i]]]);
  ids_ = std::move(order);
  adj_ = std::move(adj);
  index_.clear();
  edge_count_ = 0;
  for (size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = static_cast<int>(i);
  for (auto& nbrs : adj_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    edge_count_ += static_cast<long>(nbrs.size());
  }
  edge_count_ /= 2;
}

Graph Graph::from_edges(const std::vector<std::pair<VertexId, VertexId>>& edges) {
  Graph g;
  for (auto [u, v] : edges) {
    if (u == v) throw DomainError("self loop at vertex " + std::to_string(u));
    if (u < 0 || v < 0) throw DomainError("negative vertex id");
    g.add_edge(u, v);
  }
  g.finalize();
  return g;
}

long Graph::links_among(const std::vector<VertexId>& s) const {
  std::set<VertexId> members(s.begin(), s.end());
  long cnt = 0;
  for (VertexId u : members)
    for (VertexId w : neighbors(u))
      if (w > u && members.count(w)) ++cnt;
  return cnt;
}

std::vector<std::vector<VertexId>> Graph::components() const {
  std::vector<std::vector<VertexId>> comps;
  std::set<VertexId> seen;
  for (VertexId start : ids_) {
    if (seen.count(start)) continue;
    std::vector<VertexId> comp;
    std::deque<VertexId> q{start};
    seen.insert(start);
    while (!q.empty()) {
      VertexId u = q.front();
      q.pop_front();
      comp.push_back(u);
      for (VertexId w : neighbors(u))
        if (seen.insert(w).second) q.push_back(w);
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

bool Graph::connected() const {
  return vertex_count() <= 1 || components().size() == 1;
}

int Graph::diameter() const {
  int best = 0;
  std::unordered_map<VertexId, int> dist;
  for (VertexId src : ids_) {
    dist.clear();
    dist[src] = 0;
    std::deque<VertexId> q{src};
    while (!q.empty()) {
      VertexId u = q.front();
      q.pop_front();
      for (VertexId w : neighbors(u)) {
        if (!dist.count(w)) {
          dist[w] = dist[u] + 1;
          best = std::max(best, dist[w]);
          q.push_back(w);
        }
      }
    }
  }
  return best;
}

void Graph::serialize(std::ostream& out) const {
  for (VertexId u : ids_)
    for (VertexId v : neighbors(u))
      if (u < v) out << u << ' ' << v << '\n';
}

namespace {

bool parse_vertex(const std::string& tok, VertexId& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && out >= 0;
}

}  // namespace

Graph load_edge_list(std::istream& in, const LoadOptions& opts) {
  Graph g;
  std::string line;
  int lineno = 0;
  VertexId next_id = 0;
  auto intern = [&](const std::string& tok) {
    auto [it, fresh] = g.label_map_.try_emplace(tok, next_id);
    if (fresh) ++next_id;
    return it->second;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw ParseError("expected two endpoints, got " + std::to_string(toks.size()), lineno);
    VertexId u, v;
    if (opts.relabel) {
      u = intern(toks[0]);
      v = intern(toks[1]);
    } else {
      if (!parse_vertex(toks[0], u) || !parse_vertex(toks[1], v))
        throw ParseError("non-integer vertex id (use relabel for string labels)", lineno);
    }
    if (u == v) throw ParseError("self loop at vertex '" + toks[0] + "'", lineno);
    g.add_edge(u, v);
  }
  if (!opts.relabel) g.label_map_.clear();
  g.finalize();
  return g;
}

Graph load_edge_list_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open " + path);
  return load_edge_list(f, opts);
}

}  // namespace docd
