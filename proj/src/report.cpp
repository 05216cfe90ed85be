#include "docd/report.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace docd {

Outcome outcome_from_run(const RunResult& r) {
  Outcome o;
  for (const auto& n : r.nodes) {
    for (const auto& rec : n.cl) {
      o.assignment.communities[rec.c_id].insert(n.id);
      o.assignment.membership[n.id].insert(rec.c_id);
      if (!rec.p_id) {
        if (o.head.count(rec.c_id))
          throw DomainError("community " + std::to_string(rec.c_id) +
                            " has two heads");
        o.head[rec.c_id] = n.id;
        o.stored_size[rec.c_id] = rec.c_size;
        o.stored_cm[rec.c_id] = rec.cm;
      }
    }
    if (n.overlapped()) o.overlapped_nodes.insert(n.id);
    for (const auto& ze : n.z)
      o.overlapped_members[ze.c_id].insert(ze.members.begin(), ze.members.end());
  }
  // A community may appear with no head at all: members cut off from the rest
  // of their community never hear later floods and keep stale records even
  // after the head renamed itself away in a merge. Those entries are reported
  // as-is. A present head must still match the community id.
  for (const auto& [c, head] : o.head)
    if (head != c)
      throw DomainError("community " + std::to_string(c) + " headed by " +
                        std::to_string(head));
  o.rounds = r.rounds;
  o.messages = r.messages;
  return o;
}

nlohmann::ordered_json build_report(const Graph& g, const Outcome& o) {
  using json = nlohmann::ordered_json;
  json doc;

  doc["communities"] = json::array();
  for (const auto& [c, members] : o.assignment.communities) {
    json entry;
    entry["c_id"] = c;
    // Headless communities (stale records of a merged-away community) carry
    // out-of-domain sentinels instead of stored head-side values.
    auto it = o.head.find(c);
    entry["head"] = it == o.head.end() ? VertexId{-1} : it->second;
    entry["c_size"] = it == o.head.end() ? -1L : o.stored_size.at(c);
    entry["cm"] = it == o.head.end() ? -1.0 : o.stored_cm.at(c);
    entry["members"] = json::array();
    for (VertexId v : members) entry["members"].push_back(v);
    doc["communities"].push_back(std::move(entry));
  }

  doc["overlapped_nodes"] = json::array();
  for (VertexId v : o.overlapped_nodes) doc["overlapped_nodes"].push_back(v);

  doc["overlapped_communities"] = json::array();
  for (const auto& [c, members] : o.overlapped_members) {
    if (members.empty()) continue;
    json entry;
    entry["c_id"] = c;
    entry["overlapped_members"] = json::array();
    for (VertexId v : members) entry["overlapped_members"].push_back(v);
    doc["overlapped_communities"].push_back(std::move(entry));
  }

  doc["rounds"] = {{"phase1", o.rounds.phase1},
                   {"phase1_selection", o.rounds.phase1_selection},
                   {"movement", o.rounds.movement},
                   {"merging", o.rounds.merging}};

  doc["messages"] = json::object();
  for (const char* kind : kMessageKinds) {
    auto it = o.messages.find(kind);
    doc["messages"][kind] = it == o.messages.end() ? 0L : it->second;
  }

  doc["modularity"]["per_community"] = json::object();
  double total = 0.0;
  for (const auto& [c, members] : o.assignment.communities) {
    (void)members;
    double score = community_modularity(g, o.assignment, c);
    doc["modularity"]["per_community"][std::to_string(c)] = score;
    total += score;
  }
  doc["modularity"]["overall"] =
      o.assignment.communities.empty()
          ? 0.0
          : total / static_cast<double>(o.assignment.communities.size());

  doc["meta"] = {{"n", g.vertex_count()},
                 {"m", g.edge_count()},
                 {"diameter", g.diameter()},
                 {"schema_version", 1}};
  return doc;
}

namespace {

const char* kPalette[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072",
                          "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
                          "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f"};

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void write_dot(const Graph& g, const Outcome& o, std::ostream& out) {
  std::map<VertexId, std::string> names;
  for (const auto& [label, v] : g.label_map()) names[v] = label;
  auto name_of = [&](VertexId v) {
    auto it = names.find(v);
    return dot_quote(it != names.end() ? it->second : std::to_string(v));
  };

  std::map<CommunityId, int> color_slot;
  for (const auto& [c, members] : o.assignment.communities) {
    (void)members;
    int slot = static_cast<int>(color_slot.size()) % 12;
    color_slot[c] = slot;
  }

  out << "graph communities {\n";
  out << "  node [style=filled, shape=circle];\n";
  for (VertexId v : g.vertices()) {
    std::string comms;
    auto it = o.assignment.membership.find(v);
    if (it != o.assignment.membership.end()) {
      for (CommunityId c : it->second) {
        if (!comms.empty()) comms += ',';
        comms += std::to_string(c);
      }
    }
    bool over = o.overlapped_nodes.count(v) > 0;
    const char* fill = "#d9d9d9";
    if (over) {
      fill = "#ff8c00";
    } else if (it != o.assignment.membership.end() && !it->second.empty()) {
      fill = kPalette[color_slot.at(*it->second.begin())];
    }
    out << "  " << name_of(v) << " [community=\"" << comms << "\", overlapped="
        << (over ? "true" : "false") << ", fillcolor=\"" << fill << "\"];\n";
  }
  for (VertexId v : g.vertices())
    for (VertexId w : g.neighbors(v))
      if (v < w) out << "  " << name_of(v) << " -- " << name_of(w) << ";\n";
  out << "}\n";
}

}  // namespace docd
