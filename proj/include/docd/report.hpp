#pragma once

#include "docd/engine.hpp"
#include "docd/metrics.hpp"

#include "json.hpp"

#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace docd {

// Neutral end-of-run summary; produced both by the simulator and by the
// sequential replay so the two can be compared field by field.
struct Outcome {
  CommunityAssignment assignment;
  std::map<CommunityId, VertexId> head;
  std::map<CommunityId, long> stored_size;  // head's running size (see cm note below)
  std::map<CommunityId, double> stored_cm;  // head's running mean score
  std::set<VertexId> overlapped_nodes;
  std::map<CommunityId, std::set<VertexId>> overlapped_members;
  RoundStats rounds;
  std::map<std::string, long> messages;

  bool operator==(const Outcome&) const = default;
};

Outcome outcome_from_run(const RunResult& r);

// Stable-key JSON document; serializing twice yields identical bytes.
nlohmann::ordered_json build_report(const Graph& g, const Outcome& o);

void write_dot(const Graph& g, const Outcome& o, std::ostream& out);

}  // namespace docd
