#pragma once

#include "docd/protocol.hpp"

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace docd {

struct EngineConfig {
  int extra_sweeps = 1;   // additional full movement+merging sweeps after the first
  long max_rounds = 0;    // 0: defaults to 50 * (diameter + 1)
  bool parallel = false;  // fan node transitions out over hardware threads
  std::ostream* trace = nullptr;  // per-round message log
};

struct RoundStats {
  long phase1 = 0;            // ticks with deliveries during phase I
  long phase1_selection = 0;  // tick of the last community selection
  long movement = 0;
  long merging = 0;

  bool operator==(const RoundStats&) const = default;
};

// The run exceeded its round budget; carries a state snapshot for diagnosis.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, std::string snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const std::string& snapshot() const { return snapshot_; }

private:
  std::string snapshot_;
};

struct RunResult {
  std::vector<NodeState> nodes;  // ascending vertex id
  RoundStats rounds;
  std::map<std::string, long> messages;  // deliveries per message kind
  long total_ticks = 0;
};

RunResult run_protocol(const Graph& g, const EngineConfig& cfg = {});

}  // namespace docd
