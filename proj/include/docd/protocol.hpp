#pragma once

#include "docd/graph.hpp"
#include "docd/metrics.hpp"

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

namespace docd {

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

struct CcMsg {
  double cc = 0.0;
};
struct JoinEntry {
  CommunityId c_id{};
  std::optional<VertexId> p_id;  // set when the sender picked a parent
};
// One announcement per neighbor and join event; selections made in the same
// tick ride in a single message so each edge carries at most two of these.
struct JoinCom {
  VertexId v{};
  std::vector<JoinEntry> entries;
};
struct CompleteMsg {
  VertexId v{};
  double nm_avg = 0.0;  // mean node modularity over the sender's subtree
  long c_size = 0;      // subtree size
};
struct MovementMsg {  // head broadcast of its community's current score/size
  VertexId v{};
  double cm = 0.0;
  long c_size = 0;
};
struct OnmMsg {
  double onm = 0.0;
};
struct DecisionMsg {
  VertexId v{};
  double nm = 0.0;
  double benefit = 0.0;
  bool leave = false;
};
struct LeaveAcceptedMsg {
  VertexId v{};  // the departing member
  double cm = 0.0;
  long c_size = 0;
};
struct JoinReqMsg {
  VertexId v{};
  double nm = 0.0;
};
struct MergeReqMsg {
  VertexId v{};        // requesting head
  CommunityId c_id{};  // target community
  double onm = 0.0;
};
struct ConfirmMsg {
  VertexId v{};  // confirming head
  CommunityId c_id{};
  long c_size = 0;
  double cm = 0.0;
};
struct UpdateComMsg {
  VertexId v{};        // head that executed the merge
  CommunityId c_id{};  // surviving community id
  long c_size = 0;
  double cm = 0.0;
};

using Payload = std::variant<CcMsg, JoinCom, CompleteMsg, MovementMsg, OnmMsg, DecisionMsg,
                             LeaveAcceptedMsg, JoinReqMsg, MergeReqMsg, ConfirmMsg,
                             UpdateComMsg>;

constexpr std::array<const char*, 11> kMessageKinds = {
    "CC_msg",  "Join_Com",       "Complete", "Movement",  "ONM_msg", "Decision",
    "Leave_Accepted", "Join_Req", "Merge_Req", "Confirm",  "Update_Com"};

// Identifies one broadcast wave; every copy of the wave carries the same key so
// receivers can suppress duplicates.
struct FloodKey {
  VertexId origin{};
  int tick{};
  CommunityId c{};
  int seq{};
  auto operator<=>(const FloodKey&) const = default;
};

struct Message {
  VertexId from{};
  VertexId to{};
  // Community context for tree-routed kinds (Complete/Decision/Join_Req/Merge_Req);
  // for Update_Com it carries the retired community id.
  CommunityId route_c = -1;
  // Confirm only: the requesting head the breadcrumb trail is keyed by.
  VertexId route_key = -1;
  std::optional<FloodKey> flood;
  Payload payload;

  int kind_index() const { return static_cast<int>(payload.index()); }
  const char* kind_name() const { return kMessageKinds[payload.index()]; }
};

// ---------------------------------------------------------------------------
// Node state
// ---------------------------------------------------------------------------

struct CommunityRecord {
  CommunityId c_id{};
  long c_size = -1;  // -1 until the head's broadcast fills it in
  std::optional<VertexId> p_id;  // empty == this node heads the community
  double cm = -1.0;
};

struct GammaInfo {  // what a node knows about a neighboring community
  long c_size = -1;
  double cm = -1.0;
  bool known() const { return c_size >= 1; }
};

struct ZEntry {  // overlap descriptor for one community
  CommunityId c_id{};
  std::vector<VertexId> members;  // locally known overlapped members, ascending
  bool operator==(const ZEntry&) const = default;
};

enum class MoveAction { Stay, JoinKeeping, LeaveAndJoin };

struct JoinTarget {
  CommunityId c_id{};
  double nm = 0.0;  // score this node would contribute there
  double benefit = 0.0;
};

struct MovementIntent {
  MoveAction action = MoveAction::Stay;
  std::vector<CommunityId> leave;  // all own communities tied at max exclude benefit
  double leave_benefit = 0.0;
  std::vector<JoinTarget> join;    // all neighbor communities tied at max include benefit
};

struct MergeIntent {
  CommunityId target{};
  VertexId gateway{};
  double onm = 0.0;  // requesting head's overlapping score, carried in the request
  double benefit = 0.0;
};

struct NodeState {
  VertexId id{};
  double cc = 0.0;
  bool joined = false;
  bool mv_started = false;  // phase II reached; phase I behaviors are latched off
  bool ml_done = false;     // head: barrier leave processing already ran this sweep
  bool done = false;

  std::vector<CommunityRecord> cl;  // sorted by c_id
  std::map<CommunityId, GammaInfo> gamma;
  std::map<VertexId, std::set<CommunityId>> nbr_comms;
  std::map<CommunityId, std::set<VertexId>> children;

  // phase I
  std::map<VertexId, double> nbr_cc;
  std::map<CommunityId, std::map<VertexId, std::pair<double, long>>> completes;
  std::set<CommunityId> complete_done;

  // movement (reset each sweep)
  MovementIntent intent;
  double onm = 0.0;
  std::map<VertexId, double> nbr_onm;
  std::map<CommunityId, std::vector<DecisionMsg>> pend_decisions;  // pre-barrier
  std::map<CommunityId, std::vector<JoinReqMsg>> pend_joins;
  std::map<CommunityId, std::vector<DecisionMsg>> tick_decisions;  // post-barrier, this tick
  std::map<CommunityId, std::vector<JoinReqMsg>> tick_joins;
  std::map<CommunityId, VertexId> tombstones;  // parent pointers kept after leaving
  std::set<CommunityId> orphaned;              // records whose parent departed

  // merging (reset each pass)
  std::optional<MergeIntent> merge_intent;
  std::vector<MergeReqMsg> merge_reqs;
  std::map<VertexId, VertexId> crumbs;  // requester -> hop the request came from
  std::optional<ConfirmMsg> confirm_received;
  bool absorbed_any = false;  // this head has confirmed at least one merge

  std::set<FloodKey> seen;
  std::vector<ZEntry> z;

  const CommunityRecord* find(CommunityId c) const;
  CommunityRecord* find(CommunityId c);
  bool is_head_of(CommunityId c) const;
  const CommunityRecord* headed_record() const;  // record this node heads, if any
  bool overlapped() const { return cl.size() >= 2; }
};

// ---------------------------------------------------------------------------
// Round execution
// ---------------------------------------------------------------------------

// Engine-issued triggers. Everything else is event-driven off the inbox.
enum class Signal {
  None,
  SendCc,          // tick 0: broadcast own cluster coefficient
  Elect,           // tick 1: head election
  StartMovement,   // sweep reset; heads broadcast Movement
  DecideMovement,  // members evaluate benefit lists; movers broadcast ONM
  ResolveMovement, // lock resolution; winners join; everyone reports Decision
  ProcessLeaves,   // heads run join + leave processing in one batch
  ForcedLeave,     // orphans without a usable parent leave and re-attach
  StartMergeFlood, // pass reset; heads broadcast Movement again
  RequestMerges,   // heads evaluate merge targets and send Merge_Req
  ResolveMerges,   // target heads answer with Confirm
  ExecuteMerges,   // confirmed requesters rewrite and broadcast Update_Com
  Finalize,        // overlap identification
};

struct StepContext {
  const Graph* g = nullptr;
  Signal signal = Signal::None;
  int tick = 0;
};

struct StepOutput {
  NodeState state;
  std::vector<Message> out;
};

NodeState init_node(const Graph& g, VertexId v);

// Pure transition: (state at tick start, inbox) -> (state', sends).
StepOutput step(const NodeState& s, const std::vector<Message>& inbox,
                const StepContext& ctx);

// Individual decision rules, also used directly by tests and the replay oracle.
bool elect_head(const Graph& g, const NodeState& s);
double local_nm(const Graph& g, const NodeState& s, CommunityId c);  // as-if for non-members
double local_onm(const Graph& g, const NodeState& s);
MovementIntent compute_movement_decision(const Graph& g, const NodeState& s);
bool resolve_lock(const NodeState& s);  // (onm, id) strictly minimal among announcers
std::optional<MergeIntent> compute_merge_intent(const Graph& g, const NodeState& s);
std::vector<ZEntry> identify_overlaps(const Graph& g, const NodeState& s);

bool phase1_complete(const NodeState& s);

}  // namespace docd
