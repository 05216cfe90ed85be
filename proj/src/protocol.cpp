#include "docd/protocol.hpp"

#include <algorithm>
#include <cassert>

namespace docd {

const CommunityRecord* NodeState::find(CommunityId c) const {
  for (const auto& r : cl)
    if (r.c_id == c) return &r;
  return nullptr;
}

CommunityRecord* NodeState::find(CommunityId c) {
  for (auto& r : cl)
    if (r.c_id == c) return &r;
  return nullptr;
}

bool NodeState::is_head_of(CommunityId c) const {
  const auto* r = find(c);
  return r && !r->p_id;
}

const CommunityRecord* NodeState::headed_record() const {
  for (const auto& r : cl)
    if (!r.p_id) return &r;
  return nullptr;
}

NodeState init_node(const Graph& g, VertexId v) {
  NodeState s;
  s.id = v;
  s.cc = cluster_coefficient(g, v);
  return s;
}

bool elect_head(const Graph& g, const NodeState& s) {
  // Strict dominance over every neighbor by (cc, then lower id).
  for (VertexId w : g.neighbors(s.id)) {
    auto it = s.nbr_cc.find(w);
    double wcc = it == s.nbr_cc.end() ? 0.0 : it->second;
    if (!(s.cc > wcc || (s.cc == wcc && s.id < w))) return false;
  }
  return true;
}

namespace {

// Neighbors this node knows to be inside community c, plus itself.
std::set<VertexId> known_members(const NodeState& s, CommunityId c) {
  std::set<VertexId> m;
  for (const auto& [w, cs] : s.nbr_comms)
    if (cs.count(c)) m.insert(w);
  m.insert(s.id);
  return m;
}

std::vector<VertexId> member_neighbors(const NodeState& s, CommunityId c) {
  std::vector<VertexId> m;
  for (const auto& [w, cs] : s.nbr_comms)
    if (cs.count(c)) m.push_back(w);
  return m;  // ascending (map order)
}

}  // namespace

double local_nm(const Graph& g, const NodeState& s, CommunityId c) {
  return node_modularity_local(g, s.id, known_members(s, c));
}

double local_onm(const Graph& g, const NodeState& s) {
  std::set<VertexId> uni;
  for (const auto& r : s.cl) {
    auto m = known_members(s, r.c_id);
    uni.insert(m.begin(), m.end());
  }
  return onm_local(g, s.id, uni);
}

MovementIntent compute_movement_decision(const Graph& g, const NodeState& s) {
  MovementIntent intent;

  // Exclude benefits over own communities (only the ones big enough to leave).
  double best_leave = 0.0;
  std::vector<CommunityId> leave;
  for (const auto& r : s.cl) {
    if (!r.p_id || r.c_size < 2) continue;  // heads stay put; singletons can't shrink
    double b = benefit_exclude(r.cm, r.c_size, local_nm(g, s, r.c_id));
    if (b <= 0.0) continue;
    if (b > best_leave) {
      best_leave = b;
      leave.assign(1, r.c_id);
    } else if (b == best_leave) {
      leave.push_back(r.c_id);
    }
  }

  // Include benefits over adjacent communities with a live member neighbor.
  double best_join = 0.0;
  std::vector<JoinTarget> join;
  for (const auto& [c, info] : s.gamma) {
    if (!info.known() || s.find(c)) continue;
    if (member_neighbors(s, c).empty()) continue;
    double nm = local_nm(g, s, c);
    double b = benefit_include(info.cm, info.c_size, nm);
    if (b <= 0.0) continue;
    if (b > best_join) {
      best_join = b;
      join.assign(1, {c, nm, b});
    } else if (b == best_join) {
      join.push_back({c, nm, b});
    }
  }

  if (join.empty()) return intent;  // nothing worth joining: stay either way
  intent.join = std::move(join);
  if (leave.empty()) {
    intent.action = MoveAction::JoinKeeping;
  } else {
    intent.action = MoveAction::LeaveAndJoin;
    intent.leave = std::move(leave);
    intent.leave_benefit = best_leave;
  }
  return intent;
}

bool resolve_lock(const NodeState& s) {
  for (const auto& [w, onm_w] : s.nbr_onm)
    if (!(s.onm < onm_w || (s.onm == onm_w && s.id < w))) return false;
  return true;
}

std::optional<MergeIntent> compute_merge_intent(const Graph& g, const NodeState& s) {
  const CommunityRecord* own = s.headed_record();
  if (!own) return std::nullopt;
  // The head stands in for its community: it asks to merge into the adjacent
  // community whose mean score its own as-if score would raise the most. The
  // ask is made only when the head's neighborhood is at least as dense in the
  // target as its own community's mean (near-duplicate structure) and the
  // target is no smaller, so distinct communities are left alone and the
  // smaller partner is always the one that retires.
  std::optional<MergeIntent> best;
  for (const auto& [c, info] : s.gamma) {
    if (!info.known() || s.find(c)) continue;
    auto mn = member_neighbors(s, c);
    if (mn.empty()) continue;
    double nm = local_nm(g, s, c);
    double b = benefit_include(info.cm, info.c_size, nm);
    if (b <= 0.0 || nm < own->cm || own->c_size > info.c_size) continue;
    if (!best || b > best->benefit || (b == best->benefit && c < best->target))
      best = MergeIntent{c, mn.front(), local_onm(g, s), b};
  }
  if (best) return best;
  // No target worth joining on quality grounds. A community that is strictly
  // the smallest in its neighborhood and never won a merge of its own is
  // vestigial: it retires into the adjacent community it shares the most
  // member neighbors with (first wins ties, i.e. the lowest community id).
  if (s.absorbed_any) return std::nullopt;
  std::optional<MergeIntent> fb;
  std::size_t fb_links = 0;
  for (const auto& [c, info] : s.gamma) {
    if (!info.known() || s.find(c)) continue;
    auto mn = member_neighbors(s, c);
    if (mn.empty()) continue;
    if (info.c_size <= own->c_size) return std::nullopt;
    if (mn.size() > fb_links) {
      fb_links = mn.size();
      fb = MergeIntent{c, mn.front(), local_onm(g, s), 0.0};
    }
  }
  return fb;
}

std::vector<ZEntry> identify_overlaps(const Graph& g, const NodeState& s) {
  (void)g;
  std::vector<ZEntry> z;
  for (const auto& r : s.cl) {
    std::set<VertexId> ids;
    if (s.overlapped()) ids.insert(s.id);
    for (const auto& [w, cs] : s.nbr_comms)
      if (cs.count(r.c_id) && cs.size() >= 2) ids.insert(w);
    if (!ids.empty()) z.push_back({r.c_id, {ids.begin(), ids.end()}});
  }
  return z;
}

bool phase1_complete(const NodeState& s) {
  return s.joined && s.complete_done.size() == s.cl.size();
}

// ---------------------------------------------------------------------------
// step()
// ---------------------------------------------------------------------------

namespace {

struct Stepper {
  const NodeState& in;
  NodeState s;
  std::vector<Message> out;
  const Graph& g;
  Signal signal;
  int tick;
  std::set<CommunityId> held0;  // records held at tick start (flood forward predicate)
  int flood_seq = 0;
  bool got_join_com = false;
  std::map<CommunityId, CommunityId> staged_renames;  // old c_id -> surviving c_id
  struct StagedVal {
    long size;
    double cm;
    VertexId origin;
  };
  std::map<CommunityId, StagedVal> staged_vals;  // surviving c_id -> winning payload

  Stepper(const NodeState& in_, const StepContext& ctx)
      : in(in_), s(in_), g(*ctx.g), signal(ctx.signal), tick(ctx.tick) {
    for (const auto& r : in.cl) held0.insert(r.c_id);
  }

  void send(VertexId to, Payload p, CommunityId route_c = -1, VertexId route_key = -1,
            std::optional<FloodKey> flood = std::nullopt) {
    out.push_back({s.id, to, route_c, route_key, std::move(flood), std::move(p)});
  }

  void broadcast(Payload p, CommunityId route_c = -1,
                 std::optional<FloodKey> flood = std::nullopt) {
    for (VertexId w : g.neighbors(s.id))
      out.push_back({s.id, w, route_c, -1, flood, p});
  }

  // Start a new flood wave: mark it seen locally and transmit to all neighbors.
  void originate_flood(Payload p, CommunityId key_c, CommunityId route_c = -1) {
    FloodKey key{s.id, tick, key_c, flood_seq++};
    s.seen.insert(key);
    broadcast(std::move(p), route_c, key);
  }

  void forward_flood(const Message& m) {
    for (VertexId w : g.neighbors(s.id))
      out.push_back({s.id, w, m.route_c, -1, m.flood, m.payload});
  }

  // Send a tree-routed message one hop toward the head of community c.
  void route_up(CommunityId c, const Message& m) {
    VertexId next;
    if (const auto* r = s.find(c); r && r->p_id) {
      next = *r->p_id;
    } else if (auto it = s.tombstones.find(c); it != s.tombstones.end()) {
      next = it->second;  // we left c recently; keep relaying for ex-children
    } else {
      return;  // no route; drop (should not happen in a well-formed run)
    }
    out.push_back({s.id, next, m.route_c, m.route_key, std::nullopt, m.payload});
  }

  // --- head-side bookkeeping -----------------------------------------------

  void head_apply_joins(CommunityRecord& rec, std::vector<JoinReqMsg> reqs) {
    std::sort(reqs.begin(), reqs.end(),
              [](const JoinReqMsg& a, const JoinReqMsg& b) { return a.v < b.v; });
    for (const auto& jr : reqs) {
      double l = static_cast<double>(rec.c_size);
      rec.cm = (rec.cm * l + jr.nm) / (l + 1.0);
      rec.c_size += 1;
    }
  }

  void head_apply_leaves(CommunityRecord& rec, std::vector<DecisionMsg> decisions,
                         bool forced) {
    std::vector<DecisionMsg> leavers;
    for (const auto& d : decisions)
      if (d.leave) leavers.push_back(d);
    std::sort(leavers.begin(), leavers.end(), [](const DecisionMsg& a, const DecisionMsg& b) {
      if (a.benefit != b.benefit) return a.benefit > b.benefit;
      return a.v < b.v;
    });
    for (const auto& d : leavers) {
      if (rec.c_size < 2) continue;
      double l = static_cast<double>(rec.c_size);
      double cm_after = (rec.cm * l - d.nm) / (l - 1.0);
      if (!forced && cm_after < rec.cm) continue;  // departure would hurt the community
      rec.cm = cm_after;
      rec.c_size -= 1;
      originate_flood(LeaveAcceptedMsg{d.v, rec.cm, rec.c_size}, rec.c_id);
    }
  }

  // --- inbox ---------------------------------------------------------------

  void absorb(const Message& m) {
    std::visit([&](const auto& p) { handle(m, p); }, m.payload);
  }

  void handle(const Message& m, const CcMsg& p) { s.nbr_cc[m.from] = p.cc; }

  void handle(const Message& m, const JoinCom& p) {
    got_join_com = true;
    for (const auto& e : p.entries) {
      s.nbr_comms[m.from].insert(e.c_id);
      s.gamma.try_emplace(e.c_id);
      if (e.p_id && *e.p_id == s.id) s.children[e.c_id].insert(m.from);
    }
  }

  void handle(const Message& m, const CompleteMsg& p) {
    s.completes[m.route_c][p.v] = {p.nm_avg, p.c_size};
  }

  void handle(const Message& m, const MovementMsg& p) {
    if (!s.seen.insert(*m.flood).second) return;
    CommunityId c = m.flood->c;
    s.gamma[c] = {p.c_size, p.cm};
    if (auto* r = s.find(c)) {
      r->c_size = p.c_size;
      r->cm = p.cm;
    }
    if (held0.count(c)) forward_flood(m);
  }

  void handle(const Message& m, const OnmMsg& p) { s.nbr_onm[m.from] = p.onm; }

  void handle(const Message& m, const DecisionMsg& p) {
    CommunityId c = m.route_c;
    if (s.is_head_of(c)) {
      if (!s.ml_done)
        s.pend_decisions[c].push_back(p);
      else if (p.leave)
        s.tick_decisions[c].push_back(p);  // late leave (orphan); processed at tick end
    } else {
      route_up(c, m);
    }
  }

  void handle(const Message& m, const JoinReqMsg& p) {
    CommunityId c = m.route_c;
    if (s.is_head_of(c)) {
      if (!s.ml_done)
        s.pend_joins[c].push_back(p);
      else
        s.tick_joins[c].push_back(p);
    } else {
      route_up(c, m);
    }
  }

  void handle(const Message& m, const LeaveAcceptedMsg& p) {
    if (!s.seen.insert(*m.flood).second) return;
    CommunityId c = m.flood->c;
    s.gamma[c] = {p.c_size, p.cm};
    if (auto it = s.nbr_comms.find(p.v); it != s.nbr_comms.end()) it->second.erase(c);
    if (auto it = s.children.find(c); it != s.children.end()) it->second.erase(p.v);
    if (!held0.count(c)) return;
    forward_flood(m);
    auto* rec = s.find(c);
    if (!rec) return;  // already removed by an earlier flood this tick
    if (p.v == s.id) {
      if (rec->p_id) s.tombstones[c] = *rec->p_id;
      std::erase_if(s.cl, [&](const CommunityRecord& r) { return r.c_id == c; });
      s.children.erase(c);
      s.orphaned.erase(c);
    } else {
      rec->cm = p.cm;
      rec->c_size = p.c_size;
      if (rec->p_id && *rec->p_id == p.v) s.orphaned.insert(c);  // engine repairs at barrier
    }
  }

  void handle(const Message& m, const MergeReqMsg& p) {
    CommunityId c = m.route_c;
    s.crumbs[p.v] = m.from;
    if (s.is_head_of(c))
      s.merge_reqs.push_back(p);
    else
      route_up(c, m);
  }

  void handle(const Message& m, const ConfirmMsg& p) {
    if (m.route_key == s.id) {
      s.confirm_received = p;
      return;
    }
    auto it = s.crumbs.find(m.route_key);
    if (it == s.crumbs.end()) return;
    out.push_back({s.id, it->second, m.route_c, m.route_key, std::nullopt, m.payload});
  }

  void handle(const Message& m, const UpdateComMsg& p) {
    if (!s.seen.insert(*m.flood).second) return;
    CommunityId oldc = m.route_c, newc = p.c_id;
    // Several communities may retire into the same target in one pass, so the
    // concurrent floods are staged and applied at tick end under a fixed order
    // (renames by ascending old id, values by size then origin). The result is
    // then independent of the order copies happen to sit in the inbox.
    staged_renames.emplace(oldc, newc);
    // Only members of the retiring community take the payload values: they are
    // the ones rewriting their record to the survivor. Bystanders (including
    // the survivor's own members) just relabel beliefs and keep their stored
    // values, so absorbing requesters never dilutes the surviving community.
    if (held0.count(oldc)) {
      auto it = staged_vals.find(newc);
      if (it == staged_vals.end() || p.c_size > it->second.size ||
          (p.c_size == it->second.size && m.flood->origin < it->second.origin))
        staged_vals[newc] = {p.c_size, p.cm, m.flood->origin};
      forward_flood(m);
    }
  }

  void apply_community_rename(CommunityId oldc, CommunityId newc) {
    s.gamma.erase(oldc);
    s.gamma.try_emplace(newc);
    for (auto& [w, cs] : s.nbr_comms)
      if (cs.erase(oldc)) cs.insert(newc);
    if (auto it = s.children.find(oldc); it != s.children.end()) {
      s.children[newc].insert(it->second.begin(), it->second.end());
      s.children.erase(it);
    }
    if (auto it = s.tombstones.find(oldc); it != s.tombstones.end()) {
      s.tombstones.emplace(newc, it->second);
      s.tombstones.erase(it);
    }
    if (auto* rec = s.find(oldc)) {
      if (s.find(newc)) {  // member of both sides: collapse to one record
        std::erase_if(s.cl, [&](const CommunityRecord& r) { return r.c_id == oldc; });
      } else {
        rec->c_id = newc;
        std::sort(s.cl.begin(), s.cl.end(),
                  [](const CommunityRecord& a, const CommunityRecord& b) {
                    return a.c_id < b.c_id;
                  });
      }
    }
    if (s.orphaned.erase(oldc)) s.orphaned.insert(newc);
  }

  // --- time/signal behaviors -----------------------------------------------

  void add_record(CommunityId c, long size, double cm, std::optional<VertexId> p_id) {
    s.cl.push_back({c, size, p_id, cm});
    std::sort(s.cl.begin(), s.cl.end(),
              [](const CommunityRecord& a, const CommunityRecord& b) {
                return a.c_id < b.c_id;
              });
  }

  void phase1_join() {
    // Pick every community with the highest number of known member neighbors.
    std::map<CommunityId, int> count;
    for (const auto& [w, cs] : s.nbr_comms)
      for (CommunityId c : cs) count[c] += 1;
    int best = 0;
    for (const auto& [c, n] : count) best = std::max(best, n);
    if (best == 0) return;
    s.joined = true;
    std::vector<JoinEntry> announce;
    for (const auto& [c, n] : count) {
      if (n != best) continue;
      VertexId parent = member_neighbors(s, c).front();
      auto info = s.gamma[c];
      add_record(c, info.c_size, info.cm, parent);
      announce.push_back({c, parent});
    }
    broadcast(JoinCom{s.id, std::move(announce)});
  }

  void phase1_aggregate() {
    // Aggregation may start only once every neighbor has announced a
    // membership: selection is one-shot, so at that point no further child
    // can register and the local NM terms are final.
    for (VertexId w : g.neighbors(s.id)) {
      auto it = s.nbr_comms.find(w);
      if (it == s.nbr_comms.end() || it->second.empty()) return;
    }
    for (const auto& r_snapshot : std::vector<CommunityRecord>(s.cl.begin(), s.cl.end())) {
      CommunityId c = r_snapshot.c_id;
      if (s.complete_done.count(c)) continue;
      const auto& kids = s.children[c];
      const auto& got = s.completes[c];
      bool ready = std::all_of(kids.begin(), kids.end(),
                               [&](VertexId u) { return got.count(u) != 0; });
      if (!ready) continue;
      // Subtree sum in ascending child order; both simulator and replay use
      // exactly this operation order, so the doubles match bit for bit.
      double sum = local_nm(g, s, c);
      long size = 1;
      for (VertexId u : kids) {
        const auto& [avg_u, size_u] = got.at(u);
        sum += avg_u * static_cast<double>(size_u);
        size += size_u;
      }
      auto* rec = s.find(c);
      if (!rec->p_id) {
        rec->cm = sum / static_cast<double>(size);
        rec->c_size = size;
      } else {
        send(*rec->p_id, CompleteMsg{s.id, sum / static_cast<double>(size), size}, c);
      }
      s.complete_done.insert(c);
    }
  }

  void reset_sweep_state() {
    s.intent = {};
    s.onm = 0.0;
    s.nbr_onm.clear();
    s.ml_done = false;
    s.pend_decisions.clear();
    s.pend_joins.clear();
    s.tick_decisions.clear();
    s.tick_joins.clear();
    s.tombstones.clear();
    s.orphaned.clear();
    reset_pass_state();
  }

  void reset_pass_state() {
    s.merge_intent.reset();
    s.merge_reqs.clear();
    s.crumbs.clear();
    s.confirm_received.reset();
  }

  void start_flood_if_head() {
    if (const auto* own = s.headed_record())
      originate_flood(MovementMsg{s.id, own->cm, own->c_size}, own->c_id);
  }

  void movement_decide() {
    if (!s.joined || s.headed_record()) return;
    s.intent = compute_movement_decision(g, s);
    if (s.intent.action != MoveAction::Stay) {
      s.onm = local_onm(g, s);
      broadcast(OnmMsg{s.onm});
    }
  }

  bool has_degree_one_child() const {
    for (const auto& [c, kids] : s.children)
      for (VertexId u : kids)
        if (s.find(c) && g.degree(u) == 1) return true;
    return false;
  }

  void movement_resolve() {
    if (s.headed_record()) return;
    bool winner = s.intent.action != MoveAction::Stay && resolve_lock(s) &&
                  !has_degree_one_child();
    std::vector<CommunityRecord> pre = s.cl;
    if (winner) {
      std::vector<JoinEntry> announce;
      for (const auto& jt : s.intent.join) {
        VertexId gateway = member_neighbors(s, jt.c_id).front();
        auto info = s.gamma[jt.c_id];
        add_record(jt.c_id, info.c_size, info.cm, gateway);
        send(gateway, JoinReqMsg{s.id, jt.nm}, jt.c_id);
        announce.push_back({jt.c_id, gateway});
      }
      if (!announce.empty()) broadcast(JoinCom{s.id, std::move(announce)});
    }
    for (const auto& r : pre) {
      if (!r.p_id) continue;
      bool lv = winner && s.intent.action == MoveAction::LeaveAndJoin &&
                std::find(s.intent.leave.begin(), s.intent.leave.end(), r.c_id) !=
                    s.intent.leave.end();
      DecisionMsg d{s.id, local_nm(g, s, r.c_id), lv ? s.intent.leave_benefit : 0.0, lv};
      send(*r.p_id, d, r.c_id);
    }
  }

  void process_leaves_barrier() {
    for (auto& rec : s.cl) {
      if (rec.p_id) continue;
      head_apply_joins(rec, std::move(s.pend_joins[rec.c_id]));
      head_apply_leaves(rec, std::move(s.pend_decisions[rec.c_id]), false);
    }
    s.pend_joins.clear();
    s.pend_decisions.clear();
    s.ml_done = true;
  }

  void process_tick_batches() {
    if (s.tick_joins.empty() && s.tick_decisions.empty()) return;
    for (auto& rec : s.cl) {
      if (rec.p_id) continue;
      if (auto it = s.tick_joins.find(rec.c_id); it != s.tick_joins.end())
        head_apply_joins(rec, std::move(it->second));
      if (auto it = s.tick_decisions.find(rec.c_id); it != s.tick_decisions.end())
        head_apply_leaves(rec, std::move(it->second), true);  // orphan leaves: uncondit.
    }
    s.tick_joins.clear();
    s.tick_decisions.clear();
  }

  void forced_leave() {
    if (s.orphaned.empty()) return;
    std::set<CommunityId> leaving = s.orphaned;
    s.orphaned.clear();
    bool needs_home = leaving.size() >= s.cl.size();  // would end up with no community
    if (needs_home) {
      // Re-attach to the adjacent community with the most member neighbors.
      CommunityId best = -1;
      int best_n = 0;
      for (const auto& [c, info] : s.gamma) {
        if (!info.known() || s.find(c)) continue;
        int n = static_cast<int>(member_neighbors(s, c).size());
        if (n > best_n || (n == best_n && n > 0 && c < best)) {
          best = c;
          best_n = n;
        }
      }
      if (best_n > 0) {
        VertexId gateway = member_neighbors(s, best).front();
        auto info = s.gamma[best];
        add_record(best, info.c_size, info.cm, gateway);
        send(gateway, JoinReqMsg{s.id, local_nm(g, s, best)}, best);
        broadcast(JoinCom{s.id, {{best, gateway}}});
      } else {
        // Nowhere to go: found a singleton community of its own.
        add_record(s.id, 1, 0.0, std::nullopt);
        broadcast(JoinCom{s.id, {{s.id, std::nullopt}}});
      }
    }
    for (CommunityId c : leaving) {
      const auto* rec = s.find(c);
      if (!rec || !rec->p_id) continue;
      DecisionMsg d{s.id, local_nm(g, s, c), 0.0, true};
      send(*rec->p_id, d, c);  // the departed parent still relays via its tombstone
    }
  }

  void merge_request() {
    if (!s.headed_record()) return;
    s.merge_intent = compute_merge_intent(g, s);
    if (s.merge_intent)
      send(s.merge_intent->gateway,
           MergeReqMsg{s.id, s.merge_intent->target, s.merge_intent->onm},
           s.merge_intent->target);
  }

  void merge_resolve() {
    CommunityRecord* own = nullptr;
    for (auto& r : s.cl)
      if (!r.p_id) own = &r;
    if (!own || s.merge_reqs.empty()) return;
    std::sort(s.merge_reqs.begin(), s.merge_reqs.end(),
              [](const MergeReqMsg& a, const MergeReqMsg& b) { return a.v < b.v; });
    if (s.merge_intent) {
      // Mutual request: the lower-id head yields, abandoning its own request.
      // While an intent stands, requests from third parties are ignored.
      VertexId other = s.merge_intent->target;  // community id == its head id
      bool mutual = std::any_of(s.merge_reqs.begin(), s.merge_reqs.end(),
                                [&](const MergeReqMsg& r) { return r.v == other; });
      if (mutual && s.id < other) s.merge_intent.reset();
    }
    if (s.merge_intent) return;
    // No (remaining) intent of our own: every requester gets a Confirm quoting
    // the community as it stands, then the absorbed side (whose figures arrived
    // with the pass-opening flood; a requesting head's community carries its
    // id) is folded in so a later confirm quotes the grown community.
    for (const auto& r : s.merge_reqs) {
      Message m{s.id, s.crumbs.at(r.v), own->c_id, r.v, std::nullopt,
                ConfirmMsg{s.id, own->c_id, own->c_size, own->cm}};
      out.push_back(m);
      auto it = s.gamma.find(r.v);
      if (it != s.gamma.end() && it->second.known()) {
        double l_r = static_cast<double>(it->second.c_size);
        double l_t = static_cast<double>(own->c_size);
        own->cm = (it->second.cm * l_r + own->cm * l_t) / (l_r + l_t);
        own->c_size += it->second.c_size;
        s.gamma[own->c_id] = {own->c_size, own->cm};
      }
      s.absorbed_any = true;
    }
  }

  void merge_execute() {
    if (!s.confirm_received || !s.merge_intent) return;
    const ConfirmMsg conf = *s.confirm_received;
    CommunityRecord* own = nullptr;
    for (auto& r : s.cl)
      if (!r.p_id) own = &r;
    if (!own) return;
    CommunityId oldc = own->c_id;
    double l_r = static_cast<double>(own->c_size);
    double l_t = static_cast<double>(conf.c_size);
    double merged_cm = (own->cm * l_r + conf.cm * l_t) / (l_r + l_t);
    long merged_size = own->c_size + conf.c_size;
    own->p_id = s.merge_intent->gateway;
    apply_community_rename(oldc, conf.c_id);
    s.gamma[conf.c_id] = {merged_size, merged_cm};
    if (auto* rec = s.find(conf.c_id)) {
      rec->c_size = merged_size;
      rec->cm = merged_cm;
    }
    originate_flood(UpdateComMsg{s.id, conf.c_id, merged_size, merged_cm}, conf.c_id,
                    oldc);
    s.confirm_received.reset();
    s.merge_intent.reset();
  }

  StepOutput run(const std::vector<Message>& inbox) {
    for (const auto& m : inbox) absorb(m);

    switch (signal) {
      case Signal::None:
        break;
      case Signal::SendCc:
        broadcast(CcMsg{s.cc});
        break;
      case Signal::Elect:
        if (!s.joined && elect_head(g, s)) {
          s.joined = true;
          add_record(s.id, 1, 0.0, std::nullopt);
          broadcast(JoinCom{s.id, {{s.id, std::nullopt}}});
        }
        break;
      case Signal::StartMovement:
        reset_sweep_state();
        s.mv_started = true;
        start_flood_if_head();
        break;
      case Signal::DecideMovement:
        movement_decide();
        break;
      case Signal::ResolveMovement:
        movement_resolve();
        break;
      case Signal::ProcessLeaves:
        process_leaves_barrier();
        break;
      case Signal::ForcedLeave:
        forced_leave();
        break;
      case Signal::StartMergeFlood:
        reset_pass_state();
        start_flood_if_head();
        break;
      case Signal::RequestMerges:
        merge_request();
        break;
      case Signal::ResolveMerges:
        merge_resolve();
        break;
      case Signal::ExecuteMerges:
        merge_execute();
        break;
      case Signal::Finalize:
        s.z = identify_overlaps(g, s);
        s.done = true;
        break;
    }

    if (!s.mv_started) {
      if (!s.joined && got_join_com) phase1_join();
      if (s.joined) phase1_aggregate();
    } else if (s.ml_done) {
      process_tick_batches();
    }

    for (const auto& [oldc, newc] : staged_renames) apply_community_rename(oldc, newc);
    for (const auto& [c, u] : staged_vals) {
      s.gamma[c] = {u.size, u.cm};
      if (auto* rec = s.find(c)) {
        rec->c_size = u.size;
        rec->cm = u.cm;
      }
    }

    return {std::move(s), std::move(out)};
  }
};

}  // namespace

StepOutput step(const NodeState& s, const std::vector<Message>& inbox,
                const StepContext& ctx) {
  Stepper st(s, ctx);
  return st.run(inbox);
}

}  // namespace docd
