#include "docd/engine.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace docd {

namespace {

enum class Stage {
  P1,
  MvFlood,
  MvOnm,
  MvResolve,
  MvRoute,
  MvHeads,
  MvLeave,
  MvForced,
  MgFlood,
  MgReq,
  MgRouteReq,
  MgResolve,
  MgRouteConf,
  MgExec,
  MgUpdate,
  Finalize,
  Done
};

const char* stage_name(Stage st) {
  switch (st) {
    case Stage::P1: return "phase1";
    case Stage::MvFlood: return "movement.flood";
    case Stage::MvOnm: return "movement.onm";
    case Stage::MvResolve: return "movement.resolve";
    case Stage::MvRoute: return "movement.route";
    case Stage::MvHeads: return "movement.heads";
    case Stage::MvLeave: return "movement.leave";
    case Stage::MvForced: return "movement.forced";
    case Stage::MgFlood: return "merging.flood";
    case Stage::MgReq: return "merging.request";
    case Stage::MgRouteReq: return "merging.route_req";
    case Stage::MgResolve: return "merging.resolve";
    case Stage::MgRouteConf: return "merging.route_confirm";
    case Stage::MgExec: return "merging.execute";
    case Stage::MgUpdate: return "merging.update";
    case Stage::Finalize: return "finalize";
    case Stage::Done: return "done";
  }
  return "?";
}

bool movement_stage(Stage st) {
  return st >= Stage::MvFlood && st <= Stage::MvForced;
}
bool merging_stage(Stage st) {
  return st >= Stage::MgFlood && st <= Stage::MgUpdate;
}

struct PayloadPrinter {
  std::ostream& out;
  void operator()(const CcMsg& p) { out << " cc=" << p.cc; }
  void operator()(const JoinCom& p) {
    out << " v=" << p.v << " joins=";
    for (size_t i = 0; i < p.entries.size(); ++i) {
      const auto& e = p.entries[i];
      if (i) out << ",";
      out << e.c_id << ":";
      if (e.p_id)
        out << *e.p_id;
      else
        out << "-";
    }
  }
  void operator()(const CompleteMsg& p) {
    out << " v=" << p.v << " nm_avg=" << p.nm_avg << " c_size=" << p.c_size;
  }
  void operator()(const MovementMsg& p) {
    out << " v=" << p.v << " cm=" << p.cm << " c_size=" << p.c_size;
  }
  void operator()(const OnmMsg& p) { out << " onm=" << p.onm; }
  void operator()(const DecisionMsg& p) {
    out << " v=" << p.v << " nm=" << p.nm << " benefit=" << p.benefit
        << " leave=" << (p.leave ? "true" : "false");
  }
  void operator()(const LeaveAcceptedMsg& p) {
    out << " v=" << p.v << " cm=" << p.cm << " c_size=" << p.c_size;
  }
  void operator()(const JoinReqMsg& p) { out << " v=" << p.v << " nm=" << p.nm; }
  void operator()(const MergeReqMsg& p) {
    out << " v=" << p.v << " c_id=" << p.c_id << " onm=" << p.onm;
  }
  void operator()(const ConfirmMsg& p) {
    out << " v=" << p.v << " c_id=" << p.c_id << " c_size=" << p.c_size
        << " cm=" << p.cm;
  }
  void operator()(const UpdateComMsg& p) {
    out << " v=" << p.v << " c_id=" << p.c_id << " c_size=" << p.c_size
        << " cm=" << p.cm;
  }
};

struct Engine {
  const Graph& g;
  EngineConfig cfg;
  int n;
  std::vector<VertexId> ids;
  std::map<VertexId, int> slot;
  std::vector<NodeState> cur, next;
  std::vector<std::vector<Message>> inbox, outs;
  std::vector<Message> inflight;
  Stage stage = Stage::P1;
  long stage_trigger = 0;
  long tick = 0;
  long max_ticks = 0;
  int sweeps_done = 0;
  long merges_this_pass = 0;
  int joined_count = 0;
  RunResult res;

  Engine(const Graph& g_, const EngineConfig& cfg_) : g(g_), cfg(cfg_) {
    ids = g.vertices();
    n = static_cast<int>(ids.size());
    for (int i = 0; i < n; ++i) slot[ids[i]] = i;
    cur.reserve(n);
    for (VertexId v : ids) cur.push_back(init_node(g, v));
    next.resize(n);
    inbox.resize(n);
    outs.resize(n);
    max_ticks = cfg.max_rounds > 0 ? cfg.max_rounds : 50L * (g.diameter() + 1);
    for (const char* k : kMessageKinds) res.messages[k] = 0;
  }

  Signal signal_for_tick() const {
    if (stage == Stage::P1) {
      if (tick == 0) return Signal::SendCc;
      if (tick == 1) return Signal::Elect;
      return Signal::None;
    }
    if (tick != stage_trigger) return Signal::None;
    switch (stage) {
      case Stage::MvFlood: return Signal::StartMovement;
      case Stage::MvOnm: return Signal::DecideMovement;
      case Stage::MvResolve: return Signal::ResolveMovement;
      case Stage::MvHeads: return Signal::ProcessLeaves;
      case Stage::MvForced: return Signal::ForcedLeave;
      case Stage::MgFlood: return Signal::StartMergeFlood;
      case Stage::MgReq: return Signal::RequestMerges;
      case Stage::MgResolve: return Signal::ResolveMerges;
      case Stage::MgExec: return Signal::ExecuteMerges;
      case Stage::Finalize: return Signal::Finalize;
      default: return Signal::None;
    }
  }

  void advance(Stage st) {
    stage = st;
    stage_trigger = tick + 1;
    if (st == Stage::MgFlood) merges_this_pass = 0;
  }

  std::string snapshot() const {
    std::ostringstream os;
    os << "tick=" << tick << " stage=" << stage_name(stage)
       << " inflight=" << inflight.size() << " joined=" << joined_count << "\n";
    int shown = 0;
    for (const auto& s : cur) {
      if (shown++ >= 20) {
        os << "  ...\n";
        break;
      }
      os << "  node " << s.id << ": cl=[";
      for (size_t i = 0; i < s.cl.size(); ++i) {
        if (i) os << ",";
        os << s.cl[i].c_id << (s.cl[i].p_id ? "" : "*");
      }
      os << "] joined=" << s.joined << " orphaned=" << s.orphaned.size() << "\n";
    }
    return os.str();
  }

  void step_all(Signal sig) {
    StepContext ctx{&g, sig, static_cast<int>(tick)};
    auto work = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        auto so = step(cur[i], inbox[i], ctx);
        next[i] = std::move(so.state);
        outs[i] = std::move(so.out);
      }
    };
    unsigned hw = std::thread::hardware_concurrency();
    if (!cfg.parallel || hw < 2 || n < 2 * static_cast<int>(hw)) {
      work(0, n);
    } else {
      int nthreads = static_cast<int>(std::min<unsigned>(hw, 8));
      std::vector<std::thread> pool;
      int chunk = (n + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        int lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
  }

  // Walks w's parent chain in community c. Returns false if the chain is broken
  // (missing record, pending orphan, or a cycle) or if it passes through `avoid`.
  bool chain_reaches_head(VertexId w, CommunityId c, VertexId avoid) const {
    VertexId x = w;
    for (int hops = 0; hops <= n; ++hops) {
      if (x == avoid) return false;
      const NodeState& sx = cur[slot.at(x)];
      const CommunityRecord* r = sx.find(c);
      if (!r || sx.orphaned.count(c)) return false;
      if (!r->p_id) return true;  // reached the head
      x = *r->p_id;
      if (!slot.count(x)) return false;
    }
    return false;  // cycle guard
  }

  // Re-points members whose parent departed to the lowest-id member neighbor
  // that still has an intact route to the head and is not in their own subtree.
  // Runs on quiesced global state between ticks; nodes left marked afterwards
  // take the forced-leave path on the next tick.
  void repair_orphans() {
    for (int i = 0; i < n; ++i) {
      if (cur[i].orphaned.empty()) continue;
      std::vector<CommunityId> marks(cur[i].orphaned.begin(), cur[i].orphaned.end());
      for (CommunityId c : marks) {
        NodeState& sv = cur[i];
        if (!sv.find(c)) {
          sv.orphaned.erase(c);
          continue;
        }
        for (VertexId w : g.neighbors(sv.id)) {
          const NodeState& sw = cur[slot.at(w)];
          if (!sw.find(c)) continue;
          if (!chain_reaches_head(w, c, sv.id)) continue;
          sv.find(c)->p_id = w;
          sv.orphaned.erase(c);
          cur[slot.at(w)].children[c].insert(sv.id);
          break;
        }
      }
    }
  }

  bool any_orphans() const {
    return std::any_of(cur.begin(), cur.end(),
                       [](const NodeState& s) { return !s.orphaned.empty(); });
  }

  void transition(bool empty) {
    switch (stage) {
      case Stage::P1:
        if (tick >= 1 && empty &&
            std::all_of(cur.begin(), cur.end(), phase1_complete))
          advance(Stage::MvFlood);
        break;
      case Stage::MvFlood:
        if (tick >= stage_trigger && empty) advance(Stage::MvOnm);
        break;
      case Stage::MvOnm:
        advance(Stage::MvResolve);
        break;
      case Stage::MvResolve:
        advance(Stage::MvRoute);
        break;
      case Stage::MvRoute:
        if (empty) advance(Stage::MvHeads);
        break;
      case Stage::MvHeads:
        advance(Stage::MvLeave);
        break;
      case Stage::MvLeave:
        if (empty) {
          repair_orphans();
          if (any_orphans())
            advance(Stage::MvForced);
          else
            advance(Stage::MgFlood);
        }
        break;
      case Stage::MvForced:
        advance(Stage::MvLeave);
        break;
      case Stage::MgFlood:
        if (tick >= stage_trigger && empty) advance(Stage::MgReq);
        break;
      case Stage::MgReq:
        advance(Stage::MgRouteReq);
        break;
      case Stage::MgRouteReq:
        if (empty) advance(Stage::MgResolve);
        break;
      case Stage::MgResolve:
        advance(Stage::MgRouteConf);
        break;
      case Stage::MgRouteConf:
        if (empty) advance(Stage::MgExec);
        break;
      case Stage::MgExec:
        advance(Stage::MgUpdate);
        break;
      case Stage::MgUpdate:
        if (empty) {
          if (merges_this_pass > 0) {
            advance(Stage::MgFlood);
          } else if (sweeps_done < cfg.extra_sweeps) {
            ++sweeps_done;
            advance(Stage::MvFlood);
          } else {
            advance(Stage::Finalize);
          }
        }
        break;
      case Stage::Finalize:
        stage = Stage::Done;
        break;
      case Stage::Done:
        break;
    }
  }

  RunResult run() {
    if (cfg.trace)
      cfg.trace->precision(std::numeric_limits<double>::max_digits10);
    while (stage != Stage::Done) {
      if (tick > max_ticks)
        throw DivergenceError("no quiescence after " + std::to_string(max_ticks) +
                                  " rounds",
                              snapshot());
      Signal sig = signal_for_tick();

      for (auto& ib : inbox) ib.clear();
      long delivered = static_cast<long>(inflight.size());
      for (auto& m : inflight) {
        res.messages[m.kind_name()] += 1;
        if (cfg.trace) {
          *cfg.trace << "round=" << tick << " kind=" << m.kind_name()
                     << " from=" << m.from << " to=" << m.to;
          std::visit(PayloadPrinter{*cfg.trace}, m.payload);
          *cfg.trace << "\n";
        }
        inbox[slot.at(m.to)].push_back(std::move(m));
      }
      inflight.clear();

      step_all(sig);
      cur.swap(next);

      for (int i = 0; i < n; ++i) {
        for (auto& m : outs[i]) inflight.push_back(std::move(m));
        outs[i].clear();
      }

      if (stage == Stage::MgExec && tick == stage_trigger) {
        std::set<VertexId> origins;
        for (const auto& m : inflight)
          if (m.kind_index() == 10) origins.insert(m.from);  // Update_Com
        merges_this_pass = static_cast<long>(origins.size());
      }

      if (delivered > 0) {
        if (stage == Stage::P1)
          res.rounds.phase1 += 1;
        else if (movement_stage(stage))
          res.rounds.movement += 1;
        else if (merging_stage(stage))
          res.rounds.merging += 1;
      }
      if (stage == Stage::P1) {
        int jc = 0;
        for (const auto& s : cur) jc += s.joined ? 1 : 0;
        if (jc > joined_count) {
          joined_count = jc;
          res.rounds.phase1_selection = tick;
        }
      }

      transition(inflight.empty());
      ++tick;
    }
    res.nodes = std::move(cur);
    res.total_ticks = tick;
    return std::move(res);
  }
};

}  // namespace

RunResult run_protocol(const Graph& g, const EngineConfig& cfg) {
  Engine e(g, cfg);
  return e.run();
}

}  // namespace docd
