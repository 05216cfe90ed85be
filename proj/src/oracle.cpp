#include "docd/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace docd {

namespace {

constexpr long kFar = std::numeric_limits<long>::max();

// One span of membership of a vertex in a community. `parent < 0` means the
// vertex heads the community. Closed spans are kept so flood forwarding can be
// decided for any past tick ("did v hold a record of c when the wave hit?").
struct Span {
  long create = 0;
  long remove = -1;  // -1: still live
  VertexId parent = -1;
  bool heads() const { return parent < 0; }
};

struct PendingFlood {  // a Leave_Accepted wave not yet expanded
  long emit = 0;
  CommunityId c{};
  VertexId origin{};
  VertexId leaver{};
  long size = 0;
  double cm = 0.0;
};

struct HeadBatch {  // post-barrier arrivals at one head in one tick
  std::vector<std::pair<VertexId, double>> joins;   // v, nm
  std::vector<std::pair<VertexId, double>> leaves;  // v, nm (forced)
};

struct Replay {
  const Graph& g;
  int extra;
  std::vector<VertexId> verts;

  std::map<VertexId, std::map<CommunityId, Span>> live;
  std::map<VertexId, std::map<CommunityId, std::vector<Span>>> closed;
  std::map<CommunityId, std::set<VertexId>> members;
  std::map<CommunityId, std::pair<long, double>> heads;  // stored size, cm
  // Last flooded (size, cm) each vertex has received, per community.
  std::map<VertexId, std::map<CommunityId, std::pair<long, double>>> vals;
  // What each vertex believes about its neighbors' memberships. Beliefs go
  // stale when a community's member subgraph gets cut and later floods no
  // longer reach the far side, so the global member map is not a substitute.
  std::map<VertexId, std::map<VertexId, std::set<CommunityId>>> nbrc;
  std::map<VertexId, std::map<CommunityId, std::set<VertexId>>> kids;
  std::map<VertexId, std::map<CommunityId, VertexId>> tombs;  // per sweep
  std::set<std::pair<VertexId, CommunityId>> marks;           // orphaned records
  std::set<VertexId> absorbed;  // heads that have confirmed at least one merge

  std::map<std::string, long> msgs;
  std::set<long> p1_ticks, mv_ticks, mg_ticks;
  long selection = 0;

  Replay(const Graph& g_, int extra_) : g(g_), extra(extra_), verts(g_.vertices()) {
    for (const char* k : kMessageKinds) msgs[k] = 0;
  }

  // --- record helpers -------------------------------------------------------

  Span* rec(VertexId v, CommunityId c) {
    auto it = live.find(v);
    if (it == live.end()) return nullptr;
    auto jt = it->second.find(c);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  bool holds(VertexId v, CommunityId c, long at) {
    if (const Span* s = rec(v, c); s && s->create < at) return true;
    auto it = closed.find(v);
    if (it == closed.end()) return false;
    auto jt = it->second.find(c);
    if (jt == it->second.end()) return false;
    for (const Span& s : jt->second)
      if (s.create < at && at <= s.remove) return true;
    return false;
  }

  bool heads_any(VertexId v) {
    auto it = live.find(v);
    if (it == live.end()) return false;
    for (const auto& [c, s] : it->second)
      if (s.heads()) return true;
    return false;
  }

  std::vector<VertexId> member_nbrs(VertexId v, CommunityId c) {
    std::vector<VertexId> out;
    for (const auto& [w, cs] : nbrc[v])
      if (cs.count(c)) out.push_back(w);
    return out;  // ascending (map order)
  }

  std::set<VertexId> known(VertexId v, CommunityId c) {
    std::set<VertexId> m;
    for (VertexId w : member_nbrs(v, c)) m.insert(w);
    m.insert(v);
    return m;
  }

  double nm(VertexId v, CommunityId c) {
    return node_modularity_local(g, v, known(v, c));
  }

  double onm(VertexId v) {
    std::set<VertexId> uni;
    for (const auto& [c, s] : live[v]) {
      (void)s;
      auto m = known(v, c);
      uni.insert(m.begin(), m.end());
    }
    return onm_local(g, v, uni);
  }

  void create_rec(VertexId v, CommunityId c, VertexId parent, long tick) {
    live[v][c] = Span{tick, -1, parent};
    members[c].insert(v);
  }

  void close_rec(VertexId v, CommunityId c, long at) {
    auto it = live[v].find(c);
    if (it == live[v].end()) return;
    Span s = it->second;
    s.remove = at;
    closed[v][c].push_back(s);
    if (!s.heads()) tombs[v][c] = s.parent;
    live[v].erase(it);
    members[c].erase(v);
    kids[v].erase(c);
    marks.erase({v, c});
  }

  // --- wave / route models --------------------------------------------------

  // Expands one flood wave. Transmitters forward at their first receipt tick;
  // every copy they emit counts as a delivery one tick later.
  struct Wave {
    std::map<VertexId, long> receipt;  // every touched vertex (incl. bystanders)
    long last;                         // latest delivery tick (emit if none)
  };

  template <class Fwd>
  Wave wave(VertexId origin, long emit, Fwd&& forwards, const char* kind,
            std::set<long>& bucket) {
    Wave w{{{origin, emit}}, emit};
    std::vector<VertexId> frontier{origin};
    while (!frontier.empty()) {
      std::vector<VertexId> nxt;
      for (VertexId u : frontier) {
        long r = w.receipt.at(u);
        int d = g.degree(u);
        msgs[kind] += d;
        if (d > 0) {
          bucket.insert(r + 1);
          w.last = std::max(w.last, r + 1);
        }
        for (VertexId x : g.neighbors(u)) {
          if (w.receipt.count(x)) continue;
          w.receipt[x] = r + 1;
          if (forwards(x, r + 1)) nxt.push_back(x);
        }
      }
      frontier = std::move(nxt);
    }
    return w;
  }

  // Tree routing one hop at a time: live parent pointer, else the tombstone
  // left behind by a departed relay, else the message dies where it is.
  struct Route {
    long hops = 0;
    std::optional<long> arrival;  // delivery tick at the head, if reached
  };

  Route route(VertexId first, CommunityId c, long emit, const char* kind,
              std::set<long>& bucket) {
    Route rt;
    VertexId x = first;
    long guard = 3 * static_cast<long>(verts.size()) + 10;
    while (true) {
      rt.hops += 1;
      bucket.insert(emit + rt.hops);
      const Span* sx = rec(x, c);
      if (sx && sx->heads()) {
        rt.arrival = emit + rt.hops;
        break;
      }
      VertexId next;
      if (sx) {
        next = sx->parent;
      } else if (auto it = tombs[x].find(c); it != tombs[x].end()) {
        next = it->second;
      } else {
        break;  // dropped
      }
      x = next;
      if (rt.hops > guard) break;
    }
    msgs[kind] += rt.hops;
    return rt;
  }

  // --- phase I ---------------------------------------------------------------

  // Returns the trigger tick of the first movement flood.
  long phase1() {
    if (verts.empty()) return 2;

    std::map<VertexId, double> cc;
    for (VertexId v : verts) cc[v] = cluster_coefficient(g, v);
    std::vector<VertexId> hs;
    for (VertexId v : verts) {
      bool win = true;
      for (VertexId w : g.neighbors(v))
        if (!(cc[v] > cc[w] || (cc[v] == cc[w] && v < w))) {
          win = false;
          break;
        }
      if (win) hs.push_back(v);
    }

    long sumdeg = 0;
    for (VertexId v : verts) sumdeg += g.degree(v);
    msgs["CC_msg"] += sumdeg;
    if (sumdeg > 0) p1_ticks.insert(1);

    // Join wave: multi-source BFS from the heads; t = 1 + distance.
    std::map<VertexId, long> t;
    std::map<VertexId, std::set<CommunityId>> comms;
    std::vector<VertexId> frontier;
    for (VertexId h : hs) {
      t[h] = 1;
      comms[h] = {h};
      create_rec(h, h, -1, 1);
      msgs["Join_Com"] += g.degree(h);
      if (g.degree(h) > 0) p1_ticks.insert(2);
      frontier.push_back(h);
    }
    long level = 1;
    while (!frontier.empty()) {
      long tv = ++level;
      std::set<VertexId> reached;
      for (VertexId u : frontier)
        for (VertexId w : g.neighbors(u))
          if (!t.count(w)) reached.insert(w);
      std::vector<VertexId> nxt(reached.begin(), reached.end());
      for (VertexId v : nxt) {
        t[v] = tv;
        // Known members are exactly the neighbors that joined one tick earlier.
        std::map<CommunityId, int> count;
        std::map<CommunityId, VertexId> parent;
        for (VertexId w : g.neighbors(v)) {
          if (!t.count(w) || t.at(w) != tv - 1) continue;
          for (CommunityId c : comms.at(w)) {
            count[c] += 1;
            auto [it, fresh] = parent.try_emplace(c, w);
            if (!fresh && w < it->second) it->second = w;
          }
        }
        int best = 0;
        for (const auto& [c, n] : count) best = std::max(best, n);
        for (const auto& [c, n] : count) {
          if (n != best) continue;
          comms[v].insert(c);
          create_rec(v, c, parent.at(c), tv);
          kids[parent.at(c)][c].insert(v);
        }
        msgs["Join_Com"] += g.degree(v);
        if (g.degree(v) > 0) p1_ticks.insert(tv + 1);
      }
      frontier = std::move(nxt);
    }
    for (const auto& [v, tv] : t) {
      (void)v;
      selection = std::max(selection, tv);
    }

    // Every join was announced to all neighbors, so at the end of the join
    // wave each vertex knows its neighbors' memberships exactly.
    for (VertexId v : verts)
      for (VertexId w : g.neighbors(v))
        for (const auto& [c, s] : live[w]) {
          (void)s;
          nbrc[v][w].insert(c);
        }

    // Completes: per community, bottom-up subtree aggregation in ascending
    // child order — operation order matches the simulator bit for bit.
    // A vertex may aggregate once every neighbor's announcement has landed.
    std::map<VertexId, long> ready;
    for (VertexId v : verts) {
      long r = t.at(v);
      for (VertexId w : g.neighbors(v)) r = std::max(r, t.at(w) + 1);
      ready[v] = r;
    }
    long all_ready = 1;
    for (VertexId h : hs) {
      CommunityId c = h;
      std::function<std::tuple<double, long, long>(VertexId)> dfs =
          [&](VertexId v) -> std::tuple<double, long, long> {
        double sum = nm(v, c);
        long size = 1;
        long sigma = ready.at(v);
        for (VertexId u : kids[v][c]) {
          auto [avg_u, size_u, sig_u] = dfs(u);
          sum += avg_u * static_cast<double>(size_u);
          size += size_u;
          sigma = std::max(sigma, sig_u + 1);
        }
        if (v != c) {
          msgs["Complete"] += 1;
          p1_ticks.insert(sigma + 1);
        }
        return {sum / static_cast<double>(size), size, sigma};
      };
      auto [avg, size, sigma] = dfs(h);
      heads[c] = {size, avg};
      all_ready = std::max(all_ready, sigma);
    }

    long end = all_ready;
    if (!p1_ticks.empty()) end = std::max(end, *p1_ticks.rbegin());
    return end + 1;
  }

  // --- shared flood stage (movement / merge refresh) --------------------------

  long flood_all(long trig, std::set<long>& bucket) {
    long last = trig;
    for (const auto& [c, sv] : heads) {
      auto payload = sv;  // size, cm at emission
      auto fwd = [&](VertexId w, long at) { return holds(w, c, at); };
      Wave wv = wave(c, trig, fwd, "Movement", bucket);
      last = std::max(last, wv.last);
      for (const auto& [w, r] : wv.receipt) {
        (void)r;
        if (w != c) vals[w][c] = payload;
      }
    }
    return std::max(trig, last) + 1;
  }

  // --- movement ---------------------------------------------------------------

  struct Intent {
    std::vector<CommunityId> leave;
    double leave_benefit = 0.0;
    std::vector<std::tuple<CommunityId, double, double>> join;  // c, nm, benefit
    double onm = 0.0;
  };

  // Mirrors the per-node movement decision rule on global state.
  std::optional<Intent> decide(VertexId v) {
    Intent in;
    double best_leave = 0.0;
    for (const auto& [c, s] : live[v]) {
      if (s.heads()) continue;
      auto it = vals[v].find(c);
      if (it == vals[v].end() || it->second.first < 2) continue;
      double b = benefit_exclude(it->second.second, it->second.first, nm(v, c));
      if (b <= 0.0) continue;
      if (b > best_leave) {
        best_leave = b;
        in.leave.assign(1, c);
      } else if (b == best_leave) {
        in.leave.push_back(c);
      }
    }
    double best_join = 0.0;
    for (const auto& [c, sv] : vals[v]) {
      if (sv.first < 1 || rec(v, c)) continue;
      if (member_nbrs(v, c).empty()) continue;
      double nmv = nm(v, c);
      double b = benefit_include(sv.second, sv.first, nmv);
      if (b <= 0.0) continue;
      if (b > best_join) {
        best_join = b;
        in.join.assign(1, {c, nmv, b});
      } else if (b == best_join) {
        in.join.push_back({c, nmv, b});
      }
    }
    if (in.join.empty()) return std::nullopt;
    in.leave_benefit = best_leave;
    if (in.leave.empty()) in.leave_benefit = 0.0;
    return in;
  }

  bool has_deg1_child(VertexId v) {
    for (const auto& [c, set] : kids[v]) {
      if (!rec(v, c)) continue;
      for (VertexId u : set)
        if (g.degree(u) == 1) return true;
    }
    return false;
  }

  bool chain_ok(VertexId w, CommunityId c, VertexId avoid) {
    VertexId x = w;
    for (size_t hops = 0; hops <= verts.size(); ++hops) {
      if (x == avoid) return false;
      const Span* sx = rec(x, c);
      if (!sx || marks.count({x, c})) return false;
      if (sx->heads()) return true;
      x = sx->parent;
    }
    return false;
  }

  // Mirrors the simulator's between-tick orphan repair barrier.
  void repair() {
    for (VertexId v : verts) {
      std::vector<CommunityId> cs;
      for (const auto& [mv, mc] : marks)
        if (mv == v) cs.push_back(mc);
      for (CommunityId c : cs) {
        Span* r = rec(v, c);
        if (!r) {
          marks.erase({v, c});
          continue;
        }
        for (VertexId w : g.neighbors(v)) {
          if (!rec(w, c)) continue;
          if (!chain_ok(w, c, v)) continue;
          r->parent = w;
          marks.erase({v, c});
          kids[w][c].insert(v);
          break;
        }
      }
    }
  }

  // Expands one accepted-leave wave and applies its state effects.
  long leave_wave(const PendingFlood& f) {
    auto fwd = [&](VertexId w, long at) { return holds(w, f.c, at); };
    Wave wv = wave(f.origin, f.emit, fwd, "Leave_Accepted", mv_ticks);
    for (const auto& [w, r] : wv.receipt) {
      (void)r;
      if (w == f.origin) continue;  // the head never hears its own flood
      vals[w][f.c] = {f.size, f.cm};
      kids[w][f.c].erase(f.leaver);
      if (auto it = nbrc[w].find(f.leaver); it != nbrc[w].end())
        it->second.erase(f.c);
    }
    auto it = wv.receipt.find(f.leaver);
    if (it != wv.receipt.end() && rec(f.leaver, f.c))
      close_rec(f.leaver, f.c, it->second);
    for (const auto& [w, r] : wv.receipt) {
      if (w == f.leaver) continue;
      const Span* s = rec(w, f.c);
      if (s && s->create < r && s->parent == f.leaver) marks.insert({w, f.c});
    }
    return wv.last;
  }

  // The head-side batch for forced-cascade arrivals: joins first, then
  // unconditional leaves; each accepted leave emits a fresh wave.
  void head_batch(CommunityId c, long tick, HeadBatch b,
                  std::vector<PendingFlood>& q) {
    auto& [sz, cm] = heads.at(c);
    std::sort(b.joins.begin(), b.joins.end());
    for (const auto& [v, nmv] : b.joins) {
      (void)v;
      double l = static_cast<double>(sz);
      cm = (cm * l + nmv) / (l + 1.0);
      sz += 1;
    }
    std::sort(b.leaves.begin(), b.leaves.end());
    for (const auto& [v, nmv] : b.leaves) {
      if (sz < 2) continue;
      double l = static_cast<double>(sz);
      cm = (cm * l - nmv) / (l - 1.0);
      sz -= 1;
      q.push_back({tick, c, c, v, sz, cm});
    }
  }

  // Forced departures for orphans the repair barrier could not re-attach.
  // All nodes act simultaneously on the tick-F state, so choices are computed
  // on a pre-F snapshot and applied before any routing (routes start at F+1
  // and do see the re-attachments). Returns the latest delivery tick emitted.
  long forced(long F, std::map<long, std::map<CommunityId, HeadBatch>>& sched) {
    struct Plan {
      VertexId v{};
      std::vector<CommunityId> leaving;
      std::vector<std::pair<CommunityId, VertexId>> decisions;  // c, first hop
      std::vector<double> decision_nm;
      std::optional<CommunityId> rejoin;
      VertexId gateway{};
      double rejoin_nm = 0.0;
      bool refound = false;
    };
    std::vector<Plan> plans;
    auto snapshot = marks;
    std::set<VertexId> who;
    for (const auto& [v, c] : snapshot) {
      (void)c;
      who.insert(v);
    }
    for (VertexId v : who) {
      Plan p;
      p.v = v;
      for (const auto& [mv, mc] : snapshot)
        if (mv == v) p.leaving.push_back(mc);
      for (CommunityId c : p.leaving) marks.erase({v, c});
      bool needs_home = p.leaving.size() >= live[v].size();
      if (needs_home) {
        CommunityId best = -1;
        int best_n = 0;
        for (const auto& [c, sv] : vals[v]) {
          if (sv.first < 1 || rec(v, c)) continue;
          int n = static_cast<int>(member_nbrs(v, c).size());
          if (n > best_n) {
            best = c;
            best_n = n;
          }
        }
        if (best_n > 0) {
          p.rejoin = best;
          p.gateway = member_nbrs(v, best).front();
          p.rejoin_nm = nm(v, best);
        } else {
          p.refound = true;
        }
      }
      for (CommunityId c : p.leaving) {
        const Span* r = rec(v, c);
        if (!r || r->heads()) continue;
        p.decisions.push_back({c, r->parent});
        p.decision_nm.push_back(nm(v, c));
      }
      plans.push_back(std::move(p));
    }

    for (const Plan& p : plans) {  // apply re-attachments
      if (p.rejoin) {
        create_rec(p.v, *p.rejoin, p.gateway, F);
        kids[p.gateway][*p.rejoin].insert(p.v);
        for (VertexId u : g.neighbors(p.v)) nbrc[u][p.v].insert(*p.rejoin);
      } else if (p.refound) {
        create_rec(p.v, p.v, -1, F);
        heads[p.v] = {1, 0.0};
        for (VertexId u : g.neighbors(p.v)) nbrc[u][p.v].insert(p.v);
      }
    }

    long last = F;
    for (const Plan& p : plans) {  // route against the post-F state
      if (p.rejoin || p.refound) {
        if (p.rejoin) {
          Route rt = route(p.gateway, *p.rejoin, F, "Join_Req", mv_ticks);
          last = std::max(last, F + rt.hops);
          if (rt.arrival) sched[*rt.arrival][*p.rejoin].joins.push_back({p.v, p.rejoin_nm});
        }
        msgs["Join_Com"] += g.degree(p.v);
        if (g.degree(p.v) > 0) {
          mv_ticks.insert(F + 1);
          last = std::max(last, F + 1);
        }
      }
      for (size_t i = 0; i < p.decisions.size(); ++i) {
        auto [c, first] = p.decisions[i];
        Route rt = route(first, c, F, "Decision", mv_ticks);
        last = std::max(last, F + rt.hops);
        if (rt.arrival) sched[*rt.arrival][c].leaves.push_back({p.v, p.decision_nm[i]});
      }
    }
    return last;
  }

  // Runs the whole movement group of stages; returns the merge-flood trigger.
  long movement(long t0) {
    tombs.clear();
    marks.clear();

    long t1 = flood_all(t0, mv_ticks);  // decide trigger

    std::map<VertexId, Intent> movers;
    for (VertexId v : verts) {
      if (heads_any(v)) continue;
      if (auto in = decide(v)) {
        in->onm = onm(v);
        movers.emplace(v, std::move(*in));
        msgs["ONM_msg"] += g.degree(v);
        if (g.degree(v) > 0) mv_ticks.insert(t1 + 1);
      }
    }

    long t2 = t1 + 1;  // resolve tick
    // Winners under the neighborhood lock, evaluated on pre-resolve state.
    std::set<VertexId> winners;
    for (const auto& [v, in] : movers) {
      bool win = true;
      for (VertexId w : g.neighbors(v)) {
        auto it = movers.find(w);
        if (it == movers.end()) continue;
        if (!(in.onm < it->second.onm || (in.onm == it->second.onm && v < w))) {
          win = false;
          break;
        }
      }
      if (win && !has_deg1_child(v)) winners.insert(v);
    }

    struct NewRec {
      VertexId v;
      CommunityId c;
      VertexId gw;
      double nm;
    };
    std::vector<NewRec> joins;
    std::map<CommunityId, std::vector<std::pair<VertexId, double>>> pend_joins;
    struct Dec {
      VertexId v;
      double nm;
      double benefit;
      bool leave;
    };
    std::map<CommunityId, std::vector<Dec>> pend_decisions;
    long last = t2 + 1;

    for (VertexId v : verts) {
      if (heads_any(v) || live[v].empty()) continue;
      const Intent* in = nullptr;
      if (auto it = movers.find(v); it != movers.end()) in = &it->second;
      bool win = winners.count(v) > 0;
      if (win) {
        for (const auto& [c, nmv, b] : in->join) {
          (void)b;
          VertexId gw = member_nbrs(v, c).front();
          joins.push_back({v, c, gw, nmv});
          Route rt = route(gw, c, t2, "Join_Req", mv_ticks);
          last = std::max(last, t2 + rt.hops);
          pend_joins[c].push_back({v, nmv});
        }
        if (!in->join.empty()) {
          msgs["Join_Com"] += g.degree(v);  // one batched announcement
          mv_ticks.insert(t2 + 1);
        }
      }
      for (const auto& [c, s] : live[v]) {
        if (s.heads()) continue;
        bool lv = win && in && !in->leave.empty() &&
                  std::find(in->leave.begin(), in->leave.end(), c) != in->leave.end();
        pend_decisions[c].push_back({v, nm(v, c), lv ? in->leave_benefit : 0.0, lv});
        Route rt = route(s.parent, c, t2, "Decision", mv_ticks);
        last = std::max(last, t2 + rt.hops);
      }
    }
    for (const auto& nr : joins) {
      create_rec(nr.v, nr.c, nr.gw, t2);
      kids[nr.gw][nr.c].insert(nr.v);
      for (VertexId u : g.neighbors(nr.v)) nbrc[u][nr.v].insert(nr.c);
    }

    long t3 = std::max(t2 + 1, last) + 1;  // head barrier tick

    std::vector<PendingFlood> q;
    for (auto& [c, sv] : heads) {
      auto& [sz, cm] = sv;
      auto pj = pend_joins[c];
      std::sort(pj.begin(), pj.end());
      for (const auto& [v, nmv] : pj) {
        (void)v;
        double l = static_cast<double>(sz);
        cm = (cm * l + nmv) / (l + 1.0);
        sz += 1;
      }
      auto pd = pend_decisions[c];
      std::vector<Dec> leavers;
      for (const auto& d : pd)
        if (d.leave) leavers.push_back(d);
      std::sort(leavers.begin(), leavers.end(), [](const Dec& a, const Dec& b) {
        if (a.benefit != b.benefit) return a.benefit > b.benefit;
        return a.v < b.v;
      });
      for (const auto& d : leavers) {
        if (sz < 2) continue;
        double l = static_cast<double>(sz);
        double cm_after = (cm * l - d.nm) / (l - 1.0);
        if (cm_after < cm) continue;
        cm = cm_after;
        sz -= 1;
        q.push_back({t3, c, c, d.v, sz, cm});
      }
    }

    // Leave waves, orphan repair, and forced-departure iterations until calm.
    long trigger = t3 + 1;
    std::map<long, std::map<CommunityId, HeadBatch>> sched;
    while (true) {
      long quiet = trigger;
      size_t qi = 0;
      while (qi < q.size() || !sched.empty()) {
        long tq = qi < q.size() ? q[qi].emit : kFar;
        long ts = !sched.empty() ? sched.begin()->first : kFar;
        if (ts <= tq) {
          auto batches = std::move(sched.begin()->second);
          sched.erase(sched.begin());
          for (auto& [c, b] : batches) head_batch(c, ts, std::move(b), q);
        } else {
          quiet = std::max(quiet, leave_wave(q[qi]));
          ++qi;
        }
      }
      q.clear();
      repair();
      if (marks.empty()) return quiet + 1;
      long f = quiet + 1;
      long last_forced = forced(f, sched);
      // Next quiescence window opens at f+1 and spans all forced traffic.
      trigger = std::max(f + 1, last_forced);
    }
  }

  // --- merging ----------------------------------------------------------------

  // Relabels everything vertex x believes about oldc to newc. Values are not
  // touched: a retiring community's figures travel only with its own wave.
  void rename_one(VertexId x, CommunityId oldc, CommunityId newc, long at) {
    vals[x].erase(oldc);
    vals[x].try_emplace(newc, std::pair<long, double>{0, 0.0});
    for (auto& [w2, cs] : nbrc[x])
      if (cs.erase(oldc)) cs.insert(newc);
    if (auto kit = kids[x].find(oldc); kit != kids[x].end()) {
      kids[x][newc].insert(kit->second.begin(), kit->second.end());
      kids[x].erase(kit);
    }
    if (auto tit = tombs[x].find(oldc); tit != tombs[x].end()) {
      tombs[x].emplace(newc, tit->second);
      tombs[x].erase(tit);
    }
    if (auto it = live[x].find(oldc); it != live[x].end()) {
      Span s = it->second;
      live[x].erase(it);
      members[oldc].erase(x);
      if (live[x].count(newc)) {
        s.remove = at;  // member of both sides: collapse to one record
        closed[x][oldc].push_back(s);
      } else {
        live[x][newc] = s;
        members[newc].insert(x);
      }
    }
    if (marks.erase({x, oldc})) marks.insert({x, newc});
  }

  // One merge pass; sets `merges` and returns the next trigger tick.
  long merge_pass(long trig, long& merges) {
    long r1 = flood_all(trig, mg_ticks);

    struct Req {
      VertexId requester{};
      CommunityId target{};
      long hops = 0;
      VertexId gateway{};
    };
    std::map<CommunityId, std::vector<Req>> reqs;
    std::map<VertexId, CommunityId> intent;
    long last = r1 + 1;
    for (const auto& [c, sv] : heads) {
      VertexId h = c;
      const auto& [own_sz, own_cm] = sv;
      // The head stands in for its community: it asks to merge into the
      // adjacent community whose mean its own as-if score would raise the
      // most, but only when its neighborhood is at least as dense there as
      // its own community's mean and the target is no smaller.
      std::optional<Req> best;
      double best_b = 0.0;
      for (const auto& [c2, val] : vals[h]) {
        if (val.first < 1 || rec(h, c2)) continue;
        auto mn = member_nbrs(h, c2);
        if (mn.empty()) continue;
        double nm2 = nm(h, c2);
        double b = benefit_include(val.second, val.first, nm2);
        if (b <= 0.0 || nm2 < own_cm || own_sz > val.first) continue;
        if (!best || b > best_b || (b == best_b && c2 < best->target)) {
          best = Req{h, c2, 0, mn.front()};
          best_b = b;
        }
      }
      if (!best && !absorbed.count(h)) {
        // A community that is strictly the smallest in its neighborhood and
        // never won a merge of its own is vestigial: it retires into the
        // adjacent community with the most member neighbors (ties: lowest id).
        std::optional<Req> fb;
        size_t fb_links = 0;
        bool blocked = false;
        for (const auto& [c2, val] : vals[h]) {
          if (val.first < 1 || rec(h, c2)) continue;
          auto mn = member_nbrs(h, c2);
          if (mn.empty()) continue;
          if (val.first <= own_sz) {
            blocked = true;
            break;
          }
          if (mn.size() > fb_links) {
            fb_links = mn.size();
            fb = Req{h, c2, 0, mn.front()};
          }
        }
        if (!blocked) best = fb;
      }
      if (!best) continue;
      intent[h] = best->target;  // held even if the request never arrives
      Route rt = route(best->gateway, best->target, r1, "Merge_Req", mg_ticks);
      last = std::max(last, r1 + rt.hops);
      if (rt.arrival) {
        best->hops = rt.hops;
        reqs[best->target].push_back(*best);
      }
    }

    long r2 = std::max(r1 + 1, last) + 1;  // resolve tick
    struct Conf {
      VertexId requester{};
      CommunityId target{};
      long hops = 0;
      long t_size = 0;
      double t_cm = 0.0;
      VertexId gateway{};
    };
    std::vector<Conf> confs;
    last = r2 + 1;
    for (auto& [tc, rl] : reqs) {
      std::sort(rl.begin(), rl.end(),
                [](const Req& a, const Req& b) { return a.requester < b.requester; });
      if (auto it = intent.find(tc); it != intent.end()) {
        // Mutual request: the lower-id head yields, abandoning its own
        // request. While an intent stands, requests from others are ignored.
        VertexId other = it->second;
        bool mutual = std::any_of(rl.begin(), rl.end(), [&](const Req& r) {
          return r.requester == other;
        });
        if (mutual && tc < other) intent.erase(it);
      }
      if (intent.count(tc)) continue;
      // Every requester gets a Confirm quoting the community as it stands,
      // then the absorbed side (whose figures arrived with the pass-opening
      // flood; a requesting head's community carries its id) is folded in so
      // a later confirm quotes the grown community.
      auto& stored = heads.at(tc);
      for (const auto& r : rl) {
        for (long h2 = 1; h2 <= r.hops; ++h2) mg_ticks.insert(r2 + h2);
        msgs["Confirm"] += r.hops;
        last = std::max(last, r2 + r.hops);
        confs.push_back({r.requester, tc, r.hops, stored.first, stored.second,
                         r.gateway});
        auto vt = vals[tc].find(r.requester);
        if (vt != vals[tc].end() && vt->second.first >= 1) {
          double l_r = static_cast<double>(vt->second.first);
          double l_t = static_cast<double>(stored.first);
          stored.second = (vt->second.second * l_r + stored.second * l_t) / (l_r + l_t);
          stored.first += vt->second.first;
          vals[tc][tc] = stored;
        }
        absorbed.insert(tc);
      }
    }

    long r3 = std::max(r2 + 1, last) + 1;  // execute tick
    merges = static_cast<long>(confs.size());
    last = r3 + 1;

    // Expand every wave before applying any rename: forwarding is decided by
    // who held the retiring community when the wave hit, and several
    // communities may retire into the same target in one pass.
    struct Delivery {
      long at = 0;
      CommunityId oldc{}, newc{};
      long size = 0;
      double cm = 0.0;
      VertexId origin{};
      bool holder = false;  // held oldc when the wave hit: takes the values
    };
    std::map<VertexId, std::vector<Delivery>> arrivals;
    for (const auto& cf : confs) {
      CommunityId oldc = cf.requester, newc = cf.target;
      auto [l_rs, cm_r] = heads.at(oldc);
      double l_r = static_cast<double>(l_rs);
      double l_t = static_cast<double>(cf.t_size);
      double merged_cm = (cm_r * l_r + cf.t_cm * l_t) / (l_r + l_t);
      long merged_size = l_rs + cf.t_size;

      live[cf.requester][oldc].parent = cf.gateway;
      auto fwd = [&, oldc](VertexId w, long at) { return holds(w, oldc, at); };
      Wave wv = wave(cf.requester, r3, fwd, "Update_Com", mg_ticks);
      last = std::max(last, wv.last);
      for (const auto& [w, at] : wv.receipt)
        arrivals[w].push_back(
            {at, oldc, newc, merged_size, merged_cm, cf.requester, holds(w, oldc, at)});
      heads.erase(oldc);
    }

    // Per vertex, per receipt tick: renames land first (ascending old id),
    // then members of the retiring sides take the winning payload per
    // surviving community (largest size, then lowest origin). Bystanders only
    // relabel beliefs, so absorbing requesters never dilutes the survivor.
    for (auto& [x, dl] : arrivals) {
      std::stable_sort(dl.begin(), dl.end(),
                       [](const Delivery& a, const Delivery& b) { return a.at < b.at; });
      size_t i = 0;
      while (i < dl.size()) {
        size_t j = i;
        while (j < dl.size() && dl[j].at == dl[i].at) ++j;
        std::map<CommunityId, CommunityId> ren;
        for (size_t k = i; k < j; ++k) ren.emplace(dl[k].oldc, dl[k].newc);
        for (const auto& [oldc, newc] : ren) rename_one(x, oldc, newc, dl[i].at);
        std::map<CommunityId, const Delivery*> win;
        for (size_t k = i; k < j; ++k) {
          if (!dl[k].holder) continue;
          auto [it, fresh] = win.try_emplace(dl[k].newc, &dl[k]);
          if (!fresh && (dl[k].size > it->second->size ||
                         (dl[k].size == it->second->size &&
                          dl[k].origin < it->second->origin)))
            it->second = &dl[k];
        }
        for (const auto& [c2, d] : win) vals[x][c2] = {d->size, d->cm};
        i = j;
      }
    }

    return std::max(r3 + 1, last) + 1;
  }

  // --- whole run ---------------------------------------------------------------

  Outcome run() {
    long trig = phase1();
    for (int sweep = 0; sweep <= extra; ++sweep) {
      trig = movement(trig);
      long merges = 0;
      do {
        trig = merge_pass(trig, merges);
      } while (merges > 0);
    }

    Outcome o;
    for (VertexId v : verts) {
      for (const auto& [c, s] : live[v]) {
        o.assignment.communities[c].insert(v);
        o.assignment.membership[v].insert(c);
        if (s.heads()) {
          o.head[c] = v;
          o.stored_size[c] = heads.at(c).first;
          o.stored_cm[c] = heads.at(c).second;
        }
      }
      if (live[v].size() >= 2) o.overlapped_nodes.insert(v);
      // Overlap descriptors are assembled from each node's own beliefs, which
      // can lag reality for stale holders; the simulator reports the same way.
      for (const auto& [c, s] : live[v]) {
        (void)s;
        std::set<VertexId> ids;
        if (live[v].size() >= 2) ids.insert(v);
        for (const auto& [w, cs] : nbrc[v])
          if (cs.count(c) && cs.size() >= 2) ids.insert(w);
        if (!ids.empty()) o.overlapped_members[c].insert(ids.begin(), ids.end());
      }
    }
    o.rounds.phase1 = static_cast<long>(p1_ticks.size());
    o.rounds.phase1_selection = selection;
    o.rounds.movement = static_cast<long>(mv_ticks.size());
    o.rounds.merging = static_cast<long>(mg_ticks.size());
    o.messages = msgs;
    return o;
  }
};

}  // namespace

Outcome sequential_replay(const Graph& g, int extra_sweeps) {
  Replay r(g, extra_sweeps);
  return r.run();
}

CommunityAssignment exhaustive_partition_baseline(const Graph& g, double* best_score) {
  auto vs = g.vertices();
  if (vs.size() > 10)
    throw DomainError("exhaustive partition baseline is limited to 10 vertices");
  if (vs.empty()) {
    if (best_score) *best_score = 0.0;
    return {};
  }
  size_t n = vs.size();
  std::vector<int> block(n, 0), best_block;
  double best = -std::numeric_limits<double>::infinity();

  std::function<void(size_t, int)> rec = [&](size_t k, int nblocks) {
    if (k == n) {
      std::map<CommunityId, std::set<VertexId>> comms;
      for (size_t i = 0; i < n; ++i) comms[block[i]].insert(vs[i]);
      auto asg = CommunityAssignment::from_communities(comms);
      double score = overall_modularity(g, asg);
      if (score > best) {
        best = score;
        best_block = block;
      }
      return;
    }
    for (int b = 0; b <= nblocks; ++b) {
      block[k] = b;
      rec(k + 1, std::max(nblocks, b + 1));
    }
  };
  rec(0, 0);

  std::map<CommunityId, std::set<VertexId>> comms;
  for (size_t i = 0; i < n; ++i) comms[best_block[i]].insert(vs[i]);
  if (best_score) *best_score = best;
  return CommunityAssignment::from_communities(comms);
}

}  // namespace docd
