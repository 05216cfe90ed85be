#include "docd/engine.hpp"
#include "docd/graph.hpp"
#include "docd/metrics.hpp"
#include "docd/oracle.hpp"
#include "docd/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::ordered_json;

struct GraphArgs {
  std::string path;
  std::string format = "edgelist";
  bool relabel = false;
};

void add_graph_options(CLI::App* cmd, GraphArgs& args) {
  cmd->add_option("--graph", args.path, "edge list file")->required();
  cmd->add_option("--format", args.format, "input format")
      ->check(CLI::IsMember({"edgelist"}))
      ->capture_default_str();
  cmd->add_flag("--relabel", args.relabel,
                "map arbitrary labels to dense ids 0..n-1");
}

docd::Graph load_graph(const GraphArgs& args) {
  docd::LoadOptions opts;
  opts.relabel = args.relabel;
  return docd::load_edge_list_file(args.path, opts);
}

// --- run ------------------------------------------------------------------

struct RunArgs {
  GraphArgs graph;
  std::string out = "-";
  std::string dot;
  bool trace = false;
  int extra_sweeps = 1;
  long max_rounds = 0;
  bool parallel = false;
  bool seedless = false;
};

int cmd_run(const RunArgs& a) {
  docd::Graph g;
  try {
    g = load_graph(a.graph);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!g.connected())
    std::cerr << "warning: graph is disconnected; each component is detected "
                 "independently\n";

  docd::EngineConfig cfg;
  cfg.extra_sweeps = a.extra_sweeps;
  cfg.max_rounds = a.max_rounds;
  cfg.parallel = a.parallel;
  if (a.trace) cfg.trace = &std::cerr;

  docd::RunResult run;
  try {
    run = docd::run_protocol(g, cfg);
  } catch (const docd::DivergenceError& e) {
    std::string snap_path =
        (a.out == "-" ? a.graph.path : a.out) + ".divergence.txt";
    std::ofstream snap(snap_path);
    snap << e.snapshot();
    std::cerr << "error: " << e.what() << "\nsnapshot: " << snap_path << "\n";
    return 3;
  }

  ordered_json doc = docd::build_report(g, docd::outcome_from_run(run));
  std::string text = doc.dump(2);
  if (a.out == "-") {
    std::cout << text << "\n";
  } else {
    std::ofstream f(a.out);
    if (!f) {
      std::cerr << "error: cannot write " << a.out << "\n";
      return 2;
    }
    f << text << "\n";
  }
  if (!a.dot.empty()) {
    std::ofstream f(a.dot);
    if (!f) {
      std::cerr << "error: cannot write " << a.dot << "\n";
      return 2;
    }
    docd::write_dot(g, docd::outcome_from_run(run), f);
  }
  return 0;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  GraphArgs graph;
  std::string expect;
  int extra_sweeps = 1;
  bool parallel = false;
};

struct Expectation {
  double value = 0.0;
  double tol = 0.0;
};

std::optional<Expectation> read_expect(const ordered_json& doc,
                                       const char* key) {
  if (!doc.contains(key)) return std::nullopt;
  const auto& e = doc.at(key);
  return Expectation{e.at("value").get<double>(), e.at("tol").get<double>()};
}

int cmd_compare(const CompareArgs& a) {
  docd::Graph g;
  ordered_json expect;
  try {
    g = load_graph(a.graph);
    std::ifstream f(a.expect);
    if (!f) throw docd::DomainError("cannot open " + a.expect);
    f >> expect;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  docd::EngineConfig cfg;
  cfg.extra_sweeps = a.extra_sweeps;
  cfg.parallel = a.parallel;

  docd::Outcome engine;
  docd::Outcome replay;
  try {
    engine = docd::outcome_from_run(docd::run_protocol(g, cfg));
    replay = docd::sequential_replay(g, a.extra_sweeps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  double actual_c = static_cast<double>(engine.assignment.communities.size());
  double actual_cm = 0.0;
  for (const auto& [c, members] : engine.assignment.communities) {
    (void)members;
    actual_cm += docd::community_modularity(g, engine.assignment, c);
  }
  if (!engine.assignment.communities.empty())
    actual_cm /= static_cast<double>(engine.assignment.communities.size());
  double actual_ov = static_cast<double>(engine.overlapped_nodes.size());

  std::vector<std::string> failed;
  std::cout << std::left << std::setw(14) << "field" << std::setw(12)
            << "actual" << std::setw(12) << "expected" << std::setw(12)
            << "tolerance" << "verdict\n";
  auto row = [&](const char* name, double actual,
                 const std::optional<Expectation>& e) {
    std::ostringstream av;
    av << std::setprecision(6) << actual;
    std::cout << std::left << std::setw(14) << name << std::setw(12)
              << av.str();
    if (!e) {
      std::cout << std::setw(12) << "-" << std::setw(12) << "-" << "skipped\n";
      return;
    }
    bool ok = std::abs(actual - e->value) <= e->tol;
    std::cout << std::setw(12) << e->value << std::setw(12) << e->tol
              << (ok ? "ok" : "FAIL") << "\n";
    if (!ok) failed.push_back(name);
  };
  row("communities", actual_c, read_expect(expect, "communities"));
  row("modularity", actual_cm, read_expect(expect, "modularity"));
  row("overlapped", actual_ov, read_expect(expect, "overlapped"));

  bool equal = engine == replay;
  std::cout << std::left << std::setw(14) << "engine==replay" << std::setw(12)
            << "-" << std::setw(12) << "-" << std::setw(12) << "-"
            << (equal ? "ok" : "FAIL") << "\n";
  if (!equal) failed.push_back("engine==replay");

  if (!failed.empty()) {
    std::cerr << "mismatch:";
    for (const auto& f : failed) std::cerr << " " << f;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

// --- metrics ----------------------------------------------------------------

struct MetricsArgs {
  GraphArgs graph;
  std::string assignment;
};

int cmd_metrics(const MetricsArgs& a) {
  docd::Graph g;
  docd::CommunityAssignment asg;
  try {
    g = load_graph(a.graph);
    std::ifstream f(a.assignment);
    if (!f) throw docd::DomainError("cannot open " + a.assignment);
    ordered_json doc;
    f >> doc;
    std::map<docd::CommunityId, std::set<docd::VertexId>> comms;
    for (const auto& [key, members] : doc.items()) {
      docd::CommunityId c = std::stoi(key);
      if (!members.is_array())
        throw docd::DomainError("community " + key + ": members must be an array");
      for (const auto& v : members)
        comms[c].insert(v.get<docd::VertexId>());
      comms[c];  // keep explicitly-listed empty communities visible
    }
    asg = docd::CommunityAssignment::from_communities(comms);
    asg.validate_against(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  ordered_json doc;
  doc["vertices"] = ordered_json::object();
  for (docd::VertexId v : g.vertices()) {
    ordered_json entry;
    entry["cc"] = docd::cluster_coefficient(g, v);
    entry["nm"] = ordered_json::object();
    auto it = asg.membership.find(v);
    bool member = it != asg.membership.end() && !it->second.empty();
    if (member)
      for (docd::CommunityId c : it->second)
        entry["nm"][std::to_string(c)] = docd::node_modularity(g, v, asg, c);
    entry["onm"] = member ? docd::overlapped_node_modularity(g, v, asg) : 0.0;
    doc["vertices"][std::to_string(v)] = std::move(entry);
  }
  doc["communities"] = ordered_json::object();
  double total = 0.0;
  for (const auto& [c, members] : asg.communities) {
    (void)members;
    double score = docd::community_modularity(g, asg, c);
    doc["communities"][std::to_string(c)] = score;
    total += score;
  }
  doc["overall"] = asg.communities.empty()
                       ? 0.0
                       : total / static_cast<double>(asg.communities.size());
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"overlapped community detection over synchronous message passing"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "detect communities, emit a JSON report");
  add_graph_options(run, run_args.graph);
  run->add_option("--out", run_args.out, "report path ('-' for stdout)")
      ->capture_default_str();
  run->add_option("--dot", run_args.dot, "also write a DOT rendering");
  run->add_flag("--trace", run_args.trace, "log every delivered message to stderr");
  run->add_option("--extra-sweeps", run_args.extra_sweeps,
                  "extra movement+merging sweeps after convergence")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run->add_option("--max-rounds", run_args.max_rounds,
                  "divergence cutoff (0: 50*(diameter+1))")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run->add_flag("--parallel", run_args.parallel,
                "fan state transitions out over hardware threads");
  run->add_flag("--seedless", run_args.seedless,
                "no-op; the protocol is deterministic and takes no seed");

  CompareArgs cmp_args;
  CLI::App* cmp = app.add_subcommand(
      "compare", "check a run against expected values and the sequential replay");
  add_graph_options(cmp, cmp_args.graph);
  cmp->add_option("--expect", cmp_args.expect,
                  "JSON with {communities,modularity,overlapped}:{value,tol}")
      ->required();
  cmp->add_option("--extra-sweeps", cmp_args.extra_sweeps,
                  "extra movement+merging sweeps after convergence")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmp->add_flag("--parallel", cmp_args.parallel,
                "fan state transitions out over hardware threads");

  MetricsArgs met_args;
  CLI::App* met = app.add_subcommand(
      "metrics", "score a fixed community assignment");
  add_graph_options(met, met_args.graph);
  met->add_option("--assignment", met_args.assignment,
                  "JSON object: community id -> member array")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(run_args);
  if (cmp->parsed()) return cmd_compare(cmp_args);
  return cmd_metrics(met_args);
}
