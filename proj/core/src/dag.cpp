#include "genaibench/dag.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "genaibench/error.hpp"

namespace genaibench {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::setup: return "setup";
    case NodeKind::exec: return "exec";
    case NodeKind::cleanup: return "cleanup";
  }
  return "?";
}

Dag::Dag(std::vector<DagNode> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].instances.empty()) nodes_[i].instances.push_back(nodes_[i].id);
    if (!index_.emplace(nodes_[i].id, i).second) {
      throw PreconditionError("duplicate DAG node id '" + nodes_[i].id + "'");
    }
  }
  preds_.resize(nodes_.size());
  succs_.resize(nodes_.size());
  for (const auto& [from, to] : edges_) {
    auto f = index_of(from);
    auto t = index_of(to);
    if (!f || !t) throw PreconditionError("edge " + from + " -> " + to + " names an unknown node");
    succs_[*f].push_back(*t);
    preds_[*t].push_back(*f);
  }
}

std::optional<std::size_t> Dag::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const DagNode& Dag::node(const std::string& id) const {
  auto i = index_of(id);
  if (!i) throw PreconditionError("unknown DAG node '" + id + "'");
  return nodes_[*i];
}

std::vector<std::string> Dag::roots() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (preds_[i].empty()) out.push_back(nodes_[i].id);
  }
  return out;
}

Dag build_dag(const BenchmarkSpec& spec) {
  // Sharers per server, in declaration order.
  std::map<std::string, std::vector<std::string>> sharers;
  for (const auto& n : spec.workflow) {
    const auto& task = spec.task_of(n);
    if (task.server) sharers[*task.server].push_back(n.node_id);
  }

  std::vector<DagNode> nodes;
  std::vector<Edge> edges;
  for (const auto& n : spec.workflow) {
    const auto& task = spec.task_of(n);
    const std::string exec = Dag::exec_id(n.node_id);
    if (task.server) {
      const auto& group = sharers.at(*task.server);
      const auto setup = Dag::shared_setup_id(*task.server);
      const auto cleanup = Dag::shared_cleanup_id(*task.server);
      if (group.front() == n.node_id) {
        nodes.push_back({setup, NodeKind::setup, group, task.server, false});
      }
      nodes.push_back({exec, NodeKind::exec, {n.node_id}, task.server, n.background});
      if (group.back() == n.node_id) {
        nodes.push_back({cleanup, NodeKind::cleanup, group, task.server, false});
      }
      edges.emplace_back(setup, exec);
      edges.emplace_back(exec, cleanup);
    } else {
      nodes.push_back({Dag::setup_id(n.node_id), NodeKind::setup, {n.node_id}, std::nullopt, false});
      nodes.push_back({exec, NodeKind::exec, {n.node_id}, std::nullopt, n.background});
      nodes.push_back({Dag::cleanup_id(n.node_id), NodeKind::cleanup, {n.node_id}, std::nullopt, false});
      edges.emplace_back(Dag::setup_id(n.node_id), exec);
      edges.emplace_back(exec, Dag::cleanup_id(n.node_id));
    }
  }
  for (const auto& n : spec.workflow) {
    for (const auto& dep : n.depend_on) edges.emplace_back(Dag::exec_id(dep), Dag::exec_id(n.node_id));
  }
  return Dag(std::move(nodes), std::move(edges));
}

namespace {

void check_acyclic(const Dag& dag) {
  enum : char { white, grey, black };
  std::vector<char> colour(dag.size(), white);
  for (std::size_t root = 0; root < dag.size(); ++root) {
    if (colour[root] != white) continue;
    // (node, next successor position)
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    colour[root] = grey;
    while (!stack.empty()) {
      auto& [u, pos] = stack.back();
      const auto& succ = dag.succs(u);
      if (pos == succ.size()) {
        colour[u] = black;
        stack.pop_back();
        continue;
      }
      const std::size_t v = succ[pos++];
      if (colour[v] == grey) {
        std::vector<std::string> cycle;
        auto it = std::find_if(stack.begin(), stack.end(), [&](const auto& f) { return f.first == v; });
        for (; it != stack.end(); ++it) cycle.push_back(dag.node(it->first).id);
        cycle.push_back(dag.node(v).id);
        throw CycleError(std::move(cycle));
      }
      if (colour[v] == white) {
        colour[v] = grey;
        stack.emplace_back(v, 0);
      }
    }
  }
}

std::vector<bool> reach(const Dag& dag, std::size_t start, bool forward) {
  std::vector<bool> seen(dag.size(), false);
  std::vector<std::size_t> todo{start};
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (auto v : forward ? dag.succs(u) : dag.preds(u)) {
      if (!seen[v]) {
        seen[v] = true;
        todo.push_back(v);
      }
    }
  }
  return seen;
}

bool serves(const DagNode& n, const std::string& instance) {
  return std::find(n.instances.begin(), n.instances.end(), instance) != n.instances.end();
}

}  // namespace

void validate_dag(const Dag& dag) {
  check_acyclic(dag);
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& n = dag.node(i);
    if (n.kind != NodeKind::exec) continue;
    const auto ancestors = reach(dag, i, false);
    const auto descendants = reach(dag, i, true);
    bool has_setup = false, has_cleanup = false;
    for (std::size_t j = 0; j < dag.size(); ++j) {
      const auto& m = dag.node(j);
      if (!serves(m, n.app_instance())) continue;
      has_setup |= m.kind == NodeKind::setup && ancestors[j];
      has_cleanup |= m.kind == NodeKind::cleanup && descendants[j];
    }
    if (!has_setup) throw OrderingError("exec node '" + n.id + "' has no setup ancestor");
    if (!has_cleanup) throw OrderingError("exec node '" + n.id + "' has no cleanup descendant");
  }
}

std::vector<std::string> ready_set(const Dag& dag, const std::set<std::string>& completed) {
  std::vector<bool> done(dag.size(), false);
  for (const auto& id : completed) {
    auto i = dag.index_of(id);
    if (!i) throw PreconditionError("completed set names unknown node '" + id + "'");
    done[*i] = true;
  }
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (!done[i]) continue;
    for (auto p : dag.preds(i)) {
      if (!done[p]) {
        throw PreconditionError("completed set is not downward-closed: '" + dag.node(i).id +
                                "' completed before '" + dag.node(p).id + "'");
      }
    }
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (done[i]) continue;
    const auto& ps = dag.preds(i);
    if (std::all_of(ps.begin(), ps.end(), [&](std::size_t p) { return done[p]; })) {
      out.push_back(dag.node(i).id);
    }
  }
  return out;
}

std::string to_dot(const Dag& dag) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q.push_back('\\');
      q.push_back(c);
    }
    return q + "\"";
  };
  std::ostringstream out;
  out << "digraph workflow {\n  rankdir=LR;\n";
  for (const auto& n : dag.nodes()) {
    const char* shape = n.kind == NodeKind::exec ? "box" : "ellipse";
    out << "  " << quote(n.id) << " [shape=" << shape;
    if (n.background) out << ", style=dashed";
    out << "];\n";
  }
  for (const auto& [from, to] : dag.edges()) out << "  " << quote(from) << " -> " << quote(to) << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace genaibench
