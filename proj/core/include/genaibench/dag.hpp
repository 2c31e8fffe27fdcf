#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "genaibench/config.hpp"

namespace genaibench {

enum class NodeKind { setup, exec, cleanup };

std::string_view to_string(NodeKind kind);

struct DagNode {
  std::string id;
  NodeKind kind = NodeKind::exec;
  // Workflow node ids this node serves. Exec nodes serve exactly one; a
  // shared-server setup/cleanup serves every sharer, in declaration order.
  std::vector<std::string> instances;
  std::optional<std::string> server;
  bool background = false;

  const std::string& app_instance() const { return instances.front(); }
  bool operator==(const DagNode&) const = default;
};

using Edge = std::pair<std::string, std::string>;

/// Immutable execution graph. Node order is declaration order and is the
/// tie-break for every ordered query.
class Dag {
 public:
  Dag() = default;
  /// Throws PreconditionError on duplicate ids or edges naming unknown nodes.
  Dag(std::vector<DagNode> nodes, std::vector<Edge> edges);

  const std::vector<DagNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }

  std::optional<std::size_t> index_of(const std::string& id) const;
  const DagNode& node(std::size_t i) const { return nodes_[i]; }
  const DagNode& node(const std::string& id) const;
  const std::vector<std::size_t>& preds(std::size_t i) const { return preds_[i]; }
  const std::vector<std::size_t>& succs(std::size_t i) const { return succs_[i]; }

  std::vector<std::string> roots() const;

  static std::string setup_id(const std::string& instance) { return "setup/" + instance; }
  static std::string exec_id(const std::string& instance) { return "exec/" + instance; }
  static std::string cleanup_id(const std::string& instance) { return "cleanup/" + instance; }
  static std::string shared_setup_id(const std::string& server) { return "setup/server:" + server; }
  static std::string shared_cleanup_id(const std::string& server) { return "cleanup/server:" + server; }

 private:
  std::vector<DagNode> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
};

/// setup -> exec -> cleanup per workflow node, exec -> exec per depend_on;
/// instances sharing a server share one setup and one cleanup node.
Dag build_dag(const BenchmarkSpec& spec);

/// Throws CycleError (with one witnessing cycle) or OrderingError (naming the
/// exec node lacking a setup ancestor or a cleanup descendant).
void validate_dag(const Dag& dag);

/// Nodes not in `completed` whose predecessors are all in `completed`, in
/// declaration order. Throws PreconditionError unless `completed` is
/// downward-closed.
std::vector<std::string> ready_set(const Dag& dag, const std::set<std::string>& completed);

/// Graphviz DOT rendering.
std::string to_dot(const Dag& dag);

}  // namespace genaibench
