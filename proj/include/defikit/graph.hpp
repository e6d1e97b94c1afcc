#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "defikit/diagnostics.hpp"
#include "defikit/seeds.hpp"
#include "defikit/trace.hpp"

namespace defikit {

using NodeId = std::uint32_t;

struct NodeMeta {
  std::string protocol;  // "" when unlabeled
  std::string category;
};

// Aggregated interaction network at CA or protocol granularity. Nodes are
// labels (addresses or protocol names); edges carry the aggregated
// transaction count for one ordered pair. Self-loops are permitted.
class WeightedDiGraph {
 public:
  NodeId intern(std::string_view label) {
    auto it = index_.find(std::string(label));
    if (it != index_.end()) return it->second;
    NodeId id = static_cast<NodeId>(labels_.size());
    labels_.emplace_back(label);
    meta_.emplace_back();
    index_.emplace(labels_.back(), id);
    return id;
  }

  std::optional<NodeId> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void add_edge(NodeId src, NodeId dst, std::uint64_t weight = 1) {
    std::uint64_t key = (std::uint64_t(src) << 32) | dst;
    auto [it, inserted] = edges_.emplace(key, weight);
    if (!inserted)
      it->second += weight;
    else if (src == dst)
      ++self_loops_;
    total_weight_ += weight;
  }

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edges_.size(); }  // distinct (src, dst), loops included
  std::size_t self_loop_count() const { return self_loops_; }
  std::uint64_t total_weight() const { return total_weight_; }

  const std::string& label(NodeId id) const { return labels_[id]; }
  NodeMeta& meta(NodeId id) { return meta_[id]; }
  const NodeMeta& meta(NodeId id) const { return meta_[id]; }

  std::uint64_t weight(NodeId src, NodeId dst) const {
    auto it = edges_.find((std::uint64_t(src) << 32) | dst);
    return it == edges_.end() ? 0 : it->second;
  }

  template <class Fn>
  void for_each_edge(Fn&& fn) const {
    for (const auto& [key, w] : edges_)
      fn(static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu), w);
  }

  // Sorted by (src label, dst label); dump order.
  std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> sorted_edges() const {
    std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> out;
    out.reserve(edges_.size());
    for_each_edge([&](NodeId s, NodeId d, std::uint64_t w) { out.push_back({s, d, w}); });
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
      return std::tie(labels_[std::get<0>(a)], labels_[std::get<1>(a)]) <
             std::tie(labels_[std::get<0>(b)], labels_[std::get<1>(b)]);
    });
    return out;
  }

  std::vector<NodeId> sorted_nodes() const {
    std::vector<NodeId> out(labels_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<NodeId>(i);
    std::sort(out.begin(), out.end(), [&](NodeId a, NodeId b) { return labels_[a] < labels_[b]; });
    return out;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<NodeMeta> meta_;
  std::unordered_map<std::string, NodeId> index_;
  std::unordered_map<std::uint64_t, std::uint64_t> edges_;
  std::uint64_t total_weight_ = 0;
  std::size_t self_loops_ = 0;
};

struct GraphSummary {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t self_loop_count = 0;
  double average_degree = 0.0;  // edge_count / node_count, distinct directed edges
  double density = 0.0;         // edge_count / (n * (n - 1))
};

inline GraphSummary graph_summary(const WeightedDiGraph& g, Diagnostics* diags = nullptr) {
  GraphSummary s;
  s.node_count = g.node_count();
  s.edge_count = g.edge_count();
  s.self_loop_count = g.self_loop_count();
  if (s.node_count > 0) s.average_degree = double(s.edge_count) / double(s.node_count);
  if (s.node_count >= 2)
    s.density = double(s.edge_count) / (double(s.node_count) * double(s.node_count - 1));
  else if (diags)
    diags->add("graph_summary", 0, "fewer than 2 nodes, density reported as 0");
  return s;
}

struct NetworkOptions {
  bool include_failed = false;  // count edges inside reverted subtrees
};

// DeFi CA network: one edge per ordered pair of contract addresses, weighted
// by the number of trace edges between them across all protocol traces.
// EOA->CA root edges have a non-contract source and drop out naturally;
// repeated pairs within one tree contribute their multiplicity.
inline WeightedDiGraph build_ca_network(std::span<const TraceTree> trees,
                                        const ContractRegistry& registry,
                                        NetworkOptions options = {}) {
  WeightedDiGraph g;
  auto contract_label = [&](const TraceTree::Vertex& v) -> const std::string* {
    if (v.address.empty()) return nullptr;
    auto a = parse_address(v.address);
    if (!a || !registry.is_contract(*a)) return nullptr;
    return &v.address;
  };
  for (const TraceTree& tree : trees) {
    for (const TraceTree::Edge& e : tree.edges) {
      if (!options.include_failed && e.in_failed_subtree) continue;
      const std::string* src = contract_label(tree.vertices[e.parent]);
      if (!src) continue;
      const std::string* dst = contract_label(tree.vertices[e.child]);
      if (!dst) continue;
      g.add_edge(g.intern(*src), g.intern(*dst));
    }
  }
  return g;
}

// Fills node metadata from the extended seed set (address-labeled nodes).
inline void annotate_nodes(WeightedDiGraph& g, const ExtendedSeedSet& ext) {
  for (NodeId id = 0; id < g.node_count(); ++id) {
    auto a = parse_address(g.label(id));
    if (!a) continue;
    if (const SeedEntry* e = ext->find(*a)) {
      g.meta(id).protocol = e->protocol;
      g.meta(id).category = std::string(to_string(e->category));
    }
  }
}

// DeFi Protocol network: every labeled CA node merges into its protocol
// node; unlabeled nodes persist; parallel edges sum; merged intra-protocol
// interactions become self-loops.
inline WeightedDiGraph build_protocol_network(const WeightedDiGraph& ca_graph,
                                              const ExtendedSeedSet& ext) {
  WeightedDiGraph g;
  std::vector<std::string> mapped(ca_graph.node_count());
  std::vector<const SeedEntry*> entry(ca_graph.node_count(), nullptr);
  for (NodeId id = 0; id < ca_graph.node_count(); ++id) {
    const std::string& label = ca_graph.label(id);
    auto a = parse_address(label);
    const SeedEntry* e = a ? ext.find(*a) : nullptr;
    mapped[id] = e ? e->protocol : label;
    entry[id] = e;
  }
  for (auto [src, dst, w] : ca_graph.sorted_edges()) {
    NodeId s = g.intern(mapped[src]);
    NodeId d = g.intern(mapped[dst]);
    if (entry[src]) {
      g.meta(s).protocol = entry[src]->protocol;
      g.meta(s).category = std::string(to_string(entry[src]->category));
    }
    if (entry[dst]) {
      g.meta(d).protocol = entry[dst]->protocol;
      g.meta(d).category = std::string(to_string(entry[dst]->category));
    }
    g.add_edge(s, d, w);
  }
  return g;
}

}  // namespace defikit
