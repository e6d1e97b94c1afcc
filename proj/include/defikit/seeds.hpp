#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "defikit/diagnostics.hpp"
#include "defikit/hex.hpp"
#include "defikit/text.hpp"
#include "defikit/trace.hpp"

namespace defikit {

enum class SeedCategory : std::uint8_t { assets, derivatives, dex, lending };
enum class SeedOrigin : std::uint8_t { seed, extended };

inline std::string_view to_string(SeedCategory c) {
  switch (c) {
    case SeedCategory::assets: return "assets";
    case SeedCategory::derivatives: return "derivatives";
    case SeedCategory::dex: return "dex";
    default: return "lending";
  }
}

inline std::optional<SeedCategory> parse_seed_category(std::string_view s) {
  if (s == "assets") return SeedCategory::assets;
  if (s == "derivatives") return SeedCategory::derivatives;
  if (s == "dex") return SeedCategory::dex;
  if (s == "lending") return SeedCategory::lending;
  return std::nullopt;
}

inline std::string_view to_string(SeedOrigin o) {
  return o == SeedOrigin::seed ? "seed" : "extended";
}

struct SeedEntry {
  Address address{};
  std::string protocol;
  SeedCategory category = SeedCategory::dex;
  std::string label;
  SeedOrigin origin = SeedOrigin::seed;
};

class SeedSet {
 public:
  using Map = std::unordered_map<Address, SeedEntry, FixedBytesHash>;

  bool insert(SeedEntry entry) { return entries_.emplace(entry.address, std::move(entry)).second; }
  const SeedEntry* find(const Address& a) const {
    auto it = entries_.find(a);
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return entries_.size(); }
  const Map& entries() const { return entries_; }

  std::vector<const SeedEntry*> sorted_entries() const {
    std::vector<const SeedEntry*> out;
    out.reserve(entries_.size());
    for (const auto& [_, e] : entries_) out.push_back(&e);
    std::sort(out.begin(), out.end(),
              [](const SeedEntry* a, const SeedEntry* b) { return a->address < b->address; });
    return out;
  }

 private:
  Map entries_;
};

// Seed file: one header row, then "address,protocol,category,label".
// Duplicate addresses with the same protocol collapse to one entry;
// conflicting duplicates are rejected rows (resolution is upstream).
inline SeedSet load_seeds(std::istream& in, Diagnostics& diags, std::string_view source = "seeds",
                          char delimiter = ',') {
  SeedSet seeds;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    auto fields = split_view(view, delimiter);
    if (fields.size() != 4) {
      diags.add(std::string(source), line_no, "row rejected: expected 4 columns");
      continue;
    }
    auto address = parse_address(trim(fields[0]));
    if (!address) {
      diags.add(std::string(source), line_no, "row rejected: invalid address");
      continue;
    }
    auto category = parse_seed_category(trim(fields[2]));
    if (!category) {
      diags.add(std::string(source), line_no,
                "row rejected: unknown category '" + std::string(trim(fields[2])) + "'");
      continue;
    }
    SeedEntry entry{*address, std::string(trim(fields[1])), *category, std::string(trim(fields[3])),
                    SeedOrigin::seed};
    if (const SeedEntry* existing = seeds.find(*address)) {
      if (existing->protocol != entry.protocol)
        diags.add(std::string(source), line_no,
                  "row rejected: address " + to_hex(*address) + " already assigned to '" +
                      existing->protocol + "', conflicting protocol '" + entry.protocol + "'");
      continue;  // same-protocol duplicate collapses silently
    }
    seeds.insert(std::move(entry));
  }
  return seeds;
}

// Seed entries plus every contract reachable from a seed through creation
// links, labeled by its nearest seed ancestor.
class ExtendedSeedSet {
 public:
  using Map = std::unordered_map<Address, SeedEntry, FixedBytesHash>;

  void insert(SeedEntry entry) { entries_[entry.address] = std::move(entry); }
  void erase(const Address& a) { entries_.erase(a); }

  const SeedEntry* find(const Address& a) const {
    auto it = entries_.find(a);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(const Address& a) const { return entries_.count(a) != 0; }
  const std::string* protocol_of(const Address& a) const {
    auto it = entries_.find(a);
    return it == entries_.end() ? nullptr : &it->second.protocol;
  }

  std::size_t size() const { return entries_.size(); }
  const Map& entries() const { return entries_; }

  std::vector<const SeedEntry*> sorted_entries() const {
    std::vector<const SeedEntry*> out;
    out.reserve(entries_.size());
    for (const auto& [_, e] : entries_) out.push_back(&e);
    std::sort(out.begin(), out.end(),
              [](const SeedEntry* a, const SeedEntry* b) { return a->address < b->address; });
    return out;
  }

  std::vector<std::string> protocols() const {
    std::vector<std::string> out;
    for (const auto& [_, e] : entries_) out.push_back(e.protocol);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // (protocol, origin) -> entry count; recomputed, never cached.
  std::map<std::pair<std::string, SeedOrigin>, std::size_t> counts_by_protocol() const {
    std::map<std::pair<std::string, SeedOrigin>, std::size_t> out;
    for (const auto& [_, e] : entries_) ++out[{e.protocol, e.origin}];
    return out;
  }

  std::map<std::pair<SeedCategory, SeedOrigin>, std::size_t> counts_by_category() const {
    std::map<std::pair<SeedCategory, SeedOrigin>, std::size_t> out;
    for (const auto& [_, e] : entries_) ++out[{e.category, e.origin}];
    return out;
  }

 private:
  Map entries_;
};

struct ExtendOptions {
  bool one_hop = false;  // restrict the extension to directly deployed contracts
};

// Transitive closure over creation links. Every reached contract inherits
// (protocol, category, label) from its nearest seed ancestor; creator chains
// are unique (one creator per contract), so assignments are order-free.
// A seed deployed by a seed of another protocol loses its seed status: the
// deployed-contract assignment wins and the colliding entry is replaced.
inline ExtendedSeedSet extend_seeds(const SeedSet& seeds, const ContractRegistry& registry,
                                    Diagnostics& diags, ExtendOptions options = {}) {
  ExtendedSeedSet out;

  // Final assignment per original seed: walk up the creator chain to the
  // nearest strict seed ancestor. Chains are walked with a step limit and a
  // visited set; a cycle would mean corrupt creation data.
  struct Assignment {
    std::string protocol;
    SeedCategory category;
    std::string label;
    SeedOrigin origin;
  };
  std::unordered_map<Address, Assignment, FixedBytesHash> final_seed;

  auto nearest_seed_ancestor = [&](const Address& start) -> const SeedEntry* {
    std::unordered_set<Address, FixedBytesHash> visited;
    std::optional<Address> cur = registry.creator_of(start);
    std::size_t hops = 0;
    while (cur) {
      if (!visited.insert(*cur).second) {
        diags.add("extend_seeds", 0, "cycle in creator links at " + to_hex(*cur));
        return nullptr;
      }
      if (const SeedEntry* s = seeds.find(*cur)) return s;
      if (options.one_hop) return nullptr;
      if (++hops > registry.contract_count() + 1) {
        diags.add("extend_seeds", 0, "creator chain too long at " + to_hex(start));
        return nullptr;
      }
      cur = registry.creator_of(*cur);
    }
    return nullptr;
  };

  // Resolve seeds first (collision rule), in address order for deterministic
  // diagnostics.
  for (const SeedEntry* seed : seeds.sorted_entries()) {
    const SeedEntry* ancestor = nearest_seed_ancestor(seed->address);
    if (ancestor && ancestor->protocol != seed->protocol) {
      diags.add("extend_seeds", 0,
                "seed " + to_hex(seed->address) + " ('" + seed->protocol +
                    "') was deployed by protocol '" + ancestor->protocol +
                    "'; seed entry removed, deployed assignment kept");
      final_seed[seed->address] = {ancestor->protocol, ancestor->category, ancestor->label,
                                   SeedOrigin::extended};
    } else {
      // Same-protocol collisions keep the seed entry silently.
      final_seed[seed->address] = {seed->protocol, seed->category, seed->label, SeedOrigin::seed};
    }
  }

  for (const auto& [address, a] : final_seed)
    out.insert({address, a.protocol, a.category, a.label, a.origin});

  // Downward traversal; each address has one creator, so it is reached at
  // most once. Seeds act as fresh sources with their final assignment.
  std::unordered_map<Address, std::vector<Address>, FixedBytesHash> children;
  for (const auto& [creator, created] : registry.creation_children())
    children.emplace(creator, created);

  std::vector<std::pair<Address, const Assignment*>> stack;
  for (const SeedEntry* seed : seeds.sorted_entries())
    stack.push_back({seed->address, &final_seed.at(seed->address)});
  std::unordered_set<Address, FixedBytesHash> visited;

  while (!stack.empty()) {
    auto [address, assignment] = stack.back();
    stack.pop_back();
    if (!visited.insert(address).second) continue;
    auto it = children.find(address);
    if (it == children.end()) continue;
    for (const Address& child : it->second) {
      if (seeds.find(child)) continue;  // resolved above; traversed as its own source
      out.insert({child, assignment->protocol, assignment->category, assignment->label,
                  SeedOrigin::extended});
      if (!options.one_hop) stack.push_back({child, assignment});
    }
  }
  return out;
}

// A protocol trace is a tree whose root edge targets an extended-seed
// address.
inline bool is_protocol_trace(const TraceTree& tree, const ExtendedSeedSet& ext) {
  if (tree.edges.empty()) return false;
  auto address = parse_address(tree.root_target_address());
  return address && ext.contains(*address);
}

inline std::vector<TraceTree> filter_protocol_traces(std::vector<TraceTree> trees,
                                                     const ExtendedSeedSet& ext) {
  std::vector<TraceTree> out;
  for (auto& t : trees)
    if (is_protocol_trace(t, ext)) out.push_back(std::move(t));
  return out;
}

}  // namespace defikit
