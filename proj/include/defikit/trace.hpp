#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "defikit/diagnostics.hpp"
#include "defikit/hex.hpp"
#include "defikit/text.hpp"

namespace defikit {

enum class TraceType : std::uint8_t { call, create, selfdestruct };
enum class TraceStatus : std::uint8_t { success, failed };
enum class TraceFormat : std::uint8_t { dsv, jsonl };

inline std::string_view to_string(TraceType t) {
  switch (t) {
    case TraceType::call: return "call";
    case TraceType::create: return "create";
    default: return "selfdestruct";
  }
}

inline std::optional<TraceType> parse_trace_type(std::string_view s) {
  if (s == "call") return TraceType::call;
  if (s == "create") return TraceType::create;
  if (s == "selfdestruct" || s == "suicide") return TraceType::selfdestruct;
  return std::nullopt;
}

inline std::optional<TraceStatus> parse_trace_status(std::string_view s) {
  if (s == "success" || s == "1") return TraceStatus::success;
  if (s == "failed" || s == "0") return TraceStatus::failed;
  return std::nullopt;
}

// One external or internal transaction row from exported chain data.
struct TraceRecord {
  TxHash tx_hash{};
  std::uint64_t block_number = 0;
  Address from_address{};
  std::optional<Address> to_address;          // absent only for create rows
  std::vector<std::uint32_t> trace_address;   // empty for the external transaction
  TraceType trace_type = TraceType::call;
  std::optional<MethodId> method_id;          // first 4 bytes of call input
  std::string value = "0";                    // wei, decimal text (can exceed 64 bits)
  TraceStatus status = TraceStatus::success;

  bool is_external() const { return trace_address.empty(); }
};

inline bool trace_address_less(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline std::string format_trace_address(std::span<const std::uint32_t> ta) {
  std::string out;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(ta[i]);
  }
  return out;
}

inline std::optional<std::vector<std::uint32_t>> parse_trace_address(std::string_view s) {
  std::vector<std::uint32_t> out;
  if (s.empty()) return out;
  for (auto part : split_view(s, '.')) {
    auto v = parse_unsigned<std::uint32_t>(part);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

namespace detail {

// Columns: tx_hash, block_number, from_address, to_address, trace_address,
// trace_type, method_id, value, status.
inline std::optional<TraceRecord> parse_trace_fields(const std::vector<std::string_view>& f,
                                                     std::string& error) {
  if (f.size() != 9) {
    error = "expected 9 columns, got " + std::to_string(f.size());
    return std::nullopt;
  }
  TraceRecord r;
  auto tx = parse_tx_hash(trim(f[0]));
  if (!tx) {
    error = "invalid tx_hash";
    return std::nullopt;
  }
  r.tx_hash = *tx;
  auto block = parse_unsigned<std::uint64_t>(trim(f[1]));
  if (!block) {
    error = "invalid block_number";
    return std::nullopt;
  }
  r.block_number = *block;
  auto from = parse_address(trim(f[2]));
  if (!from) {
    error = "invalid from_address";
    return std::nullopt;
  }
  r.from_address = *from;
  auto ta = parse_trace_address(trim(f[4]));
  if (!ta) {
    error = "invalid trace_address";
    return std::nullopt;
  }
  r.trace_address = std::move(*ta);
  auto type = parse_trace_type(trim(f[5]));
  if (!type) {
    error = "unknown trace_type '" + std::string(trim(f[5])) + "'";
    return std::nullopt;
  }
  r.trace_type = *type;
  auto to_field = trim(f[3]);
  if (to_field.empty()) {
    if (r.trace_type != TraceType::create) {
      error = "missing to_address";
      return std::nullopt;
    }
  } else {
    auto to = parse_address(to_field);
    if (!to) {
      error = "invalid to_address";
      return std::nullopt;
    }
    r.to_address = *to;
  }
  auto method_field = trim(f[6]);
  if (!method_field.empty()) {
    auto m = parse_method_id(method_field);
    if (!m) {
      error = "invalid method_id";
      return std::nullopt;
    }
    r.method_id = *m;
  }
  auto value = parse_decimal_string(trim(f[7]));
  if (!value) {
    error = "invalid value";
    return std::nullopt;
  }
  r.value = std::move(*value);
  auto status = parse_trace_status(trim(f[8]));
  if (!status) {
    error = "invalid status '" + std::string(trim(f[8])) + "'";
    return std::nullopt;
  }
  r.status = *status;
  return r;
}

inline std::optional<TraceRecord> parse_trace_json(std::string_view line, std::string& error) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    error = "invalid JSON record";
    return std::nullopt;
  }
  auto text = [&](const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return "";
    const auto& v = j[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    return "";
  };
  std::string ta;
  if (j.contains("trace_address") && j["trace_address"].is_array()) {
    for (const auto& e : j["trace_address"]) {
      if (!ta.empty()) ta += '.';
      if (e.is_number_unsigned())
        ta += std::to_string(e.get<std::uint64_t>());
      else {
        error = "invalid trace_address element";
        return std::nullopt;
      }
    }
  } else {
    ta = text("trace_address");
  }
  std::string tx = text("tx_hash"), block = text("block_number"), from = text("from_address"),
              to = text("to_address"), type = text("trace_type"), method = text("method_id"),
              value = text("value"), status = text("status");
  if (value.empty()) value = "0";
  std::vector<std::string_view> fields{tx, block, from, to, ta, type, method, value, status};
  return parse_trace_fields(fields, error);
}

}  // namespace detail

struct ParseStats {
  std::size_t rows_total = 0;
  std::size_t rows_ok = 0;
  std::size_t rows_rejected = 0;
};

// Streams records in file order. Malformed rows and duplicate
// (tx_hash, trace_address) pairs are rejected with line diagnostics.
template <class Fn>
ParseStats parse_traces(std::istream& in, TraceFormat format, Fn&& on_record, Diagnostics& diags,
                        std::string_view source = "traces", char delimiter = ',') {
  ParseStats stats;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (line_no == 1 && format == TraceFormat::dsv && view.starts_with("tx_hash")) continue;
    ++stats.rows_total;
    std::string error;
    std::optional<TraceRecord> record =
        format == TraceFormat::dsv ? detail::parse_trace_fields(split_view(view, delimiter), error)
                                   : detail::parse_trace_json(view, error);
    if (!record) {
      ++stats.rows_rejected;
      diags.add(std::string(source), line_no, "row rejected: " + error);
      continue;
    }
    std::string key = to_hex(record->tx_hash) + "/" + format_trace_address(record->trace_address);
    if (!seen.insert(key).second) {
      ++stats.rows_rejected;
      diags.add(std::string(source), line_no, "row rejected: duplicate (tx_hash, trace_address) " + key);
      continue;
    }
    ++stats.rows_ok;
    on_record(std::move(*record));
  }
  return stats;
}

inline std::vector<TraceRecord> read_traces(std::istream& in, TraceFormat format, Diagnostics& diags,
                                            std::string_view source = "traces", char delimiter = ',') {
  std::vector<TraceRecord> out;
  parse_traces(in, format, [&](TraceRecord&& r) { out.push_back(std::move(r)); }, diags, source,
               delimiter);
  return out;
}

inline std::string format_trace_record(const TraceRecord& r, char delimiter = ',') {
  std::string out;
  out += to_hex(r.tx_hash);
  out += delimiter;
  out += std::to_string(r.block_number);
  out += delimiter;
  out += to_hex(r.from_address);
  out += delimiter;
  if (r.to_address) out += to_hex(*r.to_address);
  out += delimiter;
  out += format_trace_address(r.trace_address);
  out += delimiter;
  out += to_string(r.trace_type);
  out += delimiter;
  if (r.method_id) out += to_hex(*r.method_id, false);
  out += delimiter;
  out += r.value;
  out += delimiter;
  out += r.status == TraceStatus::success ? "success" : "failed";
  return out;
}

// Canonical dump; re-parsing it reproduces identical records.
inline void write_trace_records(std::ostream& os, std::span<const TraceRecord> records,
                                char delimiter = ',') {
  for (const auto& r : records) os << format_trace_record(r, delimiter) << "\n";
}

// ---------------------------------------------------------------------------
// Contract registry

struct ContractEntry {
  bool is_contract = false;
  std::optional<Address> creator;
  std::optional<std::uint64_t> created_block;
  bool is_erc20 = false;
};

using AddressSet = std::unordered_set<Address, FixedBytesHash>;

class ContractRegistry {
 public:
  using Map = std::unordered_map<Address, ContractEntry, FixedBytesHash>;

  bool is_contract(const Address& a) const {
    auto it = entries_.find(a);
    return it != entries_.end() && it->second.is_contract;
  }

  bool is_erc20(const Address& a) const {
    auto it = entries_.find(a);
    return it != entries_.end() && it->second.is_erc20;
  }

  std::optional<Address> creator_of(const Address& a) const {
    auto it = entries_.find(a);
    if (it == entries_.end()) return std::nullopt;
    return it->second.creator;
  }

  const ContractEntry* find(const Address& a) const {
    auto it = entries_.find(a);
    return it == entries_.end() ? nullptr : &it->second;
  }

  Map& entries() { return entries_; }
  const Map& entries() const { return entries_; }
  std::size_t contract_count() const { return entries_.size(); }

  void add_contract(const Address& address, std::optional<Address> creator,
                    std::optional<std::uint64_t> block) {
    ContractEntry& e = entries_[address];
    e.is_contract = true;
    e.creator = creator;
    e.created_block = block;
  }

  void set_erc20(const Address& address) {
    ContractEntry& e = entries_[address];
    e.is_contract = true;  // is_erc20 implies is_contract
    e.is_erc20 = true;
  }

  // creator address -> created addresses, both sides sorted (deterministic
  // traversal order for the seed extension).
  std::vector<std::pair<Address, std::vector<Address>>> creation_children() const {
    std::unordered_map<Address, std::vector<Address>, FixedBytesHash> children;
    for (const auto& [addr, entry] : entries_)
      if (entry.creator) children[*entry.creator].push_back(addr);
    std::vector<std::pair<Address, std::vector<Address>>> out(children.begin(), children.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, v] : out) std::sort(v.begin(), v.end());
    return out;
  }

 private:
  Map entries_;
};

// Builds the registry from creation rows. Non-create rows are skipped with a
// summary warning; failed creates never contribute creator links. An address
// created twice keeps the first creation by (block_number, trace_address).
inline ContractRegistry build_contract_registry(std::span<const TraceRecord> creation_records,
                                                const AddressSet* erc20_flags, Diagnostics& diags) {
  ContractRegistry registry;
  struct Provenance {
    std::uint64_t block;
    std::vector<std::uint32_t> trace_address;
  };
  std::unordered_map<Address, Provenance, FixedBytesHash> provenance;
  std::size_t non_create = 0, failed = 0, unassigned = 0;
  for (const auto& r : creation_records) {
    if (r.trace_type != TraceType::create) {
      ++non_create;
      continue;
    }
    if (r.status == TraceStatus::failed) {
      ++failed;
      continue;
    }
    if (!r.to_address) {
      ++unassigned;
      continue;
    }
    const Address& created = *r.to_address;
    auto it = provenance.find(created);
    if (it != provenance.end()) {
      bool keep_existing = it->second.block < r.block_number ||
                           (it->second.block == r.block_number &&
                            !trace_address_less(r.trace_address, it->second.trace_address));
      std::optional<Address> existing_creator = registry.creator_of(created);
      if (!existing_creator || *existing_creator != r.from_address)
        diags.add("creations", 0,
                  "address " + to_hex(created) + " created twice with different creators: kept " +
                      (existing_creator ? to_hex(keep_existing ? *existing_creator : r.from_address)
                                        : std::string("?")) +
                      ", dropped the other");
      if (keep_existing) continue;
    }
    provenance[created] = {r.block_number, r.trace_address};
    registry.add_contract(created, r.from_address, r.block_number);
  }
  if (non_create)
    diags.add("creations", 0, std::to_string(non_create) + " non-create rows ignored");
  if (failed)
    diags.add("creations", 0, std::to_string(failed) + " failed creates ignored");
  if (unassigned)
    diags.add("creations", 0, std::to_string(unassigned) + " creates without assigned address ignored");
  if (erc20_flags)
    for (const Address& a : *erc20_flags) registry.set_erc20(a);
  return registry;
}

// One lowercase hex address per line.
inline AddressSet load_address_set(std::istream& in, Diagnostics& diags,
                                   std::string_view source = "addresses") {
  AddressSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty()) continue;
    auto a = parse_address(v);
    if (!a) {
      diags.add(std::string(source), line_no, "invalid address");
      continue;
    }
    out.insert(*a);
  }
  return out;
}

// The six mandatory ERC20 function selectors.
inline constexpr std::array<std::uint32_t, 6> kErc20Selectors = {
    0x18160dddu,  // totalSupply()
    0x70a08231u,  // balanceOf(address)
    0xa9059cbbu,  // transfer(address,uint256)
    0x23b872ddu,  // transferFrom(address,address,uint256)
    0x095ea7b3u,  // approve(address,uint256)
    0xdd62ed3eu,  // allowance(address,address)
};

inline MethodId method_id_from_u32(std::uint32_t selector) {
  MethodId m;
  m.bytes = {static_cast<std::uint8_t>(selector >> 24), static_cast<std::uint8_t>(selector >> 16),
             static_cast<std::uint8_t>(selector >> 8), static_cast<std::uint8_t>(selector)};
  return m;
}

inline bool is_erc20_selector(const MethodId& m) {
  std::uint32_t v = (std::uint32_t(m.bytes[0]) << 24) | (std::uint32_t(m.bytes[1]) << 16) |
                    (std::uint32_t(m.bytes[2]) << 8) | std::uint32_t(m.bytes[3]);
  return std::find(kErc20Selectors.begin(), kErc20Selectors.end(), v) != kErc20Selectors.end();
}

// Optional scan mode when no precomputed flag file exists: an address is
// flagged ERC20 iff its deployed bytecode contains all six mandatory
// selectors. Input rows: "address,bytecode_hex".
inline std::size_t mark_erc20_from_bytecode(ContractRegistry& registry, std::istream& in,
                                            Diagnostics& diags, std::string_view source = "bytecode") {
  std::string line;
  std::size_t line_no = 0, flagged = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty()) continue;
    auto fields = split_view(v, ',');
    if (fields.size() != 2) {
      diags.add(std::string(source), line_no, "expected 2 columns");
      continue;
    }
    auto addr = parse_address(trim(fields[0]));
    if (!addr) {
      diags.add(std::string(source), line_no, "invalid address");
      continue;
    }
    std::string_view code = trim(fields[1]);
    if (code.starts_with("0x") || code.starts_with("0X")) code.remove_prefix(2);
    std::string bytes;
    bytes.reserve(code.size() / 2);
    bool ok = code.size() % 2 == 0;
    for (std::size_t i = 0; ok && i + 1 < code.size(); i += 2) {
      int hi = hex_value(code[i]), lo = hex_value(code[i + 1]);
      if (hi < 0 || lo < 0)
        ok = false;
      else
        bytes += static_cast<char>((hi << 4) | lo);
    }
    if (!ok) {
      diags.add(std::string(source), line_no, "invalid bytecode hex");
      continue;
    }
    bool all = true;
    for (std::uint32_t sel : kErc20Selectors) {
      char needle[4] = {static_cast<char>(sel >> 24), static_cast<char>(sel >> 16),
                        static_cast<char>(sel >> 8), static_cast<char>(sel)};
      if (bytes.find(std::string_view(needle, 4)) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) {
      registry.set_erc20(*addr);
      ++flagged;
    }
  }
  return flagged;
}

// ---------------------------------------------------------------------------
// Trace trees

enum class VertexKind : std::uint8_t { account, block_hash_leaf };

// Per-transaction execution tree. The same address may label multiple
// vertices; edge t-ranks are the lexicographic order of trace_address paths.
struct TraceTree {
  struct Vertex {
    std::string label;    // 0x-hex address, generalized name, or block hash hex
    std::string address;  // originating 0x-hex address; "" when none
    VertexKind kind = VertexKind::account;
  };
  struct Edge {
    std::uint32_t parent = 0;
    std::uint32_t child = 0;
    std::uint32_t t = 0;
    std::optional<MethodId> method;
    TraceType type = TraceType::call;
    bool failed = false;             // this trace reverted
    bool in_failed_subtree = false;  // this trace or an ancestor reverted
  };

  TxHash tx_hash{};
  std::vector<Vertex> vertices;  // vertex 0 is the root EOA
  std::vector<Edge> edges;       // sorted by t; edge i creates vertex i+1

  const Edge& root_edge() const { return edges.front(); }
  const std::string& root_target_address() const { return vertices[edges.front().child].address; }
};

// Assembles one tree from the records of a single transaction. Returns
// nullopt (with a diagnostic) when the group violates the trace-address
// invariants: missing external row, duplicate path, or orphan path.
inline std::optional<TraceTree> assemble_trace_tree(std::span<const TraceRecord> group,
                                                    Diagnostics& diags) {
  if (group.empty()) return std::nullopt;
  std::string tx_hex = to_hex(group.front().tx_hash);

  std::vector<std::size_t> order(group.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trace_address_less(group[a].trace_address, group[b].trace_address);
  });

  if (!group[order.front()].trace_address.empty()) {
    diags.add("assemble", 0, tx_hex + ": rejected, no external transaction row");
    return std::nullopt;
  }

  TraceTree tree;
  tree.tx_hash = group.front().tx_hash;
  const TraceRecord& external = group[order.front()];
  tree.vertices.push_back({to_hex(external.from_address), to_hex(external.from_address),
                           VertexKind::account});

  std::map<std::vector<std::uint32_t>, std::uint32_t> vertex_at;  // trace_address -> vertex
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const TraceRecord& r = group[order[rank]];
    if (r.tx_hash != tree.tx_hash) {
      diags.add("assemble", 0, tx_hex + ": rejected, mixed tx_hash in group");
      return std::nullopt;
    }
    std::uint32_t parent_vertex = 0;
    bool parent_failed = false;
    if (!r.trace_address.empty()) {
      std::vector<std::uint32_t> parent_path(r.trace_address.begin(), r.trace_address.end() - 1);
      auto it = vertex_at.find(parent_path);
      if (it == vertex_at.end()) {
        diags.add("assemble", 0,
                  tx_hex + ": rejected, orphan trace_address " +
                      format_trace_address(r.trace_address));
        return std::nullopt;
      }
      parent_vertex = it->second;
      parent_failed = tree.edges[parent_vertex - 1].in_failed_subtree;
    }
    auto [it, inserted] = vertex_at.emplace(r.trace_address, 0);
    if (!inserted) {
      diags.add("assemble", 0,
                tx_hex + ": rejected, duplicate trace_address " +
                    format_trace_address(r.trace_address));
      return std::nullopt;
    }

    TraceTree::Vertex v;
    if (r.to_address) {
      v.label = to_hex(*r.to_address);
      v.address = v.label;
    } else {
      v.label = "none";  // create that never got an address
    }
    tree.vertices.push_back(std::move(v));
    std::uint32_t child_vertex = static_cast<std::uint32_t>(tree.vertices.size() - 1);
    it->second = child_vertex;

    TraceTree::Edge e;
    e.parent = parent_vertex;
    e.child = child_vertex;
    e.t = static_cast<std::uint32_t>(rank);
    e.method = r.method_id;
    e.type = r.trace_type;
    e.failed = r.status == TraceStatus::failed;
    e.in_failed_subtree = e.failed || parent_failed;
    tree.edges.push_back(std::move(e));
  }
  return tree;
}

// Groups records by tx_hash in first-seen order and feeds each group to fn.
// Distinct transactions are independent; this order makes serial runs
// deterministic for a given input file.
template <class Fn>
void for_each_transaction(std::vector<TraceRecord> records, Fn&& fn) {
  std::unordered_map<TxHash, std::vector<TraceRecord>, FixedBytesHash> groups;
  std::vector<TxHash> order;
  for (auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.tx_hash);
    if (inserted) order.push_back(r.tx_hash);
    it->second.push_back(std::move(r));
  }
  records.clear();
  for (const TxHash& h : order) fn(std::move(groups[h]));
}

inline std::vector<TraceTree> assemble_trace_trees(std::vector<TraceRecord> records,
                                                   Diagnostics& diags) {
  std::vector<TraceTree> trees;
  for_each_transaction(std::move(records), [&](std::vector<TraceRecord> group) {
    if (auto tree = assemble_trace_tree(group, diags)) trees.push_back(std::move(*tree));
  });
  return trees;
}

}  // namespace defikit
