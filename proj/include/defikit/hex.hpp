#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace defikit {

// Fixed-width byte strings: addresses, transaction hashes, method ids and
// block hashes. Canonical text form is lowercase hex; addresses and tx
// hashes carry a 0x prefix, method ids and block hashes do not.
template <std::size_t N>
struct FixedBytes {
  std::array<std::uint8_t, N> bytes{};

  auto operator<=>(const FixedBytes&) const = default;
};

using Address = FixedBytes<20>;
using TxHash = FixedBytes<32>;
using MethodId = FixedBytes<4>;
using Hash256 = FixedBytes<32>;

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <std::size_t N>
std::string to_hex(const FixedBytes<N>& b, bool with_prefix = true) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * N + 2);
  if (with_prefix) out += "0x";
  for (std::uint8_t byte : b.bytes) {
    out += digits[byte >> 4];
    out += digits[byte & 0xf];
  }
  return out;
}

// Accepts an optional 0x prefix; the digit count must match exactly.
template <std::size_t N>
std::optional<FixedBytes<N>> parse_fixed_hex(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.size() != 2 * N) return std::nullopt;
  FixedBytes<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    int hi = hex_value(s[2 * i]);
    int lo = hex_value(s[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

inline std::optional<Address> parse_address(std::string_view s) { return parse_fixed_hex<20>(s); }
inline std::optional<TxHash> parse_tx_hash(std::string_view s) { return parse_fixed_hex<32>(s); }
inline std::optional<MethodId> parse_method_id(std::string_view s) { return parse_fixed_hex<4>(s); }
inline std::optional<Hash256> parse_hash256(std::string_view s) { return parse_fixed_hex<32>(s); }

struct FixedBytesHash {
  template <std::size_t N>
  std::size_t operator()(const FixedBytes<N>& b) const {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (auto c : b.bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace defikit
