#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "fairval/error.hpp"

namespace fairval {

/// A subset of sources as a bitmask; bit i set means source i is a member.
class Coalition {
 public:
  static constexpr int max_sources = 64;

  constexpr Coalition() = default;
  constexpr explicit Coalition(std::uint64_t mask) : mask_(mask) {}

  static constexpr Coalition grand(int n) {
    return Coalition(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }
  static constexpr Coalition single(int i) { return Coalition(std::uint64_t{1} << i); }

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr bool contains(int i) const { return (mask_ >> i) & 1U; }
  constexpr int size() const { return std::popcount(mask_); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr Coalition with(int i) const { return Coalition(mask_ | (std::uint64_t{1} << i)); }
  constexpr Coalition without(int i) const { return Coalition(mask_ & ~(std::uint64_t{1} << i)); }

  std::vector<int> members() const {
    std::vector<int> out;
    for (std::uint64_t m = mask_; m; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  constexpr bool operator==(const Coalition&) const = default;

 private:
  std::uint64_t mask_ = 0;
};

inline void check_source_count(int n, int limit = Coalition::max_sources) {
  if (n < 1) throw ConfigError("at least one source is required");
  if (n > limit)
    throw ConfigError(std::to_string(n) + " sources exceed the limit of " + std::to_string(limit));
}

}  // namespace fairval
