#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace tgnn4i {

/// 64-bit FNV-1a. Used for checksums that must be stable across runs and
/// platforms, which std::hash does not promise.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void add(std::string_view s) { add_bytes(s.data(), s.size()); }
  void add(std::int64_t v) { add_bytes(&v, sizeof v); }
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    add_bytes(&bits, sizeof bits);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.add(s);
  return h.value();
}

}  // namespace tgnn4i
