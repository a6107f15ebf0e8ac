#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace pinchflow {

// FNV-1a over raw bytes; used to fingerprint checker inputs so that any
// reported slack can be reproduced from its sample.
class Fnv1a {
public:
  void add_bytes(const void* data, size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }

  void add(double x) { add_bytes(&x, sizeof x); }
  void add(uint64_t x) { add_bytes(&x, sizeof x); }
  void add(int x) { add(static_cast<uint64_t>(x)); }

  template <typename Iterable>
  void add_range(const Iterable& xs) {
    for (double x : xs) add(x);
  }

  uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[i] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

private:
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace pinchflow
