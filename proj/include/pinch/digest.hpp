#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>

#include "pinch/matcore.hpp"

namespace pinch {

/// Incremental FNV-1a (64 bit) over raw bytes; used to fingerprint inputs in reports.
class Digest {
public:
  Digest& bytes(const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < len; ++k) {
      h_ ^= b[k];
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Digest& add(double v) {
    if (v == 0.0)
      v = 0.0; // fold -0.0
    return bytes(&v, sizeof v);
  }
  Digest& add(std::uint64_t v) { return bytes(&v, sizeof v); }
  Digest& add(std::string_view s) { return bytes(s.data(), s.size()); }
  Digest& add(const GenMat& x) {
    add(static_cast<std::uint64_t>(x.rows()));
    add(static_cast<std::uint64_t>(x.cols()));
    for (double v : x.data())
      add(v);
    return *this;
  }
  Digest& add(const ShapeOperatorSet& ops) {
    for (const auto& a : ops.ops())
      add(a.mat());
    return *this;
  }

  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace pinch
