#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "wakeup/error.hpp"

namespace wakeup {

// Advice is accounted in exact bits, so we pack it ourselves instead of
// serializing whole integers. Bits are appended MSB-first within a value.
class BitString {
 public:
  std::size_t size_bits() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  void push_bit(bool b) {
    if (nbits_ % 8 == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
    ++nbits_;
  }

  void push_bits(std::uint64_t value, int width) {
    for (int j = width - 1; j >= 0; --j) push_bit((value >> j) & 1u);
  }

  // Self-delimiting natural number: 4-bit bit-length L, then the value in
  // L bits. Covers 0..32767, plenty for ports, tags and node counts at the
  // scales this artifact targets.
  void push_nat(std::uint64_t value) {
    const int w = value == 0 ? 0 : std::bit_width(value);
    if (w > 15) throw Error("bit string: value too large for nat encoding");
    push_bits(static_cast<std::uint64_t>(w), 4);
    if (w > 0) push_bits(value, w);
  }

  bool bit(std::size_t i) const {
    return (bytes_[i / 8] >> (7 - i % 8)) & 1u;
  }

  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes_.size() * 2);
    for (std::uint8_t b : bytes_) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xf]);
    }
    return out;
  }

  static BitString from_hex(const std::string& hex, std::size_t nbits) {
    if (hex.size() % 2 != 0 || hex.size() * 4 < nbits ||
        (hex.size() > 0 && (hex.size() - 1) * 4 >= ((nbits + 7) / 8) * 8)) {
      throw Error("bit string: hex length inconsistent with bit length");
    }
    BitString s;
    s.nbits_ = nbits;
    s.bytes_.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
      auto nib = [&](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw Error("bit string: bad hex digit");
      };
      s.bytes_.push_back(static_cast<std::uint8_t>(nib(hex[i]) << 4 | nib(hex[i + 1])));
    }
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.nbits_ == b.nbits_ && a.bytes_ == b.bytes_;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t nbits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const BitString& s) : s_(&s) {}

  std::size_t remaining() const { return s_->size_bits() - pos_; }
  bool at_end() const { return remaining() == 0; }

  bool read_bit() {
    if (at_end()) throw DecodeFault("bit reader: read past end of advice");
    return s_->bit(pos_++);
  }

  std::uint64_t read_bits(int width) {
    std::uint64_t v = 0;
    for (int j = 0; j < width; ++j) v = (v << 1) | (read_bit() ? 1u : 0u);
    return v;
  }

  std::uint64_t read_nat() {
    const int w = static_cast<int>(read_bits(4));
    return w == 0 ? 0 : read_bits(w);
  }

 private:
  const BitString* s_;
  std::size_t pos_ = 0;
};

// Size in bits of push_nat(value), for message-size accounting.
inline int nat_bits(std::uint64_t value) {
  return 4 + (value == 0 ? 0 : std::bit_width(value));
}

}  // namespace wakeup
