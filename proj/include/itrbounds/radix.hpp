#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace itrb {

// Row-major mixed-radix indexing: the last digit varies fastest.
class Radix {
 public:
  Radix() = default;
  explicit Radix(std::vector<int> bases) : bases_(std::move(bases)) {
    strides_.assign(bases_.size(), 1);
    size_ = 1;
    for (std::size_t i = bases_.size(); i-- > 0;) {
      strides_[i] = size_;
      size_ *= static_cast<std::size_t>(bases_[i]);
    }
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t rank() const noexcept { return bases_.size(); }
  const std::vector<int>& bases() const noexcept { return bases_; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  std::size_t encode(std::span<const int> digits) const {
    std::size_t index = 0;
    for (std::size_t i = 0; i < bases_.size(); ++i) index += strides_[i] * static_cast<std::size_t>(digits[i]);
    return index;
  }

  void decode(std::size_t index, std::span<int> digits) const {
    for (std::size_t i = 0; i < bases_.size(); ++i) {
      digits[i] = static_cast<int>(index / strides_[i]);
      index %= strides_[i];
    }
  }

  std::vector<int> decode(std::size_t index) const {
    std::vector<int> digits(bases_.size());
    decode(index, digits);
    return digits;
  }

  bool contains(std::span<const int> digits) const {
    if (digits.size() != bases_.size()) return false;
    for (std::size_t i = 0; i < bases_.size(); ++i)
      if (digits[i] < 0 || digits[i] >= bases_[i]) return false;
    return true;
  }

 private:
  std::vector<int> bases_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

// Saturating arithmetic for class counts that can overflow (the naive LP blows up fast).
struct SaturatingCount {
  std::uint64_t value = 1;
  bool saturated = false;

  SaturatingCount& operator*=(std::uint64_t factor) {
    if (saturated) return *this;
    if (factor != 0 && value > std::numeric_limits<std::uint64_t>::max() / factor) {
      saturated = true;
      value = std::numeric_limits<std::uint64_t>::max();
    } else {
      value *= factor;
    }
    return *this;
  }

  static SaturatingCount power(std::uint64_t base, std::uint64_t exponent) {
    SaturatingCount out;
    for (std::uint64_t i = 0; i < exponent && !out.saturated; ++i) out *= base;
    return out;
  }

  SaturatingCount& operator*=(const SaturatingCount& other) {
    if (other.saturated) {
      saturated = true;
      value = std::numeric_limits<std::uint64_t>::max();
      return *this;
    }
    return *this *= other.value;
  }
};

}  // namespace itrb
