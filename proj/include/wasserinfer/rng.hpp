#pragma once

#include <concepts>
#include <cstdint>
#include <initializer_list>

namespace wasserinfer {

/// splitmix64 finaliser (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of words into one key; order matters.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t key = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) key = mix64(key ^ mix64(w + 0x9e3779b97f4a7c15ULL));
  return key;
}

/// Counter-based uniform stream: the k-th draw is mix64(key + (k+1) * golden),
/// so any draw is addressable without generating its predecessors and streams
/// built from distinct keys never share state.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t at(std::uint64_t k) const noexcept {
    return mix64(key_ + (k + 1) * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform on the open interval (0, 1): (top 53 bits + 1/2) * 2^-53.
  constexpr double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }
  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Anything that hands out uniforms on (0, 1).
template <class S>
concept UniformSource = requires(S s) {
  { s.uniform() } -> std::convertible_to<double>;
};

}  // namespace wasserinfer
