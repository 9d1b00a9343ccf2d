#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace spi {

/// SHA-256 digest identifying a pattern set.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  bool is_zero() const;
  friend bool operator==(const Digest&, const Digest&) = default;
};

Digest sha256(std::span<const std::uint8_t> data);

}  // namespace spi
