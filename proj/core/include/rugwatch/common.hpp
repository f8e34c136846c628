#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace rugwatch {

namespace mp = boost::multiprecision;

/// Token base units. Arithmetic that leaves [0, 2^256) throws instead of wrapping.
using Amount = mp::number<
    mp::cpp_int_backend<256, 256, mp::unsigned_magnitude, mp::checked, void>>;

/// Unbounded integer for intermediate products (e.g. x*y in the swap math).
using BigInt = mp::cpp_int;

using Rational = mp::cpp_rational;

using BlockNumber = std::int64_t;

enum class ErrorCode {
  UnknownSignature,
  MalformedData,
  SchemaViolation,
  OrderingViolation,
  RpcUnavailable,
  RangeTooLarge,
  Precondition,
  InsufficientLiquidity,
  OrientationUnknown,
  LedgerInconsistency,
  EmptyHistory,
  EmptyDistribution,
  SpanTooShort,
  NoData,
  DegenerateData,
  WidthMismatch,
  TooFewTokens,
  InvalidParams,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// 20-byte account identifier. Parsing is case-insensitive; rendering is
/// always lowercase 0x-prefixed hex.
class Address {
 public:
  using Bytes = std::array<std::uint8_t, 20>;

  constexpr Address() = default;
  explicit constexpr Address(const Bytes& bytes) : bytes_(bytes) {}

  /// Throws MalformedData unless `text` is "0x" followed by exactly 40 hex chars.
  static Address parse(std::string_view text);
  static std::optional<Address> try_parse(std::string_view text);

  /// Right-aligned 20 bytes of a 32-byte ABI word given as 64 hex chars.
  static Address from_word(std::string_view hex64);

  static constexpr Address zero() { return Address{}; }

  bool is_zero() const;
  const Bytes& bytes() const { return bytes_; }
  std::string to_string() const;

  auto operator<=>(const Address&) const = default;

 private:
  Bytes bytes_{};
};

struct AddressHash {
  std::size_t operator()(const Address& a) const noexcept;
};

/// Strict decimal parse: digits only, no sign, no whitespace.
Amount parse_amount(std::string_view decimal);
/// Parses 0x-prefixed or bare hex; empty payload ("0x") is zero.
Amount parse_amount_hex(std::string_view hex);
std::string to_decimal(const Amount& amount);
/// 64 lowercase hex chars, zero padded (one ABI word).
std::string to_word(const Amount& amount);

/// Exact parse of a plain decimal literal such as "0.9" or "1" into p/q.
Rational parse_decimal_rational(std::string_view text);

double to_double(const Rational& r);
double to_double(const Amount& a);

/// 10^n as an unbounded integer.
BigInt pow10(unsigned n);

/// Shortest round-trip text for a double ("nan" never emitted: callers
/// render missing values themselves).
std::string format_double(double value);

/// Deterministic 64-bit mixer used to derive sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rugwatch

template <>
struct std::hash<rugwatch::Address> {
  std::size_t operator()(const rugwatch::Address& a) const noexcept {
    return rugwatch::AddressHash{}(a);
  }
};
