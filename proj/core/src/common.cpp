#include "rugwatch/common.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

namespace rugwatch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSignature: return "UnknownSignature";
    case ErrorCode::MalformedData: return "MalformedData";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::OrderingViolation: return "OrderingViolation";
    case ErrorCode::RpcUnavailable: return "RpcUnavailable";
    case ErrorCode::RangeTooLarge: return "RangeTooLarge";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::InsufficientLiquidity: return "InsufficientLiquidity";
    case ErrorCode::OrientationUnknown: return "OrientationUnknown";
    case ErrorCode::LedgerInconsistency: return "LedgerInconsistency";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::SpanTooShort: return "SpanTooShort";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::TooFewTokens: return "TooFewTokens";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";

}  // namespace

std::optional<Address> Address::try_parse(std::string_view text) {
  if (text.size() != 42 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    return std::nullopt;
  }
  Bytes bytes{};
  for (std::size_t i = 0; i < 20; ++i) {
    const int hi = hex_value(text[2 + 2 * i]);
    const int lo = hex_value(text[3 + 2 * i]);
    if (hi < 0 || lo < 0) return std::nullopt;
    bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return Address{bytes};
}

Address Address::parse(std::string_view text) {
  auto parsed = try_parse(text);
  if (!parsed) {
    throw Error(ErrorCode::MalformedData, "invalid address '" + std::string(text) + "'");
  }
  return *parsed;
}

Address Address::from_word(std::string_view hex64) {
  if (hex64.size() != 64) {
    throw Error(ErrorCode::MalformedData, "address word must be 64 hex chars");
  }
  for (std::size_t i = 0; i < 24; ++i) {
    if (hex64[i] != '0') {
      throw Error(ErrorCode::MalformedData, "address word has non-zero high bytes");
    }
  }
  return parse("0x" + std::string(hex64.substr(24)));
}

bool Address::is_zero() const {
  for (auto b : bytes_) {
    if (b != 0) return false;
  }
  return true;
}

std::string Address::to_string() const {
  std::string out = "0x";
  out.reserve(42);
  for (auto b : bytes_) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

std::size_t AddressHash::operator()(const Address& a) const noexcept {
  std::uint64_t h = 0;
  std::memcpy(&h, a.bytes().data() + 12, sizeof(h));
  return static_cast<std::size_t>(mix_seed(h, 0x9e37));
}

namespace {

// cpp_int reads a leading 0 as an octal prefix.
BigInt parse_decimal_digits(std::string_view digits) {
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  if (digits.empty()) return 0;
  return BigInt{std::string(digits)};
}

}  // namespace

Amount parse_amount(std::string_view decimal) {
  if (decimal.empty() || decimal.size() > 100) {
    throw Error(ErrorCode::MalformedData, "amount '" + std::string(decimal) + "' is not a uint256");
  }
  for (char c : decimal) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::MalformedData,
                  "amount '" + std::string(decimal) + "' is not a non-negative decimal");
    }
  }
  const BigInt wide = parse_decimal_digits(decimal);
  if (wide > BigInt(std::numeric_limits<Amount>::max())) {
    throw Error(ErrorCode::MalformedData, "amount '" + std::string(decimal) + "' overflows uint256");
  }
  return Amount(wide);
}

Amount parse_amount_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  std::size_t first = 0;
  while (first < hex.size() && hex[first] == '0') ++first;
  hex.remove_prefix(first);
  if (hex.empty()) return Amount(0);
  if (hex.size() > 64) {
    throw Error(ErrorCode::MalformedData, "hex amount overflows uint256");
  }
  for (char c : hex) {
    if (hex_value(c) < 0) {
      throw Error(ErrorCode::MalformedData, "invalid hex digit in amount");
    }
  }
  return Amount("0x" + std::string(hex));
}

std::string to_decimal(const Amount& amount) { return amount.str(); }

std::string to_word(const Amount& amount) {
  std::string out(64, '0');
  Amount v = amount;
  for (std::size_t i = 0; i < 64 && v != 0; ++i) {
    const auto nibble = static_cast<unsigned>(v & 0xf);
    out[63 - i] = kHexDigits[nibble];
    v >>= 4;
  }
  return out;
}

Rational parse_decimal_rational(std::string_view text) {
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  auto digits_only = [](std::string_view s) {
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  if ((whole.empty() && frac.empty()) || !digits_only(whole) || !digits_only(frac)) {
    throw Error(ErrorCode::InvalidParams, "'" + std::string(text) + "' is not a decimal literal");
  }
  const BigInt num = parse_decimal_digits(std::string(whole) + std::string(frac));
  return Rational(num, pow10(static_cast<unsigned>(frac.size())));
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

double to_double(const Amount& a) { return a.convert_to<double>(); }

BigInt pow10(unsigned n) {
  BigInt out = 1;
  for (unsigned i = 0; i < n; ++i) out *= 10;
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rugwatch
