#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"

namespace rugwatch::evdecode {

enum class EventKind { PairCreated, Sync, Mint, Burn, Transfer };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// keccak256 of the canonical event signature (log topic0).
namespace topics {
inline constexpr std::string_view kPairCreated =
    "0x0d3648bd0f6ba80134a33ba9275ac585d9d315f0ad8355cddefde31afa28d0e9";
inline constexpr std::string_view kSync =
    "0x1c411e9a96e071241c2f21f7726b17ae89e3cab4c78be50e062b03a9fffbbad1";
inline constexpr std::string_view kMint =
    "0x4c209b5fc8ad50758f13e2e1088ba56a560dff690a1c6fef26394f4c03821c4f";
inline constexpr std::string_view kBurn =
    "0xdccd412f0b1252819cb1fd330b93224ca42612892bb3f4f789976e6d81936496";
inline constexpr std::string_view kTransfer =
    "0xddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef";
}  // namespace topics

struct PairCreated {
  Address token0;
  Address token1;
  Address pair;
  bool operator==(const PairCreated&) const = default;
};

struct Sync {
  Amount reserve0;
  Amount reserve1;
  bool operator==(const Sync&) const = default;
};

struct Mint {
  Address sender;
  Amount amount0;
  Amount amount1;
  bool operator==(const Mint&) const = default;
};

struct Burn {
  Address sender;
  Amount amount0;
  Amount amount1;
  Address to;
  bool operator==(const Burn&) const = default;
};

struct Transfer {
  Address from;
  Address to;
  Amount amount;
  bool operator==(const Transfer&) const = default;
};

// Alternative order matches EventKind.
using EventArgs = std::variant<PairCreated, Sync, Mint, Burn, Transfer>;

struct EventRecord {
  BlockNumber block = 0;
  std::int64_t log_index = 0;
  Address emitter;
  EventArgs args;
  /// Unix seconds of the containing block, when the source provides it.
  std::optional<std::int64_t> timestamp;

  EventKind kind() const { return static_cast<EventKind>(args.index()); }

  template <class T>
  const T* as() const { return std::get_if<T>(&args); }

  bool operator==(const EventRecord&) const = default;
};

/// Strict (block, log_index) order.
inline bool stream_less(const EventRecord& a, const EventRecord& b) {
  return a.block != b.block ? a.block < b.block : a.log_index < b.log_index;
}

/// Decodes one JSON-RPC log object (address, topics, data, blockNumber,
/// logIndex; optional blockTimestamp).
/// Throws UnknownSignature for foreign topic0, MalformedData otherwise.
EventRecord decode_log(const nlohmann::json& raw_log);

/// Inverse of decode_log; produces the JSON-RPC log shape.
nlohmann::json encode_log(const EventRecord& event);

/// One canonical fixture line (no trailing newline).
std::string format_fixture_line(const EventRecord& event);
EventRecord parse_fixture_line(std::string_view line, std::size_t line_number);

/// Sorts by (block, log_index); rejects duplicates with OrderingViolation.
void canonicalize(std::vector<EventRecord>& events);

std::vector<EventRecord> read_fixture(std::istream& in);
std::vector<EventRecord> read_fixture(const std::filesystem::path& path);
void write_fixture(std::ostream& out, std::span<const EventRecord> events);
void write_fixture(const std::filesystem::path& path, std::span<const EventRecord> events);

/// Per-token metadata sidecar (one JSON object per line).
struct TokenMeta {
  Address token;
  int decimals = 18;
  std::string symbol;
  BlockNumber creation_block = 0;
  bool mintable = false;
  bool pausable = false;
  bool locked = false;
  bool yield_flag = false;
  bool lp_burned = false;

  bool operator==(const TokenMeta&) const = default;
};

struct MetaLoad {
  std::vector<TokenMeta> tokens;
  /// Tokens whose line lacked `decimals`; they are never eligible for labeling.
  std::vector<Address> missing_decimals;
};

MetaLoad read_meta(const std::filesystem::path& path);
std::string format_meta_line(const TokenMeta& meta);
void write_meta(const std::filesystem::path& path, std::span<const TokenMeta> metas);

struct RpcEndpoint {
  std::string url;
  BlockNumber page_blocks = 2000;
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{30};
};

/// eth_getLogs over [from_block, to_block] for one contract. Pages by
/// `page_blocks`, halving the window on "too many results" responses, and
/// retries transport failures with exponential backoff.
std::vector<EventRecord> fetch_range(const RpcEndpoint& rpc, const Address& contract,
                                     BlockNumber from_block, BlockNumber to_block);

/// Events within [from_block, to_block] emitted by any of `contracts`
/// (all contracts when the list is empty).
std::vector<EventRecord> filter_range(std::span<const EventRecord> events,
                                      std::span<const Address> contracts,
                                      BlockNumber from_block, BlockNumber to_block);

}  // namespace rugwatch::evdecode
