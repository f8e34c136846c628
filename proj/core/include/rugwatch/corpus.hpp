#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"
#include "rugwatch/evdecode.hpp"

namespace rugwatch::corpus {

/// Mainnet WETH, the numeraire every processed pool must be paired with.
inline constexpr std::string_view kMainnetWeth = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2";
inline constexpr std::string_view kMainnetFactory = "0x5c69bee701ef814a2b6a3edd4b1652cb9cc5aa6f";
/// Unicrypt V2 liquidity locker.
inline constexpr std::string_view kDefaultLocker = "0x663a5c229c09b049e36dcc11a9b0d4a8eb9db214";

struct Deployment {
  Address weth = Address::parse(kMainnetWeth);
  Address factory = Address::parse(kMainnetFactory);
  std::vector<Address> lockers{Address::parse(kDefaultLocker)};

  nlohmann::json to_json() const;
  static Deployment from_json(const nlohmann::json& j);
};

/// Everything observed for one token: its metadata (absent when the sidecar
/// has no usable line) and its merged, canonical event stream (factory
/// PairCreated, pair events, token Transfers).
struct TokenInput {
  Address token;
  std::optional<evdecode::TokenMeta> meta;
  std::vector<evdecode::EventRecord> events;
};

/// On-disk corpus:
///   manifest.json       producer config, including the deployment
///   meta.jsonl          TokenMeta sidecar
///   events/<token>.jsonl one fixture per token
///   allowlist.txt       newline-delimited non-malicious addresses (optional)
///   truth.csv           simulator ground truth (optional)
struct CorpusPaths {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path meta() const { return root / "meta.jsonl"; }
  std::filesystem::path events_dir() const { return root / "events"; }
  std::filesystem::path events_for(const Address& token) const {
    return events_dir() / (token.to_string() + ".jsonl");
  }
  std::filesystem::path allowlist() const { return root / "allowlist.txt"; }
  std::filesystem::path truth() const { return root / "truth.csv"; }
};

/// Tokens sorted by address.
std::vector<TokenInput> load_tokens(const CorpusPaths& paths, unsigned threads = 1);

/// Reads the corpus manifest's deployment block, defaulting to mainnet.
Deployment load_deployment(const CorpusPaths& paths);

std::set<Address> read_allowlist(const std::filesystem::path& path);
void write_allowlist(const std::filesystem::path& path, const std::set<Address>& tokens);

nlohmann::ordered_json read_json(const std::filesystem::path& path);
/// Pretty-printed, newline-terminated, stable key order.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value);

/// Minimal CSV reader: comma separated, no quoting (all emitted files are
/// quote-free). Returns rows including the header.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace rugwatch::corpus
