#include "rugwatch/evdecode.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace rugwatch::evdecode {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PairCreated: return "PairCreated";
    case EventKind::Sync: return "Sync";
    case EventKind::Mint: return "Mint";
    case EventKind::Burn: return "Burn";
    case EventKind::Transfer: return "Transfer";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto kind : {EventKind::PairCreated, EventKind::Sync, EventKind::Mint, EventKind::Burn,
                    EventKind::Transfer}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::int64_t parse_hex_quantity(const json& value, std::string_view field) {
  if (!value.is_string()) {
    throw Error(ErrorCode::MalformedData, std::string(field) + " must be a hex string");
  }
  const Amount parsed = parse_amount_hex(value.get<std::string>());
  if (parsed > Amount(std::numeric_limits<std::int64_t>::max())) {
    throw Error(ErrorCode::MalformedData, std::string(field) + " out of range");
  }
  return parsed.convert_to<std::int64_t>();
}

std::string to_hex_quantity(std::int64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

/// Splits ABI data into 32-byte words.
std::vector<std::string_view> data_words(std::string_view data, std::size_t expected) {
  if (data.starts_with("0x") || data.starts_with("0X")) data.remove_prefix(2);
  if (data.size() != expected * 64) {
    throw Error(ErrorCode::MalformedData, "log data has " + std::to_string(data.size()) +
                                              " hex chars, expected " +
                                              std::to_string(expected * 64));
  }
  std::vector<std::string_view> words;
  for (std::size_t i = 0; i < expected; ++i) words.push_back(data.substr(64 * i, 64));
  return words;
}

Address topic_address(const json& topics, std::size_t i) {
  std::string_view t = topics.at(i).get_ref<const std::string&>();
  if (t.starts_with("0x") || t.starts_with("0X")) t.remove_prefix(2);
  return Address::from_word(t);
}

Amount word_amount(std::string_view word) { return parse_amount_hex(word); }

}  // namespace

EventRecord decode_log(const json& raw_log) {
  if (!raw_log.is_object()) throw Error(ErrorCode::MalformedData, "log is not an object");
  const auto topics_it = raw_log.find("topics");
  if (topics_it == raw_log.end() || !topics_it->is_array() || topics_it->empty() ||
      !(*topics_it)[0].is_string()) {
    throw Error(ErrorCode::MalformedData, "log has no topic0");
  }
  const json& topics = *topics_it;
  const std::string topic0 = lower(topics[0].get<std::string>());

  EventRecord ev;
  try {
    ev.emitter = Address::parse(raw_log.at("address").get<std::string>());
    ev.block = parse_hex_quantity(raw_log.at("blockNumber"), "blockNumber");
    ev.log_index = parse_hex_quantity(raw_log.at("logIndex"), "logIndex");
    if (auto ts = raw_log.find("blockTimestamp"); ts != raw_log.end() && !ts->is_null()) {
      ev.timestamp = parse_hex_quantity(*ts, "blockTimestamp");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedData, std::string("log envelope: ") + e.what());
  }
  const std::string data = raw_log.value("data", std::string("0x"));

  auto require_topics = [&](std::size_t n) {
    if (topics.size() != n) {
      throw Error(ErrorCode::MalformedData, "expected " + std::to_string(n) + " topics, got " +
                                                std::to_string(topics.size()));
    }
  };

  try {
    if (topic0 == topics::kPairCreated) {
      require_topics(3);
      const auto words = data_words(data, 2);
      ev.args = PairCreated{topic_address(topics, 1), topic_address(topics, 2),
                            Address::from_word(words[0])};
    } else if (topic0 == topics::kSync) {
      require_topics(1);
      const auto words = data_words(data, 2);
      ev.args = Sync{word_amount(words[0]), word_amount(words[1])};
    } else if (topic0 == topics::kMint) {
      require_topics(2);
      const auto words = data_words(data, 2);
      ev.args = Mint{topic_address(topics, 1), word_amount(words[0]), word_amount(words[1])};
    } else if (topic0 == topics::kBurn) {
      require_topics(3);
      const auto words = data_words(data, 2);
      ev.args = Burn{topic_address(topics, 1), word_amount(words[0]), word_amount(words[1]),
                     topic_address(topics, 2)};
    } else if (topic0 == topics::kTransfer) {
      // ERC-721 shares the signature but indexes the token id.
      if (topics.size() == 4) {
        throw Error(ErrorCode::UnknownSignature, "ERC-721 Transfer");
      }
      require_topics(3);
      const auto words = data_words(data, 1);
      ev.args = Transfer{topic_address(topics, 1), topic_address(topics, 2), word_amount(words[0])};
    } else {
      throw Error(ErrorCode::UnknownSignature, "topic0 " + topic0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedData, std::string("log topics: ") + e.what());
  }
  return ev;
}

json encode_log(const EventRecord& event) {
  auto topic = [](const Address& a) { return "0x" + std::string(24, '0') + a.to_string().substr(2); };
  auto word = [](const Amount& a) { return to_word(a); };
  json topics = json::array();
  std::string data = "0x";
  std::visit(
      [&](const auto& args) {
        using T = std::decay_t<decltype(args)>;
        if constexpr (std::is_same_v<T, PairCreated>) {
          topics = {std::string(topics::kPairCreated), topic(args.token0), topic(args.token1)};
          data += std::string(24, '0') + args.pair.to_string().substr(2) + std::string(64, '0');
        } else if constexpr (std::is_same_v<T, Sync>) {
          topics = {std::string(topics::kSync)};
          data += word(args.reserve0) + word(args.reserve1);
        } else if constexpr (std::is_same_v<T, Mint>) {
          topics = {std::string(topics::kMint), topic(args.sender)};
          data += word(args.amount0) + word(args.amount1);
        } else if constexpr (std::is_same_v<T, Burn>) {
          topics = {std::string(topics::kBurn), topic(args.sender), topic(args.to)};
          data += word(args.amount0) + word(args.amount1);
        } else {
          topics = {std::string(topics::kTransfer), topic(args.from), topic(args.to)};
          data += word(args.amount);
        }
      },
      event.args);
  json out = {{"address", event.emitter.to_string()},
              {"topics", topics},
              {"data", data},
              {"blockNumber", to_hex_quantity(event.block)},
              {"logIndex", to_hex_quantity(event.log_index)}};
  if (event.timestamp) out["blockTimestamp"] = to_hex_quantity(*event.timestamp);
  return out;
}

std::string format_fixture_line(const EventRecord& event) {
  ordered_json args = ordered_json::object();
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, PairCreated>) {
          args["token0"] = a.token0.to_string();
          args["token1"] = a.token1.to_string();
          args["pair"] = a.pair.to_string();
        } else if constexpr (std::is_same_v<T, Sync>) {
          args["reserve0"] = to_decimal(a.reserve0);
          args["reserve1"] = to_decimal(a.reserve1);
        } else if constexpr (std::is_same_v<T, Mint>) {
          args["sender"] = a.sender.to_string();
          args["amount0"] = to_decimal(a.amount0);
          args["amount1"] = to_decimal(a.amount1);
        } else if constexpr (std::is_same_v<T, Burn>) {
          args["sender"] = a.sender.to_string();
          args["amount0"] = to_decimal(a.amount0);
          args["amount1"] = to_decimal(a.amount1);
          args["to"] = a.to.to_string();
        } else {
          args["from"] = a.from.to_string();
          args["to"] = a.to.to_string();
          args["amount"] = to_decimal(a.amount);
        }
      },
      event.args);
  ordered_json line = ordered_json::object();
  line["block"] = event.block;
  line["log_index"] = event.log_index;
  line["emitter"] = event.emitter.to_string();
  line["kind"] = std::string(to_string(event.kind()));
  line["args"] = std::move(args);
  if (event.timestamp) line["timestamp"] = *event.timestamp;
  return line.dump();
}

namespace {

[[noreturn]] void schema_error(std::size_t line_number, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_number) + ": " + what);
}

class LineReader {
 public:
  LineReader(const json& obj, std::size_t line_number) : obj_(obj), line_(line_number) {}

  const json& field(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) schema_error(line_, std::string("missing field '") + key + "'");
    return *it;
  }

  std::int64_t non_negative_int(const char* key) const {
    const json& v = field(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      schema_error(line_, std::string("'") + key + "' must be a non-negative integer");
    }
    return v.get<std::int64_t>();
  }

  Address address(const char* key) const {
    const json& v = field(key);
    if (!v.is_string()) schema_error(line_, std::string("'") + key + "' must be an address string");
    auto parsed = Address::try_parse(v.get<std::string>());
    if (!parsed) schema_error(line_, std::string("'") + key + "' is not a 0x-prefixed 40-hex address");
    return *parsed;
  }

  Amount amount(const char* key) const {
    const json& v = field(key);
    if (!v.is_string()) schema_error(line_, std::string("'") + key + "' must be a decimal string");
    try {
      return parse_amount(v.get<std::string>());
    } catch (const Error& e) {
      schema_error(line_, std::string("'") + key + "': " + e.what());
    }
  }

  void exact_keys(std::initializer_list<const char*> keys) const {
    if (obj_.size() != keys.size()) {
      schema_error(line_, "unexpected number of fields in args");
    }
    for (const char* k : keys) field(k);
  }

 private:
  const json& obj_;
  std::size_t line_;
};

}  // namespace

EventRecord parse_fixture_line(std::string_view line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    schema_error(line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) schema_error(line_number, "line is not a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (key != "block" && key != "log_index" && key != "emitter" && key != "kind" &&
        key != "args" && key != "timestamp") {
      schema_error(line_number, "unknown field '" + key + "'");
    }
  }
  const LineReader top(obj, line_number);
  EventRecord ev;
  ev.block = top.non_negative_int("block");
  ev.log_index = top.non_negative_int("log_index");
  ev.emitter = top.address("emitter");
  if (obj.contains("timestamp")) ev.timestamp = top.non_negative_int("timestamp");
  const json& kind_field = top.field("kind");
  if (!kind_field.is_string()) schema_error(line_number, "'kind' must be a string");
  const auto kind = parse_event_kind(kind_field.get<std::string>());
  if (!kind) schema_error(line_number, "unknown kind '" + kind_field.get<std::string>() + "'");
  const json& args_obj = top.field("args");
  if (!args_obj.is_object()) schema_error(line_number, "'args' must be an object");
  const LineReader args(args_obj, line_number);
  switch (*kind) {
    case EventKind::PairCreated:
      args.exact_keys({"token0", "token1", "pair"});
      ev.args = PairCreated{args.address("token0"), args.address("token1"), args.address("pair")};
      break;
    case EventKind::Sync:
      args.exact_keys({"reserve0", "reserve1"});
      ev.args = Sync{args.amount("reserve0"), args.amount("reserve1")};
      break;
    case EventKind::Mint:
      args.exact_keys({"sender", "amount0", "amount1"});
      ev.args = Mint{args.address("sender"), args.amount("amount0"), args.amount("amount1")};
      break;
    case EventKind::Burn:
      args.exact_keys({"sender", "amount0", "amount1", "to"});
      ev.args = Burn{args.address("sender"), args.amount("amount0"), args.amount("amount1"),
                     args.address("to")};
      break;
    case EventKind::Transfer:
      args.exact_keys({"from", "to", "amount"});
      ev.args = Transfer{args.address("from"), args.address("to"), args.amount("amount")};
      break;
  }
  return ev;
}

void canonicalize(std::vector<EventRecord>& events) {
  std::stable_sort(events.begin(), events.end(), stream_less);
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (!stream_less(events[i - 1], events[i])) {
      throw Error(ErrorCode::OrderingViolation,
                  "duplicate position block " + std::to_string(events[i].block) + " log_index " +
                      std::to_string(events[i].log_index) + " (emitters " +
                      events[i - 1].emitter.to_string() + ", " + events[i].emitter.to_string() + ")");
    }
  }
}

std::vector<EventRecord> read_fixture(std::istream& in) {
  std::vector<EventRecord> events;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    events.push_back(parse_fixture_line(line, line_number));
  }
  canonicalize(events);
  return events;
}

std::vector<EventRecord> read_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open fixture " + path.string());
  return read_fixture(in);
}

void write_fixture(std::ostream& out, std::span<const EventRecord> events) {
  for (const auto& ev : events) out << format_fixture_line(ev) << '\n';
}

void write_fixture(const std::filesystem::path& path, std::span<const EventRecord> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write fixture " + path.string());
  write_fixture(out, events);
}

std::string format_meta_line(const TokenMeta& meta) {
  ordered_json line = ordered_json::object();
  line["token"] = meta.token.to_string();
  line["decimals"] = meta.decimals;
  line["symbol"] = meta.symbol;
  line["creation_block"] = meta.creation_block;
  line["mintable"] = meta.mintable;
  line["pausable"] = meta.pausable;
  line["locked"] = meta.locked;
  line["yield_flag"] = meta.yield_flag;
  line["lp_burned"] = meta.lp_burned;
  return line.dump();
}

MetaLoad read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open metadata " + path.string());
  MetaLoad load;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      schema_error(line_number, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) schema_error(line_number, "metadata line is not an object");
    const LineReader r(obj, line_number);
    TokenMeta meta;
    meta.token = r.address("token");
    if (!obj.contains("decimals") || obj["decimals"].is_null()) {
      load.missing_decimals.push_back(meta.token);
      continue;
    }
    const auto decimals = r.non_negative_int("decimals");
    if (decimals > 36) schema_error(line_number, "decimals must be within 0..36");
    meta.decimals = static_cast<int>(decimals);
    meta.symbol = obj.value("symbol", std::string{});
    meta.creation_block = r.non_negative_int("creation_block");
    auto flag = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end()) return false;
      if (!it->is_boolean()) schema_error(line_number, std::string("'") + key + "' must be boolean");
      return it->get<bool>();
    };
    meta.mintable = flag("mintable");
    meta.pausable = flag("pausable");
    meta.locked = flag("locked");
    meta.yield_flag = flag("yield_flag");
    meta.lp_burned = flag("lp_burned");
    load.tokens.push_back(std::move(meta));
  }
  return load;
}

void write_meta(const std::filesystem::path& path, std::span<const TokenMeta> metas) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write metadata " + path.string());
  for (const auto& m : metas) out << format_meta_line(m) << '\n';
}

std::vector<EventRecord> filter_range(std::span<const EventRecord> events,
                                      std::span<const Address> contracts,
                                      BlockNumber from_block, BlockNumber to_block) {
  std::vector<EventRecord> out;
  for (const auto& ev : events) {
    if (ev.block < from_block || ev.block > to_block) continue;
    if (!contracts.empty() &&
        std::find(contracts.begin(), contracts.end(), ev.emitter) == contracts.end()) {
      continue;
    }
    out.push_back(ev);
  }
  return out;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidParams, "RPC url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

enum class PageOutcome { Ok, TooLarge, Transient };

bool looks_like_range_error(const json& error) {
  const int code = error.value("code", 0);
  const std::string message = lower(error.value("message", std::string{}));
  return code == -32005 || message.find("too many") != std::string::npos ||
         message.find("more than") != std::string::npos ||
         message.find("range") != std::string::npos || message.find("limit") != std::string::npos;
}

class LogPager {
 public:
  LogPager(const RpcEndpoint& rpc, const Address& contract)
      : rpc_(rpc), contract_(contract), url_(split_url(rpc.url)), client_(url_.origin) {
    client_.set_connection_timeout(rpc.timeout);
    client_.set_read_timeout(rpc.timeout);
  }

  /// Fetches one window, retrying transport failures. Returns nullopt when
  /// the provider rejects the window as too large.
  std::optional<std::vector<EventRecord>> fetch(BlockNumber from, BlockNumber to) {
    auto backoff = rpc_.initial_backoff;
    std::string last_failure;
    for (int attempt = 0; attempt <= rpc_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      json response;
      const auto outcome = request(from, to, response, last_failure);
      if (outcome == PageOutcome::TooLarge) return std::nullopt;
      if (outcome == PageOutcome::Transient) continue;
      std::vector<EventRecord> page;
      for (const auto& raw : response.at("result")) {
        if (raw.value("removed", false)) continue;
        try {
          page.push_back(decode_log(raw));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::UnknownSignature) throw;
        }
      }
      return page;
    }
    throw Error(ErrorCode::RpcUnavailable, "eth_getLogs [" + std::to_string(from) + ", " +
                                               std::to_string(to) + "] failed after " +
                                               std::to_string(rpc_.max_retries + 1) +
                                               " attempts: " + last_failure);
  }

 private:
  PageOutcome request(BlockNumber from, BlockNumber to, json& response, std::string& failure) {
    const json body = {{"jsonrpc", "2.0"},
                       {"id", ++request_id_},
                       {"method", "eth_getLogs"},
                       {"params",
                        {{{"address", contract_.to_string()},
                          {"fromBlock", to_hex_quantity(from)},
                          {"toBlock", to_hex_quantity(to)}}}}};
    auto res = client_.Post(url_.path, body.dump(), "application/json");
    if (!res) {
      failure = "transport error " + httplib::to_string(res.error());
      return PageOutcome::Transient;
    }
    if (res->status == 429 || res->status >= 500) {
      failure = "HTTP " + std::to_string(res->status);
      return PageOutcome::Transient;
    }
    if (res->status != 200) {
      failure = "HTTP " + std::to_string(res->status);
      return PageOutcome::Transient;
    }
    try {
      response = json::parse(res->body);
    } catch (const json::parse_error&) {
      failure = "unparseable JSON-RPC response";
      return PageOutcome::Transient;
    }
    if (auto err = response.find("error"); err != response.end() && !err->is_null()) {
      if (looks_like_range_error(*err)) return PageOutcome::TooLarge;
      failure = "JSON-RPC error " + err->dump();
      return PageOutcome::Transient;
    }
    if (!response.contains("result") || !response["result"].is_array()) {
      failure = "JSON-RPC response without result array";
      return PageOutcome::Transient;
    }
    return PageOutcome::Ok;
  }

  const RpcEndpoint& rpc_;
  Address contract_;
  ParsedUrl url_;
  httplib::Client client_;
  int request_id_ = 0;
};

}  // namespace

std::vector<EventRecord> fetch_range(const RpcEndpoint& rpc, const Address& contract,
                                     BlockNumber from_block, BlockNumber to_block) {
  if (from_block > to_block) {
    throw Error(ErrorCode::Precondition, "from_block " + std::to_string(from_block) +
                                             " > to_block " + std::to_string(to_block));
  }
  if (rpc.page_blocks <= 0) throw Error(ErrorCode::InvalidParams, "page_blocks must be positive");
  LogPager pager(rpc, contract);
  std::vector<EventRecord> events;
  BlockNumber window = rpc.page_blocks;
  BlockNumber cursor = from_block;
  while (cursor <= to_block) {
    const BlockNumber end = std::min(to_block, cursor + window - 1);
    auto page = pager.fetch(cursor, end);
    if (!page) {
      if (end == cursor) {
        throw Error(ErrorCode::RangeTooLarge,
                    "provider rejects single block " + std::to_string(cursor));
      }
      window = std::max<BlockNumber>(1, (end - cursor + 1) / 2);
      spdlog::debug("eth_getLogs window too large, halving to {} blocks", window);
      continue;
    }
    events.insert(events.end(), std::make_move_iterator(page->begin()),
                  std::make_move_iterator(page->end()));
    cursor = end + 1;
  }
  canonicalize(events);
  return events;
}

}  // namespace rugwatch::evdecode
