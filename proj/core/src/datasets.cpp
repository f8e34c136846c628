#include "rugwatch/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rugwatch/distfeat.hpp"
#include "rugwatch/parallel.hpp"
#include "rugwatch/poolstate.hpp"
#include "rugwatch/random.hpp"
#include "rugwatch/txgraph.hpp"

namespace rugwatch::datasets {

using evdecode::EventRecord;

std::string_view to_string(Method method) {
  return method == Method::Activity ? "activity" : "early24";
}

Method parse_method(std::string_view text) {
  if (text == "activity") return Method::Activity;
  if (text == "early24") return Method::Early24;
  throw Error(ErrorCode::InvalidParams, "unknown method '" + std::string(text) + "'");
}

std::array<double, kNumFeatures> features_of(const FeatureVector& r) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const auto d = [](std::int64_t v) { return static_cast<double>(v); };
  return {r.liq_curve.value_or(nan), r.tx_curve.value_or(nan), d(r.n_pool_syncs), r.weth,
          r.price.value_or(nan),     r.liquidity,              d(r.lp_transfer),  d(r.mints),
          d(r.burns),                d(r.n_transfers),         d(r.n_unique_addresses),
          r.clus_coeff,              d(r.difference_token_pool), d(r.lock),       d(r.yield),
          d(r.burn)};
}

namespace {

std::span<const EventRecord> until(std::span<const EventRecord> events, BlockNumber block) {
  auto end = std::upper_bound(events.begin(), events.end(), block,
                              [](BlockNumber b, const EventRecord& ev) { return b < ev.block; });
  return events.subspan(0, static_cast<std::size_t>(end - events.begin()));
}

std::optional<double> hhi_at(std::span<const EventRecord> events, const Address& contract,
                             const distfeat::AddressSet& exclusions, BlockNumber cutoff) {
  distfeat::BalanceMap balances;
  for (const auto& ev : until(events, cutoff)) {
    if (ev.emitter != contract) continue;
    if (const auto* t = ev.as<evdecode::Transfer>()) balances.apply(*t, ev.block, ev.log_index);
  }
  try {
    return distfeat::hhi(balances, exclusions);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyDistribution) throw;
    return std::nullopt;
  }
}

std::uint64_t token_stream(const Address& a) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | a.bytes()[i];
  return v;
}

const corpus::TokenInput* find_token(std::span<const corpus::TokenInput> tokens,
                                     const Address& a) {
  auto it = std::lower_bound(tokens.begin(), tokens.end(), a,
                             [](const corpus::TokenInput& t, const Address& x) { return t.token < x; });
  return it != tokens.end() && it->token == a ? &*it : nullptr;
}

std::optional<poolstate::PoolHistory> labeled_pool(const corpus::TokenInput& token,
                                                   const PlanContext& context) {
  if (!token.meta) return std::nullopt;
  return poolstate::select_weth_pool(until(token.events, context.horizon_block), token.token,
                                     context.weth, token.meta->decimals);
}

struct LabeledToken {
  const labeler::LabelRecord* record;
  const corpus::TokenInput* input;
  poolstate::PoolHistory history;
};

std::vector<LabeledToken> labeled_tokens(std::span<const labeler::LabelRecord> labels,
                                         std::span<const corpus::TokenInput> tokens,
                                         const PlanContext& context) {
  std::vector<const labeler::LabelRecord*> sorted;
  for (const auto& r : labels) {
    if (r.label != labeler::Label::Unlabeled) sorted.push_back(&r);
  }
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->token < b->token; });
  std::vector<LabeledToken> out;
  for (const auto* r : sorted) {
    const auto* input = find_token(tokens, r->token);
    if (!input) {
      spdlog::warn("labeled token {} is not in the corpus; skipped", r->token.to_string());
      continue;
    }
    auto history = labeled_pool(*input, context);
    if (!history || history->n_syncs() == 0) {
      spdlog::warn("labeled token {} has no WETH pool; skipped", r->token.to_string());
      continue;
    }
    out.push_back({r, input, std::move(*history)});
  }
  return out;
}

std::optional<BlockNumber> malicious_drop(const LabeledToken& t) {
  const auto dp = labeler::drop_point(t.history, t.record->rule);
  if (!dp) {
    spdlog::warn("malicious token {} has no drop point; skipped", t.record->token.to_string());
    return std::nullopt;
  }
  return dp->block;
}

int label_value(labeler::Label label) { return label == labeler::Label::NonMalicious ? 1 : 0; }

}  // namespace

FeatureVector snapshot(const corpus::TokenInput& token, BlockNumber eval_block,
                       const SnapshotConfig& config) {
  if (!token.meta) {
    throw Error(ErrorCode::NoData, "token " + token.token.to_string() + " has no metadata");
  }
  const auto events = until(token.events, eval_block);
  const auto history =
      poolstate::select_weth_pool(events, token.token, config.weth, token.meta->decimals);
  if (!history || history->n_syncs() == 0) {
    throw Error(ErrorCode::NoData, "token " + token.token.to_string() + " has no Sync by block " +
                                       std::to_string(eval_block));
  }
  const Address pair = history->id().pair;
  const BlockNumber origin = history->creation_block();
  const BlockNumber period = config.period_blocks;
  if (period <= 0) throw Error(ErrorCode::InvalidParams, "period_blocks must be positive");

  FeatureVector fv;
  fv.token = token.token;
  fv.eval_block = eval_block;

  const auto& last = history->points().back();
  fv.n_pool_syncs = static_cast<std::int64_t>(history->n_syncs());
  fv.weth = to_double(Rational(BigInt(last.reserve_weth), pow10(18)));
  fv.liquidity = to_double(last.liquidity);
  const auto prices = poolstate::series(*history, poolstate::SeriesKind::Price);
  if (!prices.empty()) fv.price = to_double(prices.back().value);

  const auto& ledger = history->ledger();
  fv.lp_transfer = ledger.lp_transfer;
  fv.mints = ledger.mints;
  fv.burns = ledger.burns;

  const std::set<Address> lockers(config.lockers.begin(), config.lockers.end());
  std::set<Address> unique;
  std::vector<EventRecord> transfers;
  for (const auto& ev : events) {
    const auto* t = ev.as<evdecode::Transfer>();
    if (!t) continue;
    if (ev.emitter == token.token) {
      ++fv.n_transfers;
      if (!t->from.is_zero()) unique.insert(t->from);
      if (!t->to.is_zero()) unique.insert(t->to);
      transfers.push_back(ev);
    } else if (ev.emitter == pair) {
      if (lockers.contains(t->to)) fv.lock = 1;
      if (t->to.is_zero() && !t->from.is_zero() && t->from != pair) fv.burn = 1;
    }
  }
  fv.n_unique_addresses = static_cast<std::int64_t>(unique.size());

  // Window of the reported period: the last completed one, else the partial
  // first period.
  BlockNumber lo = origin;
  BlockNumber hi = eval_block;
  if (eval_block >= origin + period - 1) {
    const BlockNumber k = (eval_block + 1 - origin) / period - 1;
    lo = origin + k * period;
    hi = lo + period - 1;
  }
  fv.liq_curve = hhi_at(events, pair, {Address::zero()}, hi);
  fv.tx_curve = hhi_at(events, token.token, {Address::zero(), pair}, hi);

  std::vector<EventRecord> window;
  for (const auto& ev : transfers) {
    if (ev.block >= lo && ev.block <= hi) window.push_back(ev);
  }
  const auto graphs = txgraph::build_periods(window, hi - lo + 1, lo);
  if (!graphs.empty()) fv.clus_coeff = txgraph::average_clustering_coefficient(graphs.front());

  fv.difference_token_pool = origin - token.meta->creation_block;
  fv.yield = token.meta->yield_flag ? 1 : 0;
  return fv;
}

std::vector<EvalPlan> plan_activity(std::span<const labeler::LabelRecord> labels,
                                    std::span<const corpus::TokenInput> tokens,
                                    const PlanContext& context) {
  std::vector<EvalPlan> plans;
  for (const auto& t : labeled_tokens(labels, tokens, context)) {
    EvalPlan plan;
    plan.token = t.record->token;
    plan.method = Method::Activity;
    plan.label = label_value(t.record->label);
    Rng rng(mix_seed(context.seed, token_stream(plan.token)));
    const BlockNumber creation = t.history.creation_block();

    if (t.record->label == labeler::Label::Malicious) {
      const auto drop = malicious_drop(t);
      if (!drop) continue;
      if (*drop - creation <= 1) {
        spdlog::warn("{}: token {} has no block strictly between pool creation {} and drop {}",
                     to_string(ErrorCode::SpanTooShort), plan.token.to_string(), creation, *drop);
        continue;
      }
      plan.eval_blocks.push_back(rng.uniform_int(creation + 1, *drop - 1));
    } else {
      const auto last = distfeat::last_activity_block(t.input->events, context.horizon_block);
      const BlockNumber span = last ? *last - creation : 0;
      if (span <= 0) {
        spdlog::warn("token {} has no activity after pool creation; skipped",
                     plan.token.to_string());
        continue;
      }
      // Floyd's sampling of min(5, span) distinct offsets in [1, span].
      const BlockNumber k = std::min<BlockNumber>(5, span);
      std::set<BlockNumber> picked;
      for (BlockNumber j = span - k + 1; j <= span; ++j) {
        const BlockNumber r = rng.uniform_int(1, j);
        picked.insert(picked.contains(r) ? j : r);
      }
      for (BlockNumber off : picked) plan.eval_blocks.push_back(creation + off);
    }
    plan.hours.assign(plan.eval_blocks.size(), 0);
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<EvalPlan> plan_early24(std::span<const labeler::LabelRecord> labels,
                                   std::span<const corpus::TokenInput> tokens,
                                   const PlanContext& context) {
  std::vector<EvalPlan> plans;
  for (const auto& t : labeled_tokens(labels, tokens, context)) {
    EvalPlan plan;
    plan.token = t.record->token;
    plan.method = Method::Early24;
    plan.label = label_value(t.record->label);
    std::optional<BlockNumber> drop;
    if (t.record->label == labeler::Label::Malicious) {
      drop = malicious_drop(t);
      if (!drop) continue;
    }
    const BlockNumber creation = t.history.creation_block();
    for (int k = 1; k <= 24; ++k) {
      const BlockNumber b = creation + k * context.blocks_per_hour;
      if (drop && b >= *drop) break;
      plan.eval_blocks.push_back(b);
      plan.hours.push_back(k);
    }
    if (!plan.eval_blocks.empty()) plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<PlannedRow> assemble(std::span<const EvalPlan> plans,
                                 std::span<const corpus::TokenInput> tokens,
                                 const SnapshotConfig& config, unsigned threads) {
  std::vector<std::vector<std::optional<PlannedRow>>> slots(plans.size());
  parallel_for(plans.size(), threads, [&](std::size_t i) {
    const auto& plan = plans[i];
    const auto* input = find_token(tokens, plan.token);
    if (!input) throw Error(ErrorCode::Precondition, "planned token missing from corpus");
    slots[i].resize(plan.eval_blocks.size());
    for (std::size_t j = 0; j < plan.eval_blocks.size(); ++j) {
      try {
        auto fv = snapshot(*input, plan.eval_blocks[j], config);
        fv.label = plan.label;
        slots[i][j] = PlannedRow{plan.hours.empty() ? 0 : plan.hours[j], std::move(fv)};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoData) throw;
        spdlog::warn("{}", e.what());
      }
    }
  });
  std::vector<PlannedRow> rows;
  for (auto& per_plan : slots) {
    for (auto& r : per_plan) {
      if (r) rows.push_back(std::move(*r));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PlannedRow& a, const PlannedRow& b) {
    if (a.row.token != b.row.token) return a.row.token < b.row.token;
    return a.row.eval_block < b.row.eval_block;
  });
  return rows;
}

void validate(const FeatureVector& r) {
  const auto fail = [&](std::string_view field, const std::string& why) {
    throw Error(ErrorCode::SchemaViolation, "token " + r.token.to_string() + " block " +
                                                std::to_string(r.eval_block) + ": " +
                                                std::string(field) + " " + why);
  };
  const auto hhi_ok = [](const std::optional<double>& v) {
    return !v || (std::isfinite(*v) && *v > 0.0 && *v <= 1.0);
  };
  if (!hhi_ok(r.liq_curve)) fail("liq_curve", "outside (0, 1]");
  if (!hhi_ok(r.tx_curve)) fail("tx_curve", "outside (0, 1]");
  const std::pair<std::string_view, std::int64_t> counters[] = {
      {"n_pool_syncs", r.n_pool_syncs}, {"lp_transfer", r.lp_transfer},
      {"mints", r.mints},               {"burns", r.burns},
      {"n_transfers", r.n_transfers},   {"n_unique_addresses", r.n_unique_addresses},
      {"difference_token_pool", r.difference_token_pool}, {"eval_block", r.eval_block}};
  for (const auto& [name, v] : counters) {
    if (v < 0) fail(name, "is negative");
  }
  const std::pair<std::string_view, int> flags[] = {
      {"lock", r.lock}, {"yield", r.yield}, {"burn", r.burn}, {"label", r.label}};
  for (const auto& [name, v] : flags) {
    if (v != 0 && v != 1) fail(name, "is not 0/1");
  }
  if (!(std::isfinite(r.weth) && r.weth >= 0.0)) fail("weth", "is not a finite non-negative real");
  if (!(std::isfinite(r.liquidity) && r.liquidity >= 0.0)) {
    fail("liquidity", "is not a finite non-negative real");
  }
  if (r.price && !(std::isfinite(*r.price) && *r.price >= 0.0)) {
    fail("price", "is not a finite non-negative real");
  }
  if (!(std::isfinite(r.clus_coeff) && r.clus_coeff >= 0.0 && r.clus_coeff <= 1.0 + 1e-12)) {
    fail("clus_coeff", "outside [0, 1]");
  }
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::string header() {
  std::string h;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) h += ',';
    h += kColumns[i];
  }
  return h;
}

double parse_real(const std::string& s, std::string_view field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::SchemaViolation,
              std::string(field) + " value '" + s + "' is not a real number");
}

std::int64_t parse_int(const std::string& s, std::string_view field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::SchemaViolation, std::string(field) + " value '" + s + "' is not an integer");
}

std::optional<double> parse_opt(const std::string& s, std::string_view field) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, field);
}

}  // namespace

void write_csv(std::ostream& out, std::span<const FeatureVector> rows) {
  out << header() << '\n';
  for (const auto& r : rows) {
    validate(r);
    out << opt(r.liq_curve) << ',' << opt(r.tx_curve) << ',' << r.n_pool_syncs << ','
        << format_double(r.weth) << ',' << opt(r.price) << ',' << format_double(r.liquidity) << ','
        << r.lp_transfer << ',' << r.mints << ',' << r.burns << ',' << r.n_transfers << ','
        << r.n_unique_addresses << ',' << format_double(r.clus_coeff) << ','
        << r.difference_token_pool << ',' << r.lock << ',' << r.yield << ',' << r.burn << ','
        << r.label << ',' << r.token.to_string() << ',' << r.eval_block << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const FeatureVector> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_csv(out, rows);
}

std::vector<FeatureVector> read_csv(const std::filesystem::path& path) {
  const auto rows = corpus::read_csv(path);
  if (rows.empty()) throw Error(ErrorCode::SchemaViolation, path.string() + " is empty");
  std::string got;
  for (std::size_t i = 0; i < rows[0].size(); ++i) got += (i ? "," : "") + rows[0][i];
  if (got != header()) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": unexpected header '" + got + "'");
  }
  std::vector<FeatureVector> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != kColumns.size()) {
      throw Error(ErrorCode::SchemaViolation, path.string() + " line " + std::to_string(i + 1) +
                                                  ": expected " + std::to_string(kColumns.size()) +
                                                  " fields");
    }
    FeatureVector r;
    r.liq_curve = parse_opt(f[0], kColumns[0]);
    r.tx_curve = parse_opt(f[1], kColumns[1]);
    r.n_pool_syncs = parse_int(f[2], kColumns[2]);
    r.weth = parse_real(f[3], kColumns[3]);
    r.price = parse_opt(f[4], kColumns[4]);
    r.liquidity = parse_real(f[5], kColumns[5]);
    r.lp_transfer = parse_int(f[6], kColumns[6]);
    r.mints = parse_int(f[7], kColumns[7]);
    r.burns = parse_int(f[8], kColumns[8]);
    r.n_transfers = parse_int(f[9], kColumns[9]);
    r.n_unique_addresses = parse_int(f[10], kColumns[10]);
    r.clus_coeff = parse_real(f[11], kColumns[11]);
    r.difference_token_pool = parse_int(f[12], kColumns[12]);
    r.lock = static_cast<int>(parse_int(f[13], kColumns[13]));
    r.yield = static_cast<int>(parse_int(f[14], kColumns[14]));
    r.burn = static_cast<int>(parse_int(f[15], kColumns[15]));
    r.label = static_cast<int>(parse_int(f[16], kColumns[16]));
    auto token = Address::try_parse(f[17]);
    if (!token) throw Error(ErrorCode::SchemaViolation, "token '" + f[17] + "' is not an address");
    r.token = *token;
    r.eval_block = parse_int(f[18], kColumns[18]);
    validate(r);
    out.push_back(r);
  }
  return out;
}

std::string hour_file(int hour) {
  std::ostringstream os;
  os << "hour_" << (hour < 10 ? "0" : "") << hour << ".csv";
  return os.str();
}

void build(Method method, std::span<const PlannedRow> rows, const std::filesystem::path& out,
           const BuildInfo& info) {
  std::filesystem::create_directories(out);
  nlohmann::ordered_json manifest;
  manifest["seed"] = info.seed;
  manifest["method"] = std::string(to_string(method));
  manifest["thresholds"] = info.thresholds.to_json();
  manifest["horizon_block"] = info.horizon_block;
  manifest["blocks_per_hour"] = info.blocks_per_hour;
  manifest["period_blocks"] = info.period_blocks;

  const auto counts = [](std::span<const FeatureVector> rs) {
    nlohmann::ordered_json j;
    std::int64_t pos = 0;
    for (const auto& r : rs) pos += r.label;
    j["n_rows"] = rs.size();
    j["n_malicious"] = static_cast<std::int64_t>(rs.size()) - pos;
    j["n_nonmalicious"] = pos;
    return j;
  };

  if (method == Method::Activity) {
    std::vector<FeatureVector> flat;
    flat.reserve(rows.size());
    for (const auto& r : rows) flat.push_back(r.row);
    write_csv(out / "dataset.csv", flat);
    const auto totals = counts(flat);
    for (const auto& [k, v] : totals.items()) manifest[k] = v;
    manifest["files"] = {"dataset.csv"};
  } else {
    std::map<int, std::vector<FeatureVector>> by_hour;
    for (int h = 1; h <= 24; ++h) by_hour[h];
    for (const auto& r : rows) {
      if (r.hour < 1 || r.hour > 24) {
        throw Error(ErrorCode::Precondition, "early24 row without an hour in 1..24");
      }
      by_hour[r.hour].push_back(r.row);
    }
    nlohmann::ordered_json per_hour = nlohmann::ordered_json::array();
    std::int64_t total = 0;
    for (const auto& [h, rs] : by_hour) {
      write_csv(out / hour_file(h), rs);
      auto c = counts(rs);
      c = nlohmann::ordered_json{{"hour", h}, {"file", hour_file(h)}, {"n_rows", c["n_rows"]},
                                 {"n_malicious", c["n_malicious"]},
                                 {"n_nonmalicious", c["n_nonmalicious"]}};
      total += static_cast<std::int64_t>(rs.size());
      per_hour.push_back(c);
    }
    manifest["n_rows"] = total;
    manifest["hours"] = per_hour;
  }
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kNumFeatures; ++i) names.push_back(kColumns[i]);
  manifest["feature_names"] = names;
  corpus::write_json(out / "manifest.json", manifest);
}

}  // namespace rugwatch::datasets
