#include "rugwatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "rugwatch/parallel.hpp"
#include "rugwatch/poolstate.hpp"

namespace rugwatch::simulator {

using evdecode::EventRecord;

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SimpleRugPull: return "SimpleRugPull";
    case ScenarioKind::SellRugPull: return "SellRugPull";
    case ScenarioKind::MintTrapDoor: return "MintTrapDoor";
    case ScenarioKind::Healthy: return "Healthy";
    case ScenarioKind::InactiveBenign: return "InactiveBenign";
  }
  return "?";
}

ScenarioKind parse_scenario(std::string_view text) {
  for (auto k : {ScenarioKind::SimpleRugPull, ScenarioKind::SellRugPull, ScenarioKind::MintTrapDoor,
                 ScenarioKind::Healthy, ScenarioKind::InactiveBenign}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::InvalidParams, "unknown scenario '" + std::string(text) + "'");
}

std::string_view to_string(LpAction action) {
  switch (action) {
    case LpAction::Hold: return "Hold";
    case LpAction::Lock: return "Lock";
    case LpAction::Burn: return "Burn";
  }
  return "?";
}

namespace {

/// Uniswap V2 router, the `sender` of Mint and Burn.
const Address kRouter = Address::parse("0x7a250d5630b4cf539739df2c5dacb4c659f2488d");

Amount scaled(const Amount& base, double fraction) {
  const auto ppb = static_cast<std::uint64_t>(std::llround(fraction * 1e9));
  return base * Amount(ppb) / Amount(1'000'000'000);
}

Amount ether(double eth) { return scaled(Amount(pow10(18)), eth); }

class Sim {
 public:
  Sim(const Scenario& sc, const SimContext& ctx)
      : ctx_(ctx), rng_(sc.seed), fee_(poolstate::default_fee()) {
    token_ = fresh();
    pair_ = fresh();
    dev_ = fresh();
    token_is_0_ = token_ < ctx.deployment.weth;
  }

  Address fresh() {
    Address::Bytes b{};
    for (std::size_t i = 0; i < b.size(); i += 8) {
      const std::uint64_t v = rng_.next();
      for (std::size_t j = 0; j < 8 && i + j < b.size(); ++j) {
        b[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
      }
    }
    return Address(b);
  }

  Rng& rng() { return rng_; }
  const Address& token() const { return token_; }
  const Address& pair() const { return pair_; }
  const Address& dev() const { return dev_; }
  const Amount& reserve_token() const { return rt_; }
  const Amount& reserve_weth() const { return rw_; }
  Amount balance(const Address& a) const {
    auto it = bal_.find(a);
    return it == bal_.end() ? Amount(0) : it->second;
  }
  Amount lp_balance(const Address& a) const {
    auto it = lp_.find(a);
    return it == lp_.end() ? Amount(0) : it->second;
  }
  std::optional<BlockNumber> liquidity_peak() const { return liq_peak_block_; }
  std::optional<BlockNumber> price_peak() const { return price_peak_block_; }
  /// Final price as a fraction of the peak price.
  Rational price_ratio() const {
    if (rt_ == 0 || peak_rt_ == 0) return Rational(0);
    return Rational(BigInt(rw_) * BigInt(peak_rt_), BigInt(rt_) * BigInt(peak_rw_));
  }
  BlockNumber last_block() const { return block_; }
  std::vector<EventRecord> take_events() { return std::move(events_); }

  void at(BlockNumber b) {
    if (b < block_) throw Error(ErrorCode::Precondition, "simulation time went backwards");
    if (b != block_) {
      block_ = b;
      next_log_ = 0;
    }
  }

  void create_token(const Amount& supply) {
    token_transfer(Address::zero(), dev_, supply);
  }

  void create_pool() {
    const Address& weth = ctx_.deployment.weth;
    emit(ctx_.deployment.factory,
         evdecode::PairCreated{token_is_0_ ? token_ : weth, token_is_0_ ? weth : token_, pair_});
  }

  void add_liquidity(const Address& provider, const Amount& tokens, const Amount& weth) {
    Amount minted;
    if (supply_ == 0) {
      minted = Amount(mp::sqrt(BigInt(tokens) * BigInt(weth)));
    } else {
      minted = std::min(tokens * supply_ / rt_, weth * supply_ / rw_);
    }
    if (minted == 0) throw Error(ErrorCode::InvalidParams, "liquidity deposit mints nothing");
    token_transfer(provider, pair_, tokens);
    rt_ += tokens;
    rw_ += weth;
    lp_transfer(Address::zero(), provider, minted);
    sync();
    emit(pair_, evdecode::Mint{kRouter, token_is_0_ ? tokens : weth, token_is_0_ ? weth : tokens});
  }

  void remove_liquidity(const Address& provider, const Amount& lp) {
    const Amount out_t = lp * rt_ / supply_;
    const Amount out_w = lp * rw_ / supply_;
    lp_transfer(provider, pair_, lp);
    lp_transfer(pair_, Address::zero(), lp);
    token_transfer(pair_, provider, out_t);
    rt_ -= out_t;
    rw_ -= out_w;
    sync();
    emit(pair_, evdecode::Burn{kRouter, token_is_0_ ? out_t : out_w, token_is_0_ ? out_w : out_t,
                               provider});
  }

  /// Spends at most `budget` wei on the largest output it buys exactly.
  bool buy(const Address& who, const Amount& budget) {
    if (budget == 0 || rt_ == 0) return false;
    const Amount dy = poolstate::swap_out_for_exact_in(rw_, rt_, budget, fee_);
    if (dy == 0 || dy >= rt_) return false;
    const Amount dx = poolstate::swap_in_for_exact_out(rw_, rt_, dy, fee_);
    token_transfer(pair_, who, dy);
    rt_ -= dy;
    rw_ += dx;
    sync();
    return true;
  }

  bool sell(const Address& who, const Amount& tokens) {
    if (tokens == 0 || tokens > balance(who)) return false;
    const Amount out = poolstate::swap_out_for_exact_in(rt_, rw_, tokens, fee_);
    if (out == 0 || out >= rw_) return false;
    token_transfer(who, pair_, tokens);
    rt_ += tokens;
    rw_ -= out;
    sync();
    return true;
  }

  void token_transfer(const Address& from, const Address& to, const Amount& amount) {
    if (!from.is_zero() && from != pair_) {
      auto& b = bal_[from];
      if (b < amount) throw Error(ErrorCode::Precondition, "simulated transfer exceeds balance");
      b -= amount;
    }
    if (to != pair_) bal_[to] += amount;
    emit(token_, evdecode::Transfer{from, to, amount});
  }

  void lp_transfer(const Address& from, const Address& to, const Amount& amount) {
    if (from.is_zero()) {
      supply_ += amount;
    } else {
      lp_.at(from) -= amount;
    }
    if (to.is_zero() && from == pair_) {
      supply_ -= amount;
    } else {
      lp_[to] += amount;
    }
    emit(pair_, evdecode::Transfer{from, to, amount});
  }

 private:
  void emit(const Address& emitter, evdecode::EventArgs args) {
    events_.push_back(EventRecord{block_, next_log_++, emitter, std::move(args), std::nullopt});
  }

  void sync() {
    emit(pair_, evdecode::Sync{token_is_0_ ? rt_ : rw_, token_is_0_ ? rw_ : rt_});
    if (!liq_peak_block_ || rw_ > peak_liq_) {
      peak_liq_ = rw_;
      liq_peak_block_ = block_;
    }
    if (rt_ > 0 && (!price_peak_block_ || BigInt(rw_) * BigInt(peak_rt_) >
                                              BigInt(peak_rw_) * BigInt(rt_))) {
      peak_rw_ = rw_;
      peak_rt_ = rt_;
      price_peak_block_ = block_;
    }
  }

  const SimContext& ctx_;
  Rng rng_;
  Rational fee_;
  Address token_, pair_, dev_;
  bool token_is_0_ = false;
  Amount rt_, rw_, supply_;
  std::map<Address, Amount> bal_;
  std::map<Address, Amount> lp_;
  BlockNumber block_ = -1;
  std::int64_t next_log_ = 0;
  std::vector<EventRecord> events_;
  Amount peak_liq_;
  std::optional<BlockNumber> liq_peak_block_;
  Amount peak_rw_, peak_rt_;
  std::optional<BlockNumber> price_peak_block_;
};

void validate(const Scenario& sc, const SimContext& ctx) {
  const auto& p = sc.params;
  const auto bad = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidParams, std::string(to_string(sc.kind)) + ": " + why);
  };
  if (p.initial_weth == 0 || p.initial_tokens == 0) bad("initial reserves must be positive");
  if (p.dev_retained_fraction < 0 || p.dev_retained_fraction >= 1) {
    bad("dev_retained_fraction must lie in [0, 1)");
  }
  if (p.n_investors < 1) bad("n_investors must be positive");
  if (!(p.trade_intensity > 0.0)) bad("trade_intensity must be positive");
  if (p.lifetime_blocks < 2) bad("lifetime_blocks must be at least 2");
  if (p.pool_delay_blocks < 0) bad("pool_delay_blocks must be non-negative");
  if (p.decimals < 0 || p.decimals > 30) bad("decimals out of range");
  if (!(p.pump_multiple > 0.0)) bad("pump_multiple must be positive");
  switch (sc.kind) {
    case ScenarioKind::SimpleRugPull:
      if (p.lp_action != LpAction::Hold) bad("the developer must hold the LP tokens to remove them");
      if (p.n_investors < 5) bad("needs at least 5 investors for an eligible pool");
      break;
    case ScenarioKind::SellRugPull:
      if (p.dev_retained_fraction <= 0) bad("requires a retained fraction f > 0");
      if (p.n_investors < 5) bad("needs at least 5 investors for an eligible pool");
      break;
    case ScenarioKind::MintTrapDoor:
      if (p.n_investors < 5) bad("needs at least 5 investors for an eligible pool");
      break;
    case ScenarioKind::Healthy:
    case ScenarioKind::InactiveBenign:
      break;
  }
  if (p.creation_block + p.pool_delay_blocks >= ctx.horizon_block) bad("pool created after horizon");
}

/// Sorted blocks of `n` arrivals of a Poisson process conditioned on count,
/// strictly inside (from, to).
std::vector<BlockNumber> arrivals(Rng& rng, int n, BlockNumber from, BlockNumber to) {
  std::vector<BlockNumber> out;
  for (int i = 0; i < n; ++i) out.push_back(rng.uniform_int(from + 1, to - 1));
  std::sort(out.begin(), out.end());
  return out;
}

void pump(Sim& sim, const ScenarioParams& p, BlockNumber start, BlockNumber end) {
  const auto blocks = arrivals(sim.rng(), p.n_investors, start, end);
  std::vector<double> weights;
  double total = 0.0;
  for (int i = 0; i < p.n_investors; ++i) {
    weights.push_back(sim.rng().exponential(1.0) + 0.05);
    total += weights.back();
  }
  for (int i = 0; i < p.n_investors; ++i) {
    sim.at(blocks[static_cast<std::size_t>(i)]);
    const Address investor = sim.fresh();
    sim.buy(investor, scaled(p.initial_weth, p.pump_multiple * weights[static_cast<std::size_t>(i)] / total));
  }
}

void dump(Sim& sim, const Address& who, BlockNumber start, int chunks) {
  const Amount held = sim.balance(who);
  for (int c = 0; c < chunks; ++c) {
    sim.at(start + c);
    const Amount part = c + 1 == chunks ? sim.balance(who) : held / Amount(chunks);
    sim.sell(who, part);
  }
}

/// Trades until `end`: buys and sells drifting back toward the opening
/// price, plus investor-to-investor transfers at `p2p` of events.
void trade(Sim& sim, const ScenarioParams& p, BlockNumber start, BlockNumber end, double max_size,
           double p2p) {
  auto& rng = sim.rng();
  const Rational open(BigInt(sim.reserve_weth()), BigInt(sim.reserve_token()));
  std::vector<Address> investors;
  std::vector<Address> recent;
  BlockNumber b = start;
  for (;;) {
    b += std::max<BlockNumber>(1, static_cast<BlockNumber>(std::ceil(rng.exponential(p.trade_intensity))));
    if (b >= end) break;
    sim.at(b);
    if (!investors.empty() && rng.bernoulli(p2p)) {
      const Address from = recent.empty() ? investors[0]
                                          : recent[static_cast<std::size_t>(rng.uniform_int(
                                                0, static_cast<std::int64_t>(recent.size()) - 1))];
      const Address to = investors[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(investors.size()) - 1))];
      const Amount held = sim.balance(from);
      if (from != to && held > 0) sim.token_transfer(from, to, scaled(held, rng.uniform(0.1, 0.5)));
      continue;
    }
    const Rational now(BigInt(sim.reserve_weth()), BigInt(sim.reserve_token()));
    const double p_buy = now < open ? 0.65 : 0.35;
    const double size = rng.log_uniform(max_size / 20.0, max_size);
    if (rng.bernoulli(p_buy) || investors.empty()) {
      Address who;
      if (investors.size() < static_cast<std::size_t>(p.n_investors) &&
          (investors.empty() || rng.bernoulli(0.5))) {
        who = sim.fresh();
        investors.push_back(who);
      } else {
        who = investors[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(investors.size()) - 1))];
      }
      if (sim.buy(who, scaled(sim.reserve_weth(), size))) recent.push_back(who);
    } else {
      const Address who = investors[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(investors.size()) - 1))];
      const Amount cap = scaled(sim.reserve_token(), size);
      const Amount amount = std::min(sim.balance(who), cap);
      if (sim.sell(who, amount)) recent.push_back(who);
    }
    if (recent.size() > 8) recent.erase(recent.begin());
  }
}

}  // namespace

GeneratedToken generate(const Scenario& sc, const SimContext& ctx) {
  validate(sc, ctx);
  const auto& p = sc.params;
  Sim sim(sc, ctx);
  auto& rng = sim.rng();

  // The pool receives initial_tokens, which is the (1 - f) share of supply.
  const BigInt f_num = mp::numerator(p.dev_retained_fraction);
  const BigInt f_den = mp::denominator(p.dev_retained_fraction);
  const Amount retained = Amount(BigInt(p.initial_tokens) * f_num / (f_den - f_num));
  const Amount supply = p.initial_tokens + retained;
  const BlockNumber c0 = p.creation_block;
  const BlockNumber c1 = c0 + p.pool_delay_blocks;

  sim.at(c0);
  sim.create_token(supply);
  sim.at(c1);
  sim.create_pool();
  sim.add_liquidity(sim.dev(), p.initial_tokens, p.initial_weth);
  const Amount lp = sim.lp_balance(sim.dev());
  if (p.lp_action == LpAction::Lock) {
    sim.at(c1 + 1);
    sim.lp_transfer(sim.dev(), ctx.deployment.lockers.at(0), lp);
  } else if (p.lp_action == LpAction::Burn) {
    sim.at(c1 + 1);
    sim.lp_transfer(sim.dev(), Address::zero(), lp);
  }
  const BlockNumber trading_start = sim.last_block();

  GeneratedToken out;
  out.truth.scenario = sc.kind;
  const BlockNumber rug = c1 + p.lifetime_blocks;
  switch (sc.kind) {
    case ScenarioKind::SimpleRugPull: {
      pump(sim, p, trading_start, rug);
      sim.at(rug);
      sim.remove_liquidity(sim.dev(), sim.lp_balance(sim.dev()));
      if (sim.reserve_weth() != 0) {
        throw Error(ErrorCode::InvalidParams, "SimpleRugPull left liquidity in the pool");
      }
      out.truth.expected_label = labeler::Label::Malicious;
      out.truth.expected_rule = labeler::Rule::FastRugPull;
      out.truth.drop_block = sim.liquidity_peak();
      break;
    }
    case ScenarioKind::SellRugPull:
    case ScenarioKind::MintTrapDoor: {
      pump(sim, p, trading_start, rug);
      if (sc.kind == ScenarioKind::MintTrapDoor) {
        sim.at(rug);
        sim.token_transfer(Address::zero(), sim.dev(), sim.reserve_token() * Amount(6));
      }
      dump(sim, sim.dev(), sc.kind == ScenarioKind::MintTrapDoor ? rug + 1 : rug,
           static_cast<int>(rng.uniform_int(1, 3)));
      if (sim.price_ratio() * 10 > 1) {
        throw Error(ErrorCode::InvalidParams,
                    std::string(to_string(sc.kind)) + " dump did not cut the price by 90%");
      }
      out.truth.expected_label = labeler::Label::Malicious;
      out.truth.expected_rule = labeler::Rule::NoBurnPriceCollapse;
      out.truth.drop_block = sim.price_peak();
      break;
    }
    case ScenarioKind::Healthy: {
      const BlockNumber end = ctx.horizon_block - rng.uniform_int(100, 20000);
      trade(sim, p, trading_start, end, 0.03, 0.1);
      out.truth.expected_label = labeler::Label::NonMalicious;
      out.truth.expected_rule = labeler::Rule::Allowlist;
      out.allowlisted = true;
      break;
    }
    case ScenarioKind::InactiveBenign: {
      trade(sim, p, trading_start, c1 + p.lifetime_blocks, 0.01, 0.0);
      out.truth.expected_label = labeler::Label::Unlabeled;
      out.truth.expected_rule = labeler::Rule::None;
      break;
    }
  }
  if (sim.last_block() > ctx.horizon_block) {
    throw Error(ErrorCode::InvalidParams, "lifecycle runs past the horizon");
  }

  out.truth.token = sim.token();
  out.pair = sim.pair();
  out.meta.token = sim.token();
  out.meta.decimals = p.decimals;
  out.meta.creation_block = c0;
  out.meta.mintable = sc.kind == ScenarioKind::MintTrapDoor;
  out.meta.locked = p.lp_action == LpAction::Lock;
  out.meta.lp_burned = p.lp_action == LpAction::Burn;
  out.events = sim.take_events();
  return out;
}

Scenario random_scenario(ScenarioKind kind, Rng& rng, BlockNumber start_block,
                         BlockNumber creation_window) {
  Scenario sc;
  sc.kind = kind;
  sc.seed = rng.next();
  auto& p = sc.params;
  p.decimals = rng.bernoulli(0.8) ? 18 : 9;
  p.initial_weth = ether(rng.log_uniform(2.0, 50.0));
  p.initial_tokens = Amount(pow10(static_cast<unsigned>(p.decimals))) *
                     Amount(static_cast<std::uint64_t>(rng.log_uniform(1e5, 1e9)));
  p.creation_block = start_block + rng.uniform_int(0, creation_window);
  switch (kind) {
    case ScenarioKind::SimpleRugPull:
      p.n_investors = static_cast<int>(rng.uniform_int(5, 30));
      p.lifetime_blocks = static_cast<BlockNumber>(rng.log_uniform(3000, 60000));
      p.pool_delay_blocks = static_cast<BlockNumber>(rng.log_uniform(1, 50000));
      p.pump_multiple = rng.uniform(0.5, 4.0);
      p.dev_retained_fraction = Rational(rng.uniform_int(0, 50), 100);
      break;
    case ScenarioKind::SellRugPull:
      p.n_investors = static_cast<int>(rng.uniform_int(5, 30));
      p.lifetime_blocks = static_cast<BlockNumber>(rng.log_uniform(3000, 60000));
      p.pool_delay_blocks = static_cast<BlockNumber>(rng.log_uniform(1, 50000));
      p.pump_multiple = rng.uniform(2.5, 4.0);
      p.dev_retained_fraction = Rational(rng.uniform_int(50, 80), 100);
      p.lp_action = std::array{LpAction::Hold, LpAction::Lock, LpAction::Burn}[static_cast<std::size_t>(
          rng.uniform_int(0, 2))];
      break;
    case ScenarioKind::MintTrapDoor:
      p.n_investors = static_cast<int>(rng.uniform_int(5, 30));
      p.lifetime_blocks = static_cast<BlockNumber>(rng.log_uniform(3000, 60000));
      p.pool_delay_blocks = static_cast<BlockNumber>(rng.log_uniform(1, 50000));
      p.pump_multiple = rng.uniform(0.5, 4.0);
      p.lp_action = LpAction::Lock;
      break;
    case ScenarioKind::Healthy:
      p.n_investors = static_cast<int>(rng.uniform_int(15, 60));
      p.trade_intensity = 1.0 / rng.uniform(800.0, 3000.0);
      p.pool_delay_blocks = static_cast<BlockNumber>(rng.log_uniform(100, 300000));
      p.dev_retained_fraction = Rational(rng.uniform_int(10, 50), 100);
      p.lp_action = rng.bernoulli(0.5) ? LpAction::Lock : LpAction::Hold;
      break;
    case ScenarioKind::InactiveBenign:
      p.n_investors = static_cast<int>(rng.uniform_int(5, 15));
      p.trade_intensity = 1.0 / rng.uniform(1000.0, 4000.0);
      p.lifetime_blocks = static_cast<BlockNumber>(rng.log_uniform(20000, 150000));
      p.pool_delay_blocks = static_cast<BlockNumber>(rng.log_uniform(1, 50000));
      p.dev_retained_fraction = Rational(rng.uniform_int(0, 50), 100);
      break;
  }
  return sc;
}

nlohmann::ordered_json BatchSpec::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json c;
  for (const auto& [k, n] : counts) c[std::string(to_string(k))] = n;
  j["counts"] = c;
  j["start_block"] = start_block;
  j["creation_window"] = creation_window;
  j["horizon_block"] = horizon_block;
  return j;
}

BatchSpec BatchSpec::from_json(const nlohmann::json& j) {
  BatchSpec s;
  try {
    for (const auto& [k, v] : j.at("counts").items()) {
      const int n = v.get<int>();
      if (n < 0) throw Error(ErrorCode::InvalidParams, "negative count for " + k);
      s.counts[parse_scenario(k)] = n;
    }
    if (j.contains("start_block")) s.start_block = j.at("start_block").get<BlockNumber>();
    if (j.contains("creation_window")) s.creation_window = j.at("creation_window").get<BlockNumber>();
    if (j.contains("horizon_block")) s.horizon_block = j.at("horizon_block").get<BlockNumber>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("batch spec: ") + e.what());
  }
  return s;
}

std::vector<Truth> generate_batch(const BatchSpec& spec, std::uint64_t seed,
                                  const std::filesystem::path& out,
                                  const corpus::Deployment& deployment, unsigned threads) {
  std::vector<ScenarioKind> kinds;
  for (const auto& [k, n] : spec.counts) kinds.insert(kinds.end(), static_cast<std::size_t>(n), k);
  SimContext ctx{deployment, spec.horizon_block};

  std::vector<GeneratedToken> tokens(kinds.size());
  parallel_for(kinds.size(), threads, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    const auto sc = random_scenario(kinds[i], rng, spec.start_block, spec.creation_window);
    tokens[i] = generate(sc, ctx);
  });
  std::sort(tokens.begin(), tokens.end(),
            [](const auto& a, const auto& b) { return a.meta.token < b.meta.token; });
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].meta.token == tokens[i - 1].meta.token) {
      throw Error(ErrorCode::InvalidParams, "token address collision in batch");
    }
  }

  const corpus::CorpusPaths paths{out};
  std::filesystem::create_directories(paths.events_dir());
  std::vector<evdecode::TokenMeta> metas;
  std::set<Address> allow;
  std::vector<Truth> truth;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i].meta.symbol = "SIM" + std::to_string(i);
  }
  parallel_for(tokens.size(), threads, [&](std::size_t i) {
    evdecode::write_fixture(paths.events_for(tokens[i].meta.token), tokens[i].events);
  });
  for (const auto& t : tokens) {
    metas.push_back(t.meta);
    if (t.allowlisted) allow.insert(t.meta.token);
    truth.push_back(t.truth);
  }
  evdecode::write_meta(paths.meta(), metas);
  corpus::write_allowlist(paths.allowlist(), allow);
  write_truth_csv(paths.truth(), truth);

  nlohmann::ordered_json manifest;
  manifest["stage"] = "simulate";
  manifest["seed"] = seed;
  manifest["spec"] = spec.to_json();
  manifest["deployment"] = nlohmann::ordered_json::parse(deployment.to_json().dump());
  manifest["n_tokens"] = tokens.size();
  corpus::write_json(paths.manifest(), manifest);
  return truth;
}

void write_truth_csv(const std::filesystem::path& path, const std::vector<Truth>& truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "token,scenario,expected_label,expected_rule,drop_block\n";
  for (const auto& t : truth) {
    out << t.token.to_string() << ',' << to_string(t.scenario) << ','
        << labeler::to_string(t.expected_label) << ',' << labeler::to_string(t.expected_rule) << ','
        << (t.drop_block ? std::to_string(*t.drop_block) : std::string{}) << '\n';
  }
}

std::vector<Truth> read_truth_csv(const std::filesystem::path& path) {
  const auto rows = corpus::read_csv(path);
  if (rows.empty() || rows[0].size() != 5 || rows[0][0] != "token") {
    throw Error(ErrorCode::SchemaViolation, path.string() + " is not a truth CSV");
  }
  std::vector<Truth> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 5) throw Error(ErrorCode::SchemaViolation, "truth row with wrong arity");
    Truth t;
    t.token = Address::parse(f[0]);
    t.scenario = parse_scenario(f[1]);
    t.expected_label = labeler::parse_label(f[2]);
    t.expected_rule = labeler::parse_rule(f[3]);
    if (!f[4].empty()) t.drop_block = std::stoll(f[4]);
    out.push_back(t);
  }
  return out;
}

}  // namespace rugwatch::simulator
