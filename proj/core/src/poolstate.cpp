#include "rugwatch/poolstate.hpp"

#include <algorithm>
#include <ostream>

namespace rugwatch::poolstate {

namespace {

void check_fee(const Rational& fee) {
  if (fee < 0 || fee >= 1) throw Error(ErrorCode::Precondition, "fee must lie in [0, 1)");
}

BigInt ceil_div(const BigInt& num, const BigInt& den) {
  BigInt q, r;
  mp::divide_qr(num, den, q, r);
  return r == 0 ? q : q + 1;
}

Amount narrow(const BigInt& v) {
  if (v > BigInt(std::numeric_limits<Amount>::max())) {
    throw Error(ErrorCode::InsufficientLiquidity, "swap amount overflows uint256");
  }
  return Amount(v);
}

}  // namespace

Rational default_fee() { return Rational(3, 1000); }

Amount swap_in_for_exact_out(const Amount& x, const Amount& y, const Amount& dy,
                             const Rational& fee) {
  check_fee(fee);
  if (dy >= y) throw Error(ErrorCode::InsufficientLiquidity, "requested output exhausts reserve");
  if (dy == 0) throw Error(ErrorCode::Precondition, "requested output must be positive");
  // (1 - p/q) dx >= x dy / (y - dy)  <=>  dx >= x dy q / ((y - dy)(q - p))
  const BigInt p = mp::numerator(fee);
  const BigInt q = mp::denominator(fee);
  const BigInt num = BigInt(x) * BigInt(dy) * q;
  const BigInt den = (BigInt(y) - BigInt(dy)) * (q - p);
  return narrow(ceil_div(num, den));
}

Amount swap_out_for_exact_in(const Amount& x, const Amount& y, const Amount& dx,
                             const Rational& fee) {
  check_fee(fee);
  const BigInt p = mp::numerator(fee);
  const BigInt q = mp::denominator(fee);
  const BigInt effective = BigInt(dx) * (q - p);
  const BigInt den = BigInt(x) * q + effective;
  if (den == 0) return Amount(0);
  return narrow(effective * BigInt(y) / den);
}

Amount LpLedger::balance_of(const Address& a) const {
  auto it = balances.find(a);
  return it == balances.end() ? Amount(0) : it->second;
}

PoolHistory::PoolHistory(Address pair, Address token, Address numeraire, int token_decimals)
    : id_{pair, token, numeraire, false}, token_decimals_(token_decimals) {
  if (token == numeraire) throw Error(ErrorCode::Precondition, "token equals numeraire");
}

ReservePoint make_point(BlockNumber block, std::int64_t log_index, const Amount& reserve_token,
                        const Amount& reserve_weth, int token_decimals) {
  ReservePoint pt;
  pt.block = block;
  pt.log_index = log_index;
  pt.reserve_token = reserve_token;
  pt.reserve_weth = reserve_weth;
  static const BigInt kWethUnit = pow10(18);
  if (reserve_token != 0) {
    pt.price = Rational(BigInt(reserve_weth) * pow10(static_cast<unsigned>(token_decimals)),
                        BigInt(reserve_token) * kWethUnit);
  }
  pt.liquidity = Rational(BigInt(reserve_weth) * 2, kWethUnit);
  return pt;
}

void PoolHistory::apply(const EventRecord& ev) {
  if (const auto* pc = ev.as<evdecode::PairCreated>()) {
    if (pc->pair != id_.pair) {
      throw Error(ErrorCode::Precondition, "PairCreated for a different pair");
    }
    const bool forward = pc->token0 == id_.token && pc->token1 == id_.numeraire;
    const bool reverse = pc->token1 == id_.token && pc->token0 == id_.numeraire;
    if (!forward && !reverse) {
      throw Error(ErrorCode::Precondition, "PairCreated does not list token/numeraire");
    }
    if (created_) throw Error(ErrorCode::Precondition, "pair created twice");
    id_.token_is_token0 = forward;
    created_ = true;
    creation_block_ = ev.block;
    return;
  }
  if (ev.emitter != id_.pair) {
    throw Error(ErrorCode::Precondition, "event not emitted by pair " + id_.pair.to_string());
  }
  if (!created_) {
    throw Error(ErrorCode::OrientationUnknown,
                "pair event at block " + std::to_string(ev.block) + " before PairCreated");
  }
  switch (ev.kind()) {
    case evdecode::EventKind::Sync: {
      const auto& s = std::get<evdecode::Sync>(ev.args);
      const Amount& token_side = id_.token_is_token0 ? s.reserve0 : s.reserve1;
      const Amount& weth_side = id_.token_is_token0 ? s.reserve1 : s.reserve0;
      points_.push_back(make_point(ev.block, ev.log_index, token_side, weth_side, token_decimals_));
      break;
    }
    case evdecode::EventKind::Mint:
      ++ledger_.mints;
      break;
    case evdecode::EventKind::Burn:
      ++ledger_.burns;
      break;
    case evdecode::EventKind::Transfer:
      apply_lp_transfer(std::get<evdecode::Transfer>(ev.args));
      break;
    case evdecode::EventKind::PairCreated:
      break;
  }
}

void PoolHistory::apply_lp_transfer(const evdecode::Transfer& t) {
  ++ledger_.lp_transfer;
  auto credit = [&](const Address& a) {
    if (t.amount != 0) ledger_.balances[a] += t.amount;
  };
  auto debit = [&](const Address& a) {
    auto it = ledger_.balances.find(a);
    const Amount have = it == ledger_.balances.end() ? Amount(0) : it->second;
    if (have < t.amount) {
      throw Error(ErrorCode::LedgerInconsistency,
                  "LP transfer of " + to_decimal(t.amount) + " from " + a.to_string() +
                      " exceeds balance " + to_decimal(have));
    }
    if (t.amount == 0) return;
    it->second -= t.amount;
    if (it->second == 0) ledger_.balances.erase(it);
  };
  if (t.from.is_zero()) {
    ledger_.total_supply += t.amount;
    credit(t.to);
  } else if (t.to.is_zero() && t.from == id_.pair) {
    // Pair burning the LP tokens it was sent.
    debit(t.from);
    ledger_.total_supply -= t.amount;
  } else {
    debit(t.from);
    credit(t.to);
  }
}

std::vector<SeriesPoint> series(const PoolHistory& history, SeriesKind kind) {
  if (history.points().empty()) {
    throw Error(ErrorCode::EmptyHistory, "pool " + history.id().pair.to_string() + " has no Sync");
  }
  std::vector<SeriesPoint> out;
  out.reserve(history.points().size());
  const Rational* last_price = nullptr;
  for (const auto& pt : history.points()) {
    if (kind == SeriesKind::Liquidity) {
      out.push_back({pt.block, pt.liquidity});
      continue;
    }
    if (pt.price) last_price = &*pt.price;
    if (last_price) out.push_back({pt.block, *last_price});
  }
  return out;
}

std::vector<PoolHistory> reconstruct_pools(std::span<const EventRecord> events,
                                           const Address& token, const Address& numeraire,
                                           int token_decimals) {
  std::vector<PoolHistory> pools;
  std::map<Address, std::size_t> by_pair;
  for (const auto& ev : events) {
    if (const auto* pc = ev.as<evdecode::PairCreated>()) {
      const bool lists = (pc->token0 == token && pc->token1 == numeraire) ||
                         (pc->token1 == token && pc->token0 == numeraire);
      if (!lists || by_pair.contains(pc->pair)) continue;
      by_pair.emplace(pc->pair, pools.size());
      pools.emplace_back(pc->pair, token, numeraire, token_decimals);
      pools.back().apply(ev);
      continue;
    }
    auto it = by_pair.find(ev.emitter);
    if (it != by_pair.end()) pools[it->second].apply(ev);
  }
  return pools;
}

std::optional<PoolHistory> select_weth_pool(std::span<const EventRecord> events,
                                            const Address& token, const Address& numeraire,
                                            int token_decimals) {
  auto pools = reconstruct_pools(events, token, numeraire, token_decimals);
  if (pools.empty()) return std::nullopt;
  auto best = std::min_element(pools.begin(), pools.end(), [](const auto& a, const auto& b) {
    if (a.n_syncs() != b.n_syncs()) return a.n_syncs() > b.n_syncs();
    if (a.creation_block() != b.creation_block()) return a.creation_block() < b.creation_block();
    return a.id().pair < b.id().pair;
  });
  return std::move(*best);
}

void write_series_csv(std::ostream& out, const PoolHistory& history) {
  out << "block,price_num,price_den,liquidity_num,liquidity_den\n";
  const Rational* last_price = nullptr;
  for (const auto& pt : history.points()) {
    if (pt.price) last_price = &*pt.price;
    out << pt.block << ',';
    if (last_price) {
      out << mp::numerator(*last_price) << ',' << mp::denominator(*last_price);
    } else {
      out << ',';
    }
    out << ',' << mp::numerator(pt.liquidity) << ',' << mp::denominator(pt.liquidity) << '\n';
  }
}

}  // namespace rugwatch::poolstate
