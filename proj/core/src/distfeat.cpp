#include "rugwatch/distfeat.hpp"

#include <algorithm>

namespace rugwatch::distfeat {

void BalanceMap::apply(const evdecode::Transfer& t, BlockNumber block, std::int64_t log_index) {
  if (!t.from.is_zero()) {
    auto it = balances_.find(t.from);
    const Amount have = it == balances_.end() ? Amount(0) : it->second;
    if (have < t.amount) {
      throw Error(ErrorCode::LedgerInconsistency,
                  "transfer of " + to_decimal(t.amount) + " from " + t.from.to_string() +
                      " exceeds balance " + to_decimal(have) + " at block " +
                      std::to_string(block));
    }
    if (t.amount != 0) {
      it->second -= t.amount;
      if (it->second == 0) balances_.erase(it);
    }
  }
  if (t.amount != 0) balances_[t.to] += t.amount;
  as_of_ = {block, log_index};
}

Amount BalanceMap::balance_of(const Address& a) const {
  auto it = balances_.find(a);
  return it == balances_.end() ? Amount(0) : it->second;
}

void BalanceMap::set(const Address& a, const Amount& amount) {
  if (amount == 0) {
    balances_.erase(a);
  } else {
    balances_[a] = amount;
  }
}

Rational hhi_exact(const BalanceMap& balances, const AddressSet& exclusions) {
  BigInt sum = 0;
  BigInt sum_sq = 0;
  for (const auto& [addr, bal] : balances.balances()) {
    if (exclusions.contains(addr)) continue;
    const BigInt b(bal);
    sum += b;
    sum_sq += b * b;
  }
  if (sum == 0) throw Error(ErrorCode::EmptyDistribution, "no holder outside the exclusions");
  return Rational(sum_sq, sum * sum);
}

double hhi(const BalanceMap& balances, const AddressSet& exclusions) {
  BigInt sum = 0;
  for (const auto& [addr, bal] : balances.balances()) {
    if (!exclusions.contains(addr)) sum += BigInt(bal);
  }
  if (sum == 0) throw Error(ErrorCode::EmptyDistribution, "no holder outside the exclusions");
  const double total = sum.convert_to<double>();
  // Visit holders in address order so the float sum is reproducible.
  std::vector<std::pair<Address, double>> shares;
  shares.reserve(balances.balances().size());
  for (const auto& [addr, bal] : balances.balances()) {
    if (!exclusions.contains(addr)) shares.emplace_back(addr, to_double(bal) / total);
  }
  std::sort(shares.begin(), shares.end());
  double acc = 0.0;
  for (const auto& [addr, s] : shares) acc += s * s;
  return std::min(1.0, acc);
}

std::vector<HhiPoint> hhi_curve(std::span<const EventRecord> events, const Address& contract,
                                const AddressSet& exclusions, BlockNumber origin,
                                BlockNumber period_blocks, BlockNumber until_block) {
  if (period_blocks <= 0) throw Error(ErrorCode::InvalidParams, "period_blocks must be positive");
  std::vector<HhiPoint> curve;
  BalanceMap balances;
  std::size_t cursor = 0;
  for (std::int64_t k = 0;; ++k) {
    const BlockNumber period_end = origin + (k + 1) * period_blocks - 1;
    if (period_end > until_block) break;
    for (; cursor < events.size() && events[cursor].block <= period_end; ++cursor) {
      const auto& ev = events[cursor];
      if (ev.emitter != contract) continue;
      if (const auto* t = ev.as<evdecode::Transfer>()) balances.apply(*t, ev.block, ev.log_index);
    }
    try {
      curve.push_back({k, hhi(balances, exclusions)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyDistribution) throw;
    }
  }
  return curve;
}

BlockClock::BlockClock(std::span<const EventRecord> events) {
  for (const auto& ev : events) {
    if (ev.timestamp) add(ev.block, *ev.timestamp);
  }
}

void BlockClock::add(BlockNumber block, std::int64_t timestamp) { anchors_[block] = timestamp; }

double BlockClock::seconds_at(BlockNumber block) const {
  if (anchors_.empty()) return static_cast<double>(block) * kSecondsPerBlock;
  auto it = anchors_.upper_bound(block);
  if (it != anchors_.begin()) {
    const auto& [b, ts] = *std::prev(it);
    return static_cast<double>(ts) + static_cast<double>(block - b) * kSecondsPerBlock;
  }
  return static_cast<double>(it->second) - static_cast<double>(it->first - block) * kSecondsPerBlock;
}

std::optional<BlockNumber> last_activity_block(std::span<const EventRecord> events,
                                               BlockNumber horizon_block) {
  std::optional<BlockNumber> last;
  for (const auto& ev : events) {
    if (ev.block > horizon_block) break;
    const auto kind = ev.kind();
    if (kind == evdecode::EventKind::Transfer || kind == evdecode::EventKind::Sync) last = ev.block;
  }
  return last;
}

bool is_inactive(std::span<const EventRecord> events, BlockNumber horizon_block,
                 const BlockClock& clock, std::chrono::seconds window) {
  const auto last = last_activity_block(events, horizon_block);
  if (!last) return true;
  const double idle = clock.seconds_at(horizon_block) - clock.seconds_at(*last);
  return idle > static_cast<double>(window.count());
}

}  // namespace rugwatch::distfeat
