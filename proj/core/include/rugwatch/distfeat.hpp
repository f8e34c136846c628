#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rugwatch/common.hpp"
#include "rugwatch/evdecode.hpp"

namespace rugwatch::distfeat {

using evdecode::EventRecord;
using AddressSet = std::set<Address>;

/// Holder balances folded from Transfer events of one ERC-20 contract.
/// Transfers from the zero address mint; transfers to it are credited to
/// the zero address (exclusions decide whether it counts as a holder).
class BalanceMap {
 public:
  /// Throws LedgerInconsistency when a non-mint transfer exceeds the
  /// sender's balance.
  void apply(const evdecode::Transfer& transfer, BlockNumber block, std::int64_t log_index);

  const std::unordered_map<Address, Amount>& balances() const { return balances_; }
  std::pair<BlockNumber, std::int64_t> as_of() const { return as_of_; }
  Amount balance_of(const Address& a) const;

  void set(const Address& a, const Amount& amount);

 private:
  std::unordered_map<Address, Amount> balances_;
  std::pair<BlockNumber, std::int64_t> as_of_{-1, -1};
};

/// Herfindahl-Hirschman index sum(B^2) / (sum B)^2 over holders outside
/// `exclusions`, exactly. Throws EmptyDistribution when no holder remains.
Rational hhi_exact(const BalanceMap& balances, const AddressSet& exclusions);
double hhi(const BalanceMap& balances, const AddressSet& exclusions);

struct HhiPoint {
  std::int64_t period_index = 0;
  double hhi = 0.0;
};

/// HHI sampled at the end of every period of `period_blocks` blocks counted
/// from `origin`, covering periods whose last block is <= `until_block`.
/// Each sample is the index of the balances after the last transfer at or
/// before the period's last block; periods with no holders are skipped.
/// Only Transfer events emitted by `contract` are folded.
std::vector<HhiPoint> hhi_curve(std::span<const EventRecord> events, const Address& contract,
                                const AddressSet& exclusions, BlockNumber origin,
                                BlockNumber period_blocks, BlockNumber until_block);

/// Maximum drop from the global peak: h is the first argmax of the whole
/// series, l the first argmin of the suffix starting at h. `md` is empty when
/// the peak is zero.
template <class T>
struct DropStats {
  std::optional<T> md;
  std::size_t h_index = 0;
  std::size_t l_index = 0;
};

template <class T>
DropStats<T> max_drop(std::span<const T> series) {
  if (series.empty()) throw Error(ErrorCode::Precondition, "max_drop of an empty series");
  DropStats<T> stats;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i] > series[stats.h_index]) stats.h_index = i;
  }
  stats.l_index = stats.h_index;
  for (std::size_t i = stats.h_index + 1; i < series.size(); ++i) {
    if (series[i] < series[stats.l_index]) stats.l_index = i;
  }
  const T& high = series[stats.h_index];
  if (high > T(0)) stats.md = T(high - series[stats.l_index]) / high;
  return stats;
}

/// (X_S - X_l) / (X_h - X_l), zero when X_h == X_l, capped to [0, 1].
template <class T>
T recovery(std::span<const T> series, const DropStats<T>& stats) {
  const T& high = series[stats.h_index];
  const T& low = series[stats.l_index];
  if (!(high > low)) return T(0);
  T rc = T(series.back() - low) / T(high - low);
  if (rc > T(1)) return T(1);
  if (rc < T(0)) return T(0);
  return rc;
}

inline constexpr double kSecondsPerBlock = 13.0;

/// Block height to wall time. Known (block, timestamp) pairs anchor the
/// mapping; other blocks extrapolate from the nearest anchor at 13 s/block.
class BlockClock {
 public:
  BlockClock() = default;
  explicit BlockClock(std::span<const EventRecord> events);

  void add(BlockNumber block, std::int64_t timestamp);
  double seconds_at(BlockNumber block) const;

 private:
  std::map<BlockNumber, std::int64_t> anchors_;
};

/// True iff no Transfer and no Sync in `events` lies within `window` before
/// `horizon_block`. Events after the horizon are ignored.
bool is_inactive(std::span<const EventRecord> events, BlockNumber horizon_block,
                 const BlockClock& clock,
                 std::chrono::seconds window = std::chrono::hours(24 * 30));

/// Block of the last Transfer or Sync at or before the horizon.
std::optional<BlockNumber> last_activity_block(std::span<const EventRecord> events,
                                               BlockNumber horizon_block);

}  // namespace rugwatch::distfeat
