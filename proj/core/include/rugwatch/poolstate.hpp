#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rugwatch/common.hpp"
#include "rugwatch/evdecode.hpp"

namespace rugwatch::poolstate {

using evdecode::EventRecord;

/// Smallest integer input dx with (x + (1 - fee) dx)(y - dy) >= x y.
/// Throws InsufficientLiquidity if dy >= y, Precondition on dy == 0 or a fee
/// outside [0, 1).
Amount swap_in_for_exact_out(const Amount& x, const Amount& y, const Amount& dy,
                             const Rational& fee);

/// Largest integer output dy with (x + (1 - fee) dx)(y - dy) >= x y.
Amount swap_out_for_exact_in(const Amount& x, const Amount& y, const Amount& dx,
                             const Rational& fee);

/// 0.3%, the Uniswap V2 pool fee.
Rational default_fee();

struct PoolId {
  Address pair;
  Address token;
  Address numeraire;
  bool token_is_token0 = false;

  bool operator==(const PoolId&) const = default;
};

struct ReservePoint {
  BlockNumber block = 0;
  std::int64_t log_index = 0;
  Amount reserve_token;
  Amount reserve_weth;
  /// WETH per whole token; empty while the token reserve is zero.
  std::optional<Rational> price;
  /// 2 x WETH reserve, in WETH.
  Rational liquidity;

  bool operator==(const ReservePoint&) const = default;
};

struct LpLedger {
  std::map<Address, Amount> balances;
  Amount total_supply;
  std::int64_t lp_transfer = 0;
  std::int64_t mints = 0;
  std::int64_t burns = 0;

  Amount balance_of(const Address& a) const;

  bool operator==(const LpLedger&) const = default;
};

/// Event-sourced state of one pair contract, oriented so that the "token"
/// side is the tracked token and the other side is the numeraire.
class PoolHistory {
 public:
  PoolHistory(Address pair, Address token, Address numeraire, int token_decimals);

  /// Appends the effect of `ev`. PairCreated (emitted by the factory) must
  /// precede any pair event; Sync/Mint/Burn/Transfer must be emitted by the
  /// pair. Throws OrientationUnknown or Precondition accordingly.
  void apply(const EventRecord& ev);

  const PoolId& id() const { return id_; }
  bool created() const { return created_; }
  BlockNumber creation_block() const { return creation_block_; }
  int token_decimals() const { return token_decimals_; }
  const std::vector<ReservePoint>& points() const { return points_; }
  const LpLedger& ledger() const { return ledger_; }
  std::size_t n_syncs() const { return points_.size(); }

  bool operator==(const PoolHistory&) const = default;

 private:
  void apply_lp_transfer(const evdecode::Transfer& t);

  PoolId id_;
  int token_decimals_;
  bool created_ = false;
  BlockNumber creation_block_ = 0;
  std::vector<ReservePoint> points_;
  LpLedger ledger_;
};

/// Builds the reserve point for a Sync given the pool orientation.
ReservePoint make_point(BlockNumber block, std::int64_t log_index, const Amount& reserve_token,
                        const Amount& reserve_weth, int token_decimals);

enum class SeriesKind { Price, Liquidity };

struct SeriesPoint {
  BlockNumber block = 0;
  Rational value;
  bool operator==(const SeriesPoint&) const = default;
};

/// One value per Sync. Undefined prices repeat the last defined price and
/// are dropped while none has been seen yet. Throws EmptyHistory.
std::vector<SeriesPoint> series(const PoolHistory& history, SeriesKind kind);

/// Replays a token's merged stream and returns every pair that lists
/// `token` against `numeraire`, each reconstructed from the events it emitted.
std::vector<PoolHistory> reconstruct_pools(std::span<const EventRecord> events,
                                           const Address& token, const Address& numeraire,
                                           int token_decimals);

/// Among the numeraire pools, the one with the most Sync events (ties: the
/// earliest created, then lowest pair address).
std::optional<PoolHistory> select_weth_pool(std::span<const EventRecord> events,
                                            const Address& token, const Address& numeraire,
                                            int token_decimals);

/// CSV `block,price_num,price_den,liquidity_num,liquidity_den`; rows with an
/// undefined price repeat the last defined price (empty while none exists).
void write_series_csv(std::ostream& out, const PoolHistory& history);

}  // namespace rugwatch::poolstate
