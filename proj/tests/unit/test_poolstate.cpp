#include <gtest/gtest.h>

#include <sstream>

#include "builders.hpp"
#include "oracles.hpp"
#include "rugwatch/poolstate.hpp"
#include "rugwatch/random.hpp"

using namespace rugwatch;
using namespace rugwatch::poolstate;
using rugwatch::testing::addr;

TEST(SwapMath, ExactOutAtZeroFee) {
  EXPECT_EQ(swap_in_for_exact_out(100, 100, 50, Rational(0)), Amount(100));
}

TEST(SwapMath, ExactOutWithDefaultFeeMatchesHandValue) {
  // ceil(1000 * 100 / (0.997 * 900)) = ceil(111.4454...) = 112
  EXPECT_EQ(swap_in_for_exact_out(1000, 1000, 100, default_fee()), Amount(112));
  EXPECT_EQ(rugwatch::testing::bisect_exact_out(1000, 1000, 100, default_fee()), Amount(112));
}

TEST(SwapMath, ExhaustingReserveIsInsufficientLiquidity) {
  try {
    swap_in_for_exact_out(1000, 1000, 1000, default_fee());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientLiquidity);
  }
  EXPECT_THROW(swap_in_for_exact_out(1000, 1000, 0, default_fee()), Error);
  EXPECT_THROW(swap_in_for_exact_out(1000, 1000, 1, Rational(1)), Error);
}

TEST(SwapMath, RandomCasesAgreeWithBisectionOracle) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto c = rugwatch::testing::random_swap_case(rng);
    const Amount dx = swap_in_for_exact_out(c.x, c.y, c.dy, c.fee);
    ASSERT_EQ(dx, rugwatch::testing::bisect_exact_out(c.x, c.y, c.dy, c.fee));
    const Amount out = swap_out_for_exact_in(c.x, c.y, c.dx, c.fee);
    ASSERT_EQ(out, rugwatch::testing::bisect_exact_in(c.x, c.y, c.dx, c.fee));
  }
}

TEST(SwapMath, ZeroFeeProductWithinOneUnit) {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    auto c = rugwatch::testing::random_swap_case(rng);
    const Amount dx = swap_in_for_exact_out(c.x, c.y, c.dy, Rational(0));
    const BigInt k = BigInt(c.x) * BigInt(c.y);
    const BigInt after = (BigInt(c.x) + BigInt(dx)) * (BigInt(c.y) - BigInt(c.dy));
    ASSERT_GE(after, k);
    const BigInt one_less = (BigInt(c.x) + BigInt(dx) - 1) * (BigInt(c.y) - BigInt(c.dy));
    ASSERT_LT(one_less, k);
  }
}

namespace {

const Address kFactory = addr(0xf0);
const Address kWeth = addr(0xee);
const Address kToken = addr(0x11);
const Address kPair = addr(0x99);
const Address kDev = addr(0x01);

PoolHistory fresh(int decimals = 18) {
  PoolHistory h(kPair, kToken, kWeth, decimals);
  h.apply({1, 0, kFactory, evdecode::PairCreated{kToken, kWeth, kPair}, std::nullopt});
  return h;
}

}  // namespace

TEST(PoolHistory, SingleSyncPriceAndLiquidityExact) {
  auto h = fresh();
  h.apply({2, 0, kPair, evdecode::Sync{1000, 1000}, std::nullopt});
  ASSERT_EQ(h.points().size(), 1u);
  EXPECT_EQ(*h.points()[0].price, Rational(1));
  EXPECT_EQ(h.points()[0].liquidity, Rational(2000, BigInt(pow10(18))));
}

TEST(PoolHistory, OrientationFollowsPairCreated) {
  PoolHistory h(kPair, kToken, kWeth, 18);
  h.apply({1, 0, kFactory, evdecode::PairCreated{kWeth, kToken, kPair}, std::nullopt});
  EXPECT_FALSE(h.id().token_is_token0);
  h.apply({2, 0, kPair, evdecode::Sync{5, 7}, std::nullopt});
  EXPECT_EQ(h.points()[0].reserve_weth, Amount(5));
  EXPECT_EQ(h.points()[0].reserve_token, Amount(7));
}

TEST(PoolHistory, EventBeforePairCreatedIsOrientationUnknown) {
  PoolHistory h(kPair, kToken, kWeth, 18);
  try {
    h.apply({2, 0, kPair, evdecode::Sync{1, 1}, std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OrientationUnknown);
  }
}

TEST(PoolHistory, EmptyReservesLeavePriceUndefined) {
  auto h = fresh();
  h.apply({2, 0, kPair, evdecode::Sync{10, 10}, std::nullopt});
  h.apply({3, 0, kPair, evdecode::Sync{0, 0}, std::nullopt});
  EXPECT_FALSE(h.points()[1].price.has_value());
  EXPECT_EQ(h.points()[1].liquidity, Rational(0));
  const auto price = series(h, SeriesKind::Price);
  ASSERT_EQ(price.size(), 2u);
  EXPECT_EQ(price[1].value, price[0].value);
}

TEST(PoolHistory, LpMintTransferUpdatesLedger) {
  auto h = fresh();
  h.apply({2, 0, kPair, evdecode::Transfer{Address::zero(), kDev, 1000}, std::nullopt});
  EXPECT_EQ(h.ledger().total_supply, Amount(1000));
  EXPECT_EQ(h.ledger().mints, 0);
  EXPECT_EQ(h.ledger().lp_transfer, 1);
  EXPECT_EQ(h.ledger().balance_of(kDev), Amount(1000));
}

TEST(PoolHistory, OverdraftIsLedgerInconsistency) {
  auto h = fresh();
  try {
    h.apply({2, 0, kPair, evdecode::Transfer{kDev, addr(3), 1}, std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LedgerInconsistency);
  }
}

TEST(PoolHistory, SupplyEqualsSumOfBalancesUnderRandomSequences) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto h = fresh();
    std::vector<Address> holders{kDev, addr(2), addr(3), addr(4), kPair};
    BlockNumber block = 2;
    for (int step = 0; step < 60; ++step) {
      const auto kind = rng.uniform_int(0, 3);
      evdecode::Transfer t;
      if (kind == 0 || h.ledger().total_supply == 0) {
        t = {Address::zero(), holders[rng.uniform_int(0, 4)], Amount(rng.uniform_int(1, 1000))};
      } else {
        const Address from = holders[rng.uniform_int(0, 4)];
        const Amount have = h.ledger().balance_of(from);
        if (have == 0) continue;
        const auto amt = Amount(rng.uniform_int(0, have.convert_to<std::int64_t>()));
        Address to = kind == 1 ? Address::zero() : holders[rng.uniform_int(0, 4)];
        t = {from, to, amt};
      }
      h.apply({block++, 0, kPair, t, std::nullopt});
      Amount sum = 0;
      for (const auto& [a, b] : h.ledger().balances) sum += b;
      ASSERT_EQ(sum, h.ledger().total_supply);
    }
  }
}

TEST(Series, OnePointPerSyncAndEmptyHistoryThrows) {
  auto h = fresh();
  try {
    series(h, SeriesKind::Liquidity);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyHistory);
  }
  for (int i = 0; i < 5; ++i) h.apply({2 + i, 0, kPair, evdecode::Sync{100 + i, 100}, std::nullopt});
  EXPECT_EQ(series(h, SeriesKind::Liquidity).size(), 5u);
  EXPECT_EQ(series(h, SeriesKind::Price).size(), 5u);
}

TEST(SelectPool, PicksMostSyncsAmongWethPairs) {
  const Address other_pair = addr(0x98);
  const Address usdc_pair = addr(0x97);
  rugwatch::testing::StreamBuilder sb;
  sb.pair_created(1, kFactory, kToken, kWeth, kPair)
      .pair_created(1, kFactory, kToken, kWeth, other_pair)
      .pair_created(1, kFactory, kToken, addr(0x55), usdc_pair);
  for (int i = 0; i < 3; ++i) sb.sync(2 + i, kPair, 10, 10);
  for (int i = 0; i < 5; ++i) sb.sync(10 + i, other_pair, 10, 10);
  for (int i = 0; i < 9; ++i) sb.sync(20 + i, usdc_pair, 10, 10);
  const auto pool = select_weth_pool(sb.events(), kToken, kWeth, 18);
  ASSERT_TRUE(pool.has_value());
  EXPECT_EQ(pool->id().pair, other_pair);
  EXPECT_EQ(pool->n_syncs(), 5u);
  EXPECT_FALSE(select_weth_pool(sb.events(), kToken, addr(0x44), 18).has_value());
}

TEST(Replay, SameStreamSameHistory) {
  rugwatch::testing::StreamBuilder sb;
  sb.pair_created(1, kFactory, kToken, kWeth, kPair)
      .transfer(2, kPair, Address::zero(), kDev, 500)
      .sync(2, kPair, 1000, 50)
      .mint(2, kPair, kDev, 1000, 50);
  const auto a = select_weth_pool(sb.events(), kToken, kWeth, 18);
  const auto b = select_weth_pool(sb.events(), kToken, kWeth, 18);
  EXPECT_EQ(*a, *b);
  std::ostringstream csv;
  write_series_csv(csv, *a);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "block,price_num,price_den,liquidity_num,liquidity_den");
}
