#include <gtest/gtest.h>

#include <sstream>

#include "builders.hpp"
#include "rugwatch/labeler.hpp"
#include "rugwatch/simulator.hpp"

using namespace rugwatch;
using namespace rugwatch::labeler;
using rugwatch::testing::addr;

namespace {

const corpus::Deployment kDeployment{};
const Address kToken = addr(0x10);
const Address kPair = addr(0x20);
constexpr BlockNumber kHorizon = 10'000'000;
constexpr BlockNumber kMonth = 30 * 24 * 3600 / 13;

struct Step {
  BlockNumber block;
  std::int64_t weth;
  std::int64_t tokens;
};

corpus::TokenInput token_with(const std::vector<Step>& steps, int burns = 0) {
  rugwatch::testing::StreamBuilder sb;
  sb.pair_created(steps.front().block - 1, kDeployment.factory, kToken, kDeployment.weth, kPair);
  for (const auto& s : steps) sb.sync(s.block, kPair, Amount(s.tokens), Amount(s.weth));
  for (int i = 0; i < burns; ++i) {
    sb.burn(steps.back().block + 1 + i, kPair, addr(5), 1, 1, addr(5));
  }
  corpus::TokenInput t;
  t.token = kToken;
  t.meta = evdecode::TokenMeta{kToken, 18, "T", steps.front().block - 10};
  t.events = sb.events();
  return t;
}

LabelConfig config() {
  LabelConfig c;
  c.horizon_block = kHorizon;
  c.deployment = kDeployment;
  return c;
}

// Peak, rug to zero, long silence.
std::vector<Step> rug_steps(int n_syncs) {
  std::vector<Step> s;
  const BlockNumber start = kHorizon - 3 * kMonth;
  for (int i = 0; i < n_syncs - 1; ++i) s.push_back({start + i * 10, 100 + i, 1000 - i});
  s.push_back({start + n_syncs * 10, 0, 0});
  return s;
}

}  // namespace

TEST(Eligibility, StrictlyMoreThanFiveSyncs) {
  auto five = token_with(rug_steps(5));
  EXPECT_EQ(label(five, config()).label, Label::Unlabeled);
  auto six = token_with(rug_steps(6));
  const auto r = label(six, config());
  EXPECT_EQ(r.label, Label::Malicious);
  EXPECT_EQ(r.rule, Rule::FastRugPull);
  EXPECT_EQ(r.evidence.n_syncs, 6);
}

TEST(Eligibility, MissingMetaOrNonWethPool) {
  auto t = token_with(rug_steps(8));
  t.meta.reset();
  EXPECT_EQ(label(t, config()).label, Label::Unlabeled);
  auto c = config();
  c.deployment.weth = addr(0x44);
  EXPECT_EQ(label(token_with(rug_steps(8)), c).label, Label::Unlabeled);
}

TEST(Label, RecentActivityBlocksMalicious) {
  auto steps = rug_steps(8);
  steps.push_back({kHorizon - 100, 0, 0});
  EXPECT_EQ(label(token_with(steps), config()).label, Label::Unlabeled);
}

TEST(Label, PartialWithdrawalIsNotFastRugPull) {
  auto steps = rug_steps(8);
  steps.back().weth = 1;
  steps.back().tokens = 1'000'000;  // price collapses, liquidity stays above zero
  const auto r = label(token_with(steps, /*burns=*/1), config());
  EXPECT_EQ(r.label, Label::Unlabeled);
  EXPECT_LT(*r.evidence.liq_md, 1.0);
  const auto nb = label(token_with(steps, 0), config());
  EXPECT_EQ(nb.label, Label::Malicious);
  EXPECT_EQ(nb.rule, Rule::NoBurnPriceCollapse);
}

TEST(Label, PriceDropThresholdIsInclusive) {
  // Price falls from 1 to exactly 0.1: MD = 0.9.
  const BlockNumber start = kHorizon - 3 * kMonth;
  std::vector<Step> s;
  for (int i = 0; i < 6; ++i) s.push_back({start + i, 1000, 1000});
  s.push_back({start + 10, 100, 1000});
  const auto r = label(token_with(s), config());
  EXPECT_EQ(r.rule, Rule::NoBurnPriceCollapse);
  auto strict = config();
  strict.thresholds.theta_price = parse_decimal_rational("0.9000001");
  EXPECT_EQ(label(token_with(s), strict).label, Label::Unlabeled);
}

TEST(Label, RecoveryAboveThresholdIsUnlabeled) {
  const BlockNumber start = kHorizon - 3 * kMonth;
  std::vector<Step> s;
  for (int i = 0; i < 6; ++i) s.push_back({start + i, 1000, 1000});
  s.push_back({start + 10, 10, 1000});
  s.push_back({start + 11, 30, 1000});  // RC = 20/990 > 0.01
  EXPECT_EQ(label(token_with(s), config()).label, Label::Unlabeled);
}

TEST(Label, AllowlistWinsConflicts) {
  auto c = config();
  c.allowlist.insert(kToken);
  const auto r = label(token_with(rug_steps(8)), c);
  EXPECT_EQ(r.label, Label::NonMalicious);
  EXPECT_EQ(r.rule, Rule::Allowlist);
}

TEST(Label, EventsAfterHorizonAreIgnored) {
  auto steps = rug_steps(8);
  auto t = token_with(steps);
  const auto before = label(t, config());
  rugwatch::testing::StreamBuilder late;
  late.sync(kHorizon + 5, kPair, 1000, 1000);
  t.events.push_back(late.events()[0]);
  EXPECT_EQ(label(t, config()), before);
}

TEST(Label, RaisingPriceThresholdOnlyRemovesMalicious) {
  simulator::BatchSpec spec;
  spec.counts = {{simulator::ScenarioKind::SellRugPull, 15},
                 {simulator::ScenarioKind::MintTrapDoor, 10},
                 {simulator::ScenarioKind::SimpleRugPull, 10}};
  rugwatch::testing::TempDir dir("monotone");
  simulator::generate_batch(spec, 4, dir.path());
  const auto tokens = corpus::load_tokens(corpus::CorpusPaths{dir.path()});
  auto c = config();
  const auto base = label_all(tokens, c);
  for (const char* theta : {"0.95", "0.99", "0.999", "1"}) {
    c.thresholds.theta_price = parse_decimal_rational(theta);
    const auto raised = label_all(tokens, c);
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (raised[i].label == Label::Malicious) ASSERT_EQ(base[i].label, Label::Malicious);
      if (base[i].label != Label::Malicious) ASSERT_EQ(raised[i].label, base[i].label);
    }
  }
}

TEST(Label, ParallelMatchesSequential) {
  simulator::BatchSpec spec;
  spec.counts = {{simulator::ScenarioKind::SimpleRugPull, 10},
                 {simulator::ScenarioKind::Healthy, 10}};
  rugwatch::testing::TempDir dir("parallel");
  simulator::generate_batch(spec, 5, dir.path());
  const auto tokens = corpus::load_tokens(corpus::CorpusPaths{dir.path()});
  auto c = config();
  c.allowlist = corpus::read_allowlist(corpus::CorpusPaths{dir.path()}.allowlist());
  EXPECT_EQ(label_all(tokens, c, 1), label_all(tokens, c, 6));
}

TEST(LabelsCsv, RoundTrip) {
  std::vector<LabelRecord> labels(2);
  labels[0].token = addr(1);
  labels[0].label = Label::Malicious;
  labels[0].rule = Rule::FastRugPull;
  labels[0].evidence = {1.0, 0.0, 0.97, 0.0, true, 12, 1};
  labels[1].token = addr(2);
  rugwatch::testing::TempDir dir("labels");
  {
    std::ofstream out(dir / "labels.csv");
    write_labels_csv(out, labels);
  }
  EXPECT_EQ(read_labels_csv(dir / "labels.csv"), labels);
  const auto text = rugwatch::testing::slurp(dir / "labels.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "token,label,rule,liq_md,liq_rc,price_md,price_rc,inactive,n_syncs,burns");
}

TEST(Summary, CountsPartitionLabels) {
  EXPECT_EQ(summarize({}, Thresholds{}).total, 0);
  std::vector<LabelRecord> labels(5);
  labels[0].label = Label::Malicious;
  labels[0].rule = Rule::FastRugPull;
  labels[0].evidence.liq_md = 1.0;
  labels[0].evidence.liq_rc = 0.0;
  labels[1].label = Label::Malicious;
  labels[1].rule = Rule::NoBurnPriceCollapse;
  labels[1].evidence.price_md = 0.95;
  labels[1].evidence.price_rc = 0.05;
  labels[2].label = Label::NonMalicious;
  labels[2].rule = Rule::Allowlist;
  const auto s = summarize(labels, Thresholds{});
  EXPECT_EQ(s.total, 5);
  EXPECT_EQ(s.malicious, 2);
  EXPECT_EQ(s.fast_rug_pull + s.no_burn_price_collapse, s.malicious);
  EXPECT_EQ(s.non_malicious, 1);
  EXPECT_EQ(s.unlabeled, 2);
  EXPECT_EQ(s.liquidity_recovery.zero, 1);
  EXPECT_EQ(s.price_recovery.below_tenth, 1);
  EXPECT_NE(s.to_markdown().find("| Malicious | 2 |"), std::string::npos);
}
