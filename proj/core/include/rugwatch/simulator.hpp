#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"
#include "rugwatch/corpus.hpp"
#include "rugwatch/evdecode.hpp"
#include "rugwatch/labeler.hpp"
#include "rugwatch/random.hpp"

namespace rugwatch::simulator {

enum class ScenarioKind { SimpleRugPull, SellRugPull, MintTrapDoor, Healthy, InactiveBenign };
enum class LpAction { Hold, Lock, Burn };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view text);
std::string_view to_string(LpAction action);

struct ScenarioParams {
  /// Wei of WETH and base units of the token added at pool creation.
  Amount initial_weth;
  Amount initial_tokens;
  /// Share of the supply the developer keeps outside the pool.
  Rational dev_retained_fraction{0};
  int n_investors = 5;
  /// Expected trades per block (Healthy, InactiveBenign).
  double trade_intensity = 1.0 / 1500.0;
  /// Blocks from pool creation to the maneuver (rug pulls) or to the last
  /// trade (InactiveBenign). Healthy tokens trade until near the horizon.
  BlockNumber lifetime_blocks = 20000;
  LpAction lp_action = LpAction::Hold;
  /// Investor WETH spent before a rug pull, as a multiple of initial_weth.
  double pump_multiple = 3.0;
  BlockNumber creation_block = 9'000'000;
  BlockNumber pool_delay_blocks = 100;
  int decimals = 18;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::SimpleRugPull;
  ScenarioParams params;
  std::uint64_t seed = 0;
};

struct Truth {
  Address token;
  ScenarioKind scenario = ScenarioKind::SimpleRugPull;
  labeler::Label expected_label = labeler::Label::Unlabeled;
  labeler::Rule expected_rule = labeler::Rule::None;
  /// Peak of the series the rule watches (liquidity or price).
  std::optional<BlockNumber> drop_block;

  bool operator==(const Truth&) const = default;
};

struct SimContext {
  corpus::Deployment deployment;
  BlockNumber horizon_block = 10'000'000;
};

struct GeneratedToken {
  evdecode::TokenMeta meta;
  Address pair;
  std::vector<evdecode::EventRecord> events;
  Truth truth;
  bool allowlisted = false;
};

/// Replays one token lifecycle with the pool's integer swap math. Throws
/// InvalidParams when the parameters cannot realize the scenario.
GeneratedToken generate(const Scenario& scenario, const SimContext& context);

/// Random parameters for one token of `kind`, drawn from ranges that
/// realize the scenario under default thresholds.
Scenario random_scenario(ScenarioKind kind, Rng& rng, BlockNumber start_block,
                         BlockNumber creation_window);

struct BatchSpec {
  std::map<ScenarioKind, int> counts;
  BlockNumber start_block = 9'000'000;
  BlockNumber creation_window = 300'000;
  BlockNumber horizon_block = 10'000'000;

  nlohmann::ordered_json to_json() const;
  static BatchSpec from_json(const nlohmann::json& j);
};

/// Writes a corpus (manifest.json, meta.jsonl, events/, allowlist.txt,
/// truth.csv) under `out` and returns the truth rows sorted by token.
std::vector<Truth> generate_batch(const BatchSpec& spec, std::uint64_t seed,
                                  const std::filesystem::path& out,
                                  const corpus::Deployment& deployment = {},
                                  unsigned threads = 1);

void write_truth_csv(const std::filesystem::path& path, const std::vector<Truth>& truth);
std::vector<Truth> read_truth_csv(const std::filesystem::path& path);

}  // namespace rugwatch::simulator
