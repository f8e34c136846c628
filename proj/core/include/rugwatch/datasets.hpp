#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"
#include "rugwatch/corpus.hpp"
#include "rugwatch/labeler.hpp"

namespace rugwatch::datasets {

enum class Method { Activity, Early24 };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

/// One snapshot row. Optional fields are written as empty CSV cells and read
/// back as NaN (missing) by the trainer.
struct FeatureVector {
  std::optional<double> liq_curve;
  std::optional<double> tx_curve;
  std::int64_t n_pool_syncs = 0;
  double weth = 0.0;
  std::optional<double> price;
  double liquidity = 0.0;
  std::int64_t lp_transfer = 0;
  std::int64_t mints = 0;
  std::int64_t burns = 0;
  std::int64_t n_transfers = 0;
  std::int64_t n_unique_addresses = 0;
  double clus_coeff = 0.0;
  std::int64_t difference_token_pool = 0;
  int lock = 0;
  int yield = 0;
  int burn = 0;
  int label = 0;
  Address token;
  BlockNumber eval_block = 0;

  bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::size_t kNumFeatures = 16;

inline constexpr std::array<std::string_view, 19> kColumns{
    "liq_curve", "tx_curve",     "n_pool_syncs", "weth",     "price",
    "liquidity", "lp_transfer",  "mints",        "burns",    "n_transfers",
    "n_unique_addresses",        "clus_coeff",   "difference_token_pool",
    "lock",      "yield",        "burn",         "label",    "token",
    "eval_block"};

/// The 16 model inputs in column order, NaN where missing.
std::array<double, kNumFeatures> features_of(const FeatureVector& row);

struct EvalPlan {
  Address token;
  std::vector<BlockNumber> eval_blocks;
  /// Early24 hour of each block (1..24); zero for Activity plans.
  std::vector<int> hours;
  Method method = Method::Activity;
  int label = 0;
};

struct PlannedRow {
  int hour = 0;
  FeatureVector row;
};

struct SnapshotConfig {
  Address weth = Address::parse(corpus::kMainnetWeth);
  std::vector<Address> lockers{Address::parse(corpus::kDefaultLocker)};
  BlockNumber period_blocks = 6500;
};

/// Features of `token` computed from its events with block <= eval_block.
/// Curves (liq_curve, tx_curve, clus_coeff) take the value of the most
/// recent period completed by eval_block on the grid anchored at pool
/// creation; before the first period completes they use the partial period
/// up to eval_block. Throws NoData when the selected pool has no Sync yet.
FeatureVector snapshot(const corpus::TokenInput& token, BlockNumber eval_block,
                       const SnapshotConfig& config);

struct PlanContext {
  BlockNumber horizon_block = 0;
  Address weth = Address::parse(corpus::kMainnetWeth);
  BlockNumber blocks_per_hour = 277;
  std::uint64_t seed = 0;
};

/// One block uniform in (pool creation, drop block) per Malicious token and
/// five distinct blocks uniform in (pool creation, last activity] per
/// NonMalicious token. Unlabeled tokens are skipped, as are malicious tokens
/// whose open interval is empty (SpanTooShort, logged). Sorted by token.
std::vector<EvalPlan> plan_activity(std::span<const labeler::LabelRecord> labels,
                                    std::span<const corpus::TokenInput> tokens,
                                    const PlanContext& context);

/// pool creation + k * blocks_per_hour for k = 1..24. Malicious tokens keep
/// only the hours strictly before their drop block.
std::vector<EvalPlan> plan_early24(std::span<const labeler::LabelRecord> labels,
                                   std::span<const corpus::TokenInput> tokens,
                                   const PlanContext& context);

/// Snapshots every planned block, sorted by (token, eval_block). Rows whose
/// snapshot raises NoData are dropped with a warning.
std::vector<PlannedRow> assemble(std::span<const EvalPlan> plans,
                                 std::span<const corpus::TokenInput> tokens,
                                 const SnapshotConfig& config, unsigned threads = 1);

/// Throws SchemaViolation naming the offending field.
void validate(const FeatureVector& row);

void write_csv(std::ostream& out, std::span<const FeatureVector> rows);
void write_csv(const std::filesystem::path& path, std::span<const FeatureVector> rows);
/// Validates the header and every row.
std::vector<FeatureVector> read_csv(const std::filesystem::path& path);

struct BuildInfo {
  std::uint64_t seed = 0;
  labeler::Thresholds thresholds;
  BlockNumber horizon_block = 0;
  BlockNumber blocks_per_hour = 277;
  BlockNumber period_blocks = 6500;
};

/// Activity: dataset.csv. Early24: hour_01.csv .. hour_24.csv. Writes
/// manifest.json with seed, method, thresholds, row counts and feature names.
void build(Method method, std::span<const PlannedRow> rows, const std::filesystem::path& out,
           const BuildInfo& info);

/// "hour_07.csv".
std::string hour_file(int hour);

}  // namespace rugwatch::datasets
