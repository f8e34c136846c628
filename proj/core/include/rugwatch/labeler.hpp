#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rugwatch/common.hpp"
#include "rugwatch/corpus.hpp"
#include "rugwatch/distfeat.hpp"
#include "rugwatch/poolstate.hpp"

namespace rugwatch::labeler {

enum class Label { Malicious, NonMalicious, Unlabeled };
enum class Rule { FastRugPull, NoBurnPriceCollapse, Allowlist, None };

std::string_view to_string(Label label);
std::string_view to_string(Rule rule);
Label parse_label(std::string_view text);
Rule parse_rule(std::string_view text);

struct Thresholds {
  Rational theta_liq{1};
  Rational theta_price{9, 10};
  Rational theta_rc{1, 100};

  nlohmann::json to_json() const;
};

struct Evidence {
  std::optional<double> liq_md;
  std::optional<double> liq_rc;
  std::optional<double> price_md;
  std::optional<double> price_rc;
  bool inactive = false;
  std::int64_t n_syncs = 0;
  std::int64_t burns = 0;

  bool operator==(const Evidence&) const = default;
};

struct LabelRecord {
  Address token;
  Label label = Label::Unlabeled;
  Rule rule = Rule::None;
  Evidence evidence;

  bool operator==(const LabelRecord&) const = default;
};

struct LabelConfig {
  Thresholds thresholds;
  BlockNumber horizon_block = 0;
  std::set<Address> allowlist;
  corpus::Deployment deployment;
  std::chrono::seconds inactivity_window = std::chrono::hours(24 * 30);
};

/// Decimals known, a WETH pool exists, and that pool has more than 5 Syncs.
bool eligibility(const std::optional<evdecode::TokenMeta>& meta,
                 const std::optional<poolstate::PoolHistory>& history);

/// Rules evaluated on the stream truncated at the horizon:
///   FastRugPull          inactive, liquidity MD >= theta_liq, liquidity RC <= theta_rc
///   NoBurnPriceCollapse  inactive, no Burn, price MD >= theta_price, price RC <= theta_rc
/// An allowlisted token is NonMalicious even when a rule fires (a warning is
/// logged). Ineligible tokens are Unlabeled with whatever evidence exists.
LabelRecord label(const corpus::TokenInput& token, const LabelConfig& config);

std::vector<LabelRecord> label_all(std::span<const corpus::TokenInput> tokens,
                                   const LabelConfig& config, unsigned threads = 1);

/// Index into the triggering series (liquidity for FastRugPull, price for
/// NoBurnPriceCollapse) of its peak, and that point's block.
struct DropPoint {
  std::size_t h_index = 0;
  BlockNumber block = 0;
};

/// Recomputes the peak preceding the maneuver for a Malicious record.
std::optional<DropPoint> drop_point(const poolstate::PoolHistory& history, Rule rule);

/// CSV `token,label,rule,liq_md,liq_rc,price_md,price_rc,inactive,n_syncs,burns`.
void write_labels_csv(std::ostream& out, std::span<const LabelRecord> labels);
std::vector<LabelRecord> read_labels_csv(const std::filesystem::path& path);

struct RecoveryHistogram {
  std::int64_t zero = 0;          // RC = 0
  std::int64_t below_tenth = 0;   // 0 < RC < 0.1
  std::int64_t recovered = 0;     // 0.1 <= RC <= 1
};

struct Summary {
  std::int64_t total = 0;
  std::int64_t malicious = 0;
  std::int64_t non_malicious = 0;
  std::int64_t unlabeled = 0;
  std::int64_t fast_rug_pull = 0;
  std::int64_t no_burn_price_collapse = 0;
  std::int64_t allowlist = 0;
  std::int64_t inactive = 0;
  /// Among tokens whose liquidity MD reached theta_liq.
  RecoveryHistogram liquidity_recovery;
  /// Among tokens whose price MD reached theta_price.
  RecoveryHistogram price_recovery;

  nlohmann::ordered_json to_json() const;
  std::string to_markdown() const;
};

Summary summarize(std::span<const LabelRecord> labels, const Thresholds& thresholds);

}  // namespace rugwatch::labeler
