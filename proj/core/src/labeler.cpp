#include "rugwatch/labeler.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rugwatch/parallel.hpp"

namespace rugwatch::labeler {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Malicious: return "Malicious";
    case Label::NonMalicious: return "NonMalicious";
    case Label::Unlabeled: return "Unlabeled";
  }
  return "?";
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::FastRugPull: return "FastRugPull";
    case Rule::NoBurnPriceCollapse: return "NoBurnPriceCollapse";
    case Rule::Allowlist: return "Allowlist";
    case Rule::None: return "None";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  for (auto l : {Label::Malicious, Label::NonMalicious, Label::Unlabeled}) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorCode::SchemaViolation, "unknown label '" + std::string(text) + "'");
}

Rule parse_rule(std::string_view text) {
  for (auto r : {Rule::FastRugPull, Rule::NoBurnPriceCollapse, Rule::Allowlist, Rule::None}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorCode::SchemaViolation, "unknown rule '" + std::string(text) + "'");
}

nlohmann::json Thresholds::to_json() const {
  auto text = [](const Rational& r) {
    std::ostringstream os;
    os << mp::numerator(r) << '/' << mp::denominator(r);
    return os.str();
  };
  return {{"theta_liq", text(theta_liq)},
          {"theta_price", text(theta_price)},
          {"theta_rc", text(theta_rc)}};
}

bool eligibility(const std::optional<evdecode::TokenMeta>& meta,
                 const std::optional<poolstate::PoolHistory>& history) {
  return meta.has_value() && history.has_value() && history->n_syncs() > 5;
}

namespace {

std::vector<Rational> values_of(const std::vector<poolstate::SeriesPoint>& pts) {
  std::vector<Rational> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.push_back(p.value);
  return v;
}

struct SeriesDrop {
  std::optional<Rational> md;
  Rational rc{0};
};

SeriesDrop drop_of(const std::vector<Rational>& values) {
  SeriesDrop out;
  if (values.empty()) return out;
  const auto stats = distfeat::max_drop<Rational>(values);
  out.md = stats.md;
  out.rc = distfeat::recovery<Rational>(values, stats);
  return out;
}

std::span<const evdecode::EventRecord> until(std::span<const evdecode::EventRecord> events,
                                             BlockNumber block) {
  auto end = std::upper_bound(events.begin(), events.end(), block,
                              [](BlockNumber b, const auto& ev) { return b < ev.block; });
  return events.subspan(0, static_cast<std::size_t>(end - events.begin()));
}

}  // namespace

LabelRecord label(const corpus::TokenInput& token, const LabelConfig& config) {
  LabelRecord rec;
  rec.token = token.token;
  const auto events = until(token.events, config.horizon_block);

  std::optional<poolstate::PoolHistory> history;
  if (token.meta) {
    history = poolstate::select_weth_pool(events, token.token, config.deployment.weth,
                                          token.meta->decimals);
  }
  rec.evidence.inactive = distfeat::is_inactive(events, config.horizon_block,
                                                distfeat::BlockClock(events),
                                                config.inactivity_window);
  if (!history || history->n_syncs() == 0) return rec;

  rec.evidence.n_syncs = static_cast<std::int64_t>(history->n_syncs());
  rec.evidence.burns = history->ledger().burns;
  const auto liq = drop_of(values_of(poolstate::series(*history, poolstate::SeriesKind::Liquidity)));
  const auto price = drop_of(values_of(poolstate::series(*history, poolstate::SeriesKind::Price)));
  if (liq.md) {
    rec.evidence.liq_md = to_double(*liq.md);
    rec.evidence.liq_rc = to_double(liq.rc);
  }
  if (price.md) {
    rec.evidence.price_md = to_double(*price.md);
    rec.evidence.price_rc = to_double(price.rc);
  }
  if (!eligibility(token.meta, history)) return rec;

  const auto& th = config.thresholds;
  const bool inactive = rec.evidence.inactive;
  const bool fast = inactive && liq.md && *liq.md >= th.theta_liq && liq.rc <= th.theta_rc;
  const bool no_burn = inactive && rec.evidence.burns == 0 && price.md &&
                       *price.md >= th.theta_price && price.rc <= th.theta_rc;

  if (config.allowlist.contains(token.token)) {
    if (fast || no_burn) {
      spdlog::warn("allowlisted token {} also meets the {} rule; keeping NonMalicious",
                   token.token.to_string(), fast ? "FastRugPull" : "NoBurnPriceCollapse");
    }
    rec.label = Label::NonMalicious;
    rec.rule = Rule::Allowlist;
  } else if (fast) {
    rec.label = Label::Malicious;
    rec.rule = Rule::FastRugPull;
  } else if (no_burn) {
    rec.label = Label::Malicious;
    rec.rule = Rule::NoBurnPriceCollapse;
  }
  return rec;
}

std::vector<LabelRecord> label_all(std::span<const corpus::TokenInput> tokens,
                                   const LabelConfig& config, unsigned threads) {
  std::vector<LabelRecord> out(tokens.size());
  parallel_for(tokens.size(), threads, [&](std::size_t i) { out[i] = label(tokens[i], config); });
  return out;
}

std::optional<DropPoint> drop_point(const poolstate::PoolHistory& history, Rule rule) {
  poolstate::SeriesKind kind;
  if (rule == Rule::FastRugPull) {
    kind = poolstate::SeriesKind::Liquidity;
  } else if (rule == Rule::NoBurnPriceCollapse) {
    kind = poolstate::SeriesKind::Price;
  } else {
    return std::nullopt;
  }
  if (history.n_syncs() == 0) return std::nullopt;
  const auto pts = poolstate::series(history, kind);
  if (pts.empty()) return std::nullopt;
  const auto values = values_of(pts);
  const auto stats = distfeat::max_drop<Rational>(values);
  return DropPoint{stats.h_index, pts[stats.h_index].block};
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::SchemaViolation, "'" + s + "' is not a number");
  }
}

}  // namespace

void write_labels_csv(std::ostream& out, std::span<const LabelRecord> labels) {
  out << "token,label,rule,liq_md,liq_rc,price_md,price_rc,inactive,n_syncs,burns\n";
  for (const auto& r : labels) {
    out << r.token.to_string() << ',' << to_string(r.label) << ',' << to_string(r.rule) << ','
        << opt(r.evidence.liq_md) << ',' << opt(r.evidence.liq_rc) << ','
        << opt(r.evidence.price_md) << ',' << opt(r.evidence.price_rc) << ','
        << (r.evidence.inactive ? "true" : "false") << ',' << r.evidence.n_syncs << ','
        << r.evidence.burns << '\n';
  }
}

std::vector<LabelRecord> read_labels_csv(const std::filesystem::path& path) {
  const auto rows = corpus::read_csv(path);
  if (rows.empty() || rows[0].size() != 10 || rows[0][0] != "token") {
    throw Error(ErrorCode::SchemaViolation, path.string() + " is not a labels CSV");
  }
  std::vector<LabelRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 10) {
      throw Error(ErrorCode::SchemaViolation,
                  path.string() + " line " + std::to_string(i + 1) + ": expected 10 fields");
    }
    LabelRecord r;
    r.token = Address::parse(f[0]);
    r.label = parse_label(f[1]);
    r.rule = parse_rule(f[2]);
    r.evidence.liq_md = parse_opt(f[3]);
    r.evidence.liq_rc = parse_opt(f[4]);
    r.evidence.price_md = parse_opt(f[5]);
    r.evidence.price_rc = parse_opt(f[6]);
    r.evidence.inactive = f[7] == "true";
    r.evidence.n_syncs = std::stoll(f[8]);
    r.evidence.burns = std::stoll(f[9]);
    out.push_back(r);
  }
  return out;
}

namespace {

void bucket(RecoveryHistogram& h, double rc) {
  if (rc <= 0.0) {
    ++h.zero;
  } else if (rc < 0.1) {
    ++h.below_tenth;
  } else {
    ++h.recovered;
  }
}

nlohmann::ordered_json histogram_json(const RecoveryHistogram& h) {
  nlohmann::ordered_json j;
  j["rc_eq_0"] = h.zero;
  j["rc_between_0_and_0.1"] = h.below_tenth;
  j["rc_0.1_to_1"] = h.recovered;
  return j;
}

std::string pct(std::int64_t part, std::int64_t whole) {
  if (whole == 0) return "0.0%";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << 100.0 * static_cast<double>(part) / static_cast<double>(whole) << '%';
  return os.str();
}

}  // namespace

Summary summarize(std::span<const LabelRecord> labels, const Thresholds& thresholds) {
  Summary s;
  const double theta_liq = to_double(thresholds.theta_liq);
  const double theta_price = to_double(thresholds.theta_price);
  for (const auto& r : labels) {
    ++s.total;
    switch (r.label) {
      case Label::Malicious: ++s.malicious; break;
      case Label::NonMalicious: ++s.non_malicious; break;
      case Label::Unlabeled: ++s.unlabeled; break;
    }
    switch (r.rule) {
      case Rule::FastRugPull: ++s.fast_rug_pull; break;
      case Rule::NoBurnPriceCollapse: ++s.no_burn_price_collapse; break;
      case Rule::Allowlist: ++s.allowlist; break;
      case Rule::None: break;
    }
    if (r.evidence.inactive) ++s.inactive;
    if (r.evidence.liq_md && *r.evidence.liq_md >= theta_liq && r.evidence.liq_rc) {
      bucket(s.liquidity_recovery, *r.evidence.liq_rc);
    }
    if (r.evidence.price_md && *r.evidence.price_md >= theta_price && r.evidence.price_rc) {
      bucket(s.price_recovery, *r.evidence.price_rc);
    }
  }
  return s;
}

nlohmann::ordered_json Summary::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["labels"] = {{"Malicious", malicious}, {"NonMalicious", non_malicious}, {"Unlabeled", unlabeled}};
  j["rules"] = {{"FastRugPull", fast_rug_pull},
                {"NoBurnPriceCollapse", no_burn_price_collapse},
                {"Allowlist", allowlist}};
  j["inactive"] = inactive;
  j["liquidity_recovery"] = histogram_json(liquidity_recovery);
  j["price_recovery"] = histogram_json(price_recovery);
  return j;
}

std::string Summary::to_markdown() const {
  std::ostringstream os;
  os << "| Label | Count | Share |\n|---|---:|---:|\n";
  os << "| Malicious | " << malicious << " | " << pct(malicious, total) << " |\n";
  os << "| NonMalicious | " << non_malicious << " | " << pct(non_malicious, total) << " |\n";
  os << "| Unlabeled | " << unlabeled << " | " << pct(unlabeled, total) << " |\n\n";
  os << "| Malicious rule | Count | Share of malicious |\n|---|---:|---:|\n";
  os << "| FastRugPull | " << fast_rug_pull << " | " << pct(fast_rug_pull, malicious) << " |\n";
  os << "| NoBurnPriceCollapse | " << no_burn_price_collapse << " | "
     << pct(no_burn_price_collapse, malicious) << " |\n\n";
  os << "Inactive tokens: " << inactive << " (" << pct(inactive, total) << ")\n\n";
  const auto lt = liquidity_recovery.zero + liquidity_recovery.below_tenth + liquidity_recovery.recovered;
  const auto pt = price_recovery.zero + price_recovery.below_tenth + price_recovery.recovered;
  os << "| Recovery | Liquidity | Price |\n|---|---:|---:|\n";
  os << "| RC = 0 | " << pct(liquidity_recovery.zero, lt) << " | " << pct(price_recovery.zero, pt)
     << " |\n";
  os << "| 0 < RC < 0.1 | " << pct(liquidity_recovery.below_tenth, lt) << " | "
     << pct(price_recovery.below_tenth, pt) << " |\n";
  os << "| 0.1 <= RC <= 1 | " << pct(liquidity_recovery.recovered, lt) << " | "
     << pct(price_recovery.recovered, pt) << " |\n";
  return os.str();
}

}  // namespace rugwatch::labeler
