#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rugwatch/corpus.hpp"
#include "rugwatch/datasets.hpp"
#include "rugwatch/distfeat.hpp"
#include "rugwatch/evdecode.hpp"
#include "rugwatch/gbdt.hpp"
#include "rugwatch/labeler.hpp"
#include "rugwatch/poolstate.hpp"
#include "rugwatch/simulator.hpp"
#include "rugwatch/txgraph.hpp"

namespace rugwatch::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  BlockNumber horizon = 10'000'000;
  std::string theta_liq = "1";
  std::string theta_price = "0.9";
  std::string theta_rc = "0.01";
  BlockNumber blocks_per_hour = 277;
  BlockNumber period_blocks = 6500;
  std::vector<std::string> lockers;
  bool verbose = false;

  labeler::Thresholds thresholds() const {
    return {parse_decimal_rational(theta_liq), parse_decimal_rational(theta_price),
            parse_decimal_rational(theta_rc)};
  }

  std::vector<Address> locker_addresses(const corpus::Deployment& d) const {
    if (lockers.empty()) return d.lockers;
    std::vector<Address> out;
    for (const auto& l : lockers) out.push_back(Address::parse(l));
    return out;
  }

  json to_json() const {
    json j;
    j["seed"] = seed;
    j["horizon_block"] = horizon;
    j["theta_liq"] = theta_liq;
    j["theta_price"] = theta_price;
    j["theta_rc"] = theta_rc;
    j["blocks_per_hour"] = blocks_per_hour;
    j["period_blocks"] = period_blocks;
    j["lockers"] = lockers;
    return j;
  }
};

json manifest(std::string_view stage, const Globals& g, json flags) {
  json m;
  m["stage"] = stage;
  m["config"] = g.to_json();
  m["flags"] = std::move(flags);
  return m;
}

corpus::Deployment deployment_for(const fs::path& corpus_dir, const Globals& g) {
  auto d = corpus::load_deployment(corpus::CorpusPaths{corpus_dir});
  d.lockers = g.locker_addresses(d);
  return d;
}

std::vector<Address> token_list(const std::vector<std::string>& tokens, const std::string& file) {
  std::set<Address> out;
  for (const auto& t : tokens) out.insert(Address::parse(t));
  if (!file.empty()) {
    const auto more = corpus::read_allowlist(file);
    out.insert(more.begin(), more.end());
  }
  if (out.empty()) throw Error(ErrorCode::InvalidParams, "no tokens given");
  return {out.begin(), out.end()};
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string spec;
  std::string out;
};

void simulate(const SimulateArgs& a, const Globals& g, std::ostream& out) {
  const auto spec_json = corpus::read_json(a.spec);
  auto spec = simulator::BatchSpec::from_json(nlohmann::json::parse(spec_json.dump()));
  const auto truth = simulator::generate_batch(spec, g.seed, a.out, corpus::Deployment{}, g.threads);
  std::map<std::string, int> counts;
  for (const auto& t : truth) ++counts[std::string(simulator::to_string(t.scenario))];
  out << "simulated " << truth.size() << " tokens into " << a.out << '\n';
  for (const auto& [k, n] : counts) out << "  " << k << ": " << n << '\n';
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string rpc;
  std::string logs;
  std::vector<std::string> tokens;
  std::string tokens_file;
  std::string meta;
  BlockNumber from = 0;
  BlockNumber to = -1;
  BlockNumber page_blocks = 2000;
  std::string out;
};

void ingest(const IngestArgs& a, const Globals& g, std::ostream& out) {
  if (a.rpc.empty() == a.logs.empty()) {
    throw Error(ErrorCode::InvalidParams, "give exactly one of --rpc or --logs");
  }
  const auto tokens = token_list(a.tokens, a.tokens_file);
  corpus::Deployment deployment;
  deployment.lockers = g.locker_addresses(deployment);

  // Source of decoded events per emitting contract.
  std::map<Address, std::vector<evdecode::EventRecord>> offline;
  if (!a.logs.empty()) {
    std::ifstream in(a.logs);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + a.logs);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto ev = evdecode::decode_log(nlohmann::json::parse(line));
        offline[ev.emitter].push_back(std::move(ev));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnknownSignature) throw;
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedData, std::string("raw log line: ") + e.what());
      }
    }
  }
  evdecode::RpcEndpoint rpc{a.rpc, a.page_blocks};
  const BlockNumber to = a.to < 0 ? g.horizon : a.to;
  const auto source = [&](const Address& contract) {
    if (!a.logs.empty()) {
      auto it = offline.find(contract);
      if (it == offline.end()) return std::vector<evdecode::EventRecord>{};
      return evdecode::filter_range(it->second, std::span(&contract, 1), a.from, to);
    }
    return evdecode::fetch_range(rpc, contract, a.from, to);
  };

  const auto factory_events = source(deployment.factory);
  const corpus::CorpusPaths paths{a.out};
  fs::create_directories(paths.events_dir());
  std::size_t written = 0;
  for (const auto& token : tokens) {
    std::vector<evdecode::EventRecord> merged;
    for (const auto& ev : factory_events) {
      const auto* pc = ev.as<evdecode::PairCreated>();
      if (!pc) continue;
      const bool has_token = pc->token0 == token || pc->token1 == token;
      const bool has_weth = pc->token0 == deployment.weth || pc->token1 == deployment.weth;
      if (!has_token || !has_weth) continue;
      merged.push_back(ev);
      auto pair_events = source(pc->pair);
      merged.insert(merged.end(), pair_events.begin(), pair_events.end());
    }
    for (auto& ev : source(token)) {
      if (ev.kind() == evdecode::EventKind::Transfer) merged.push_back(std::move(ev));
    }
    evdecode::canonicalize(merged);
    evdecode::write_fixture(paths.events_for(token), merged);
    ++written;
  }
  if (!a.meta.empty()) fs::copy_file(a.meta, paths.meta(), fs::copy_options::overwrite_existing);

  json flags;
  flags["rpc"] = a.rpc;
  flags["logs"] = a.logs;
  flags["tokens"] = a.tokens;
  flags["tokens_file"] = a.tokens_file;
  flags["meta"] = a.meta;
  flags["from"] = a.from;
  flags["to"] = to;
  flags["page_blocks"] = a.page_blocks;
  auto m = manifest("ingest", g, flags);
  m["deployment"] = json::parse(deployment.to_json().dump());
  corpus::write_json(paths.manifest(), m);
  out << "ingested " << written << " token streams into " << a.out << '\n';
}

// --- reconstruct ----------------------------------------------------------

struct ReconstructArgs {
  std::string corpus;
  std::vector<std::string> tokens;
  std::string out;
};

void reconstruct(const ReconstructArgs& a, const Globals& g, std::ostream& out) {
  const corpus::CorpusPaths paths{a.corpus};
  const auto deployment = deployment_for(a.corpus, g);
  const auto metas = fs::exists(paths.meta()) ? evdecode::read_meta(paths.meta()).tokens
                                               : std::vector<evdecode::TokenMeta>{};
  fs::create_directories(a.out);
  for (const auto& t : token_list(a.tokens, "")) {
    auto meta = std::find_if(metas.begin(), metas.end(), [&](const auto& m) { return m.token == t; });
    if (meta == metas.end()) {
      throw Error(ErrorCode::NoData, "token " + t.to_string() + " has no metadata");
    }
    auto events = evdecode::read_fixture(paths.events_for(t));
    std::span<const evdecode::EventRecord> view(events);
    auto end = std::upper_bound(view.begin(), view.end(), g.horizon,
                                [](BlockNumber b, const auto& ev) { return b < ev.block; });
    view = view.subspan(0, static_cast<std::size_t>(end - view.begin()));
    const auto pool = poolstate::select_weth_pool(view, t, deployment.weth, meta->decimals);
    if (!pool) throw Error(ErrorCode::NoData, "token " + t.to_string() + " has no WETH pool");

    std::ofstream series(fs::path(a.out) / (t.to_string() + "_pool.csv"), std::ios::binary);
    poolstate::write_series_csv(series, *pool);

    std::vector<evdecode::EventRecord> transfers;
    for (const auto& ev : view) {
      if (ev.emitter == t && ev.kind() == evdecode::EventKind::Transfer) transfers.push_back(ev);
    }
    const auto periods = txgraph::build_periods(transfers, g.period_blocks, pool->creation_block());
    std::ofstream graph(fs::path(a.out) / (t.to_string() + "_periods.csv"), std::ios::binary);
    txgraph::write_period_csv(graph, periods);

    std::ofstream hhi(fs::path(a.out) / (t.to_string() + "_hhi.csv"), std::ios::binary);
    hhi << "period,tx_curve,liq_curve\n";
    const auto tx = distfeat::hhi_curve(view, t, {Address::zero(), pool->id().pair},
                                        pool->creation_block(), g.period_blocks, g.horizon);
    const auto liq = distfeat::hhi_curve(view, pool->id().pair, {Address::zero()},
                                         pool->creation_block(), g.period_blocks, g.horizon);
    std::map<std::int64_t, std::pair<std::string, std::string>> rows;
    for (const auto& p : tx) rows[p.period_index].first = format_double(p.hhi);
    for (const auto& p : liq) rows[p.period_index].second = format_double(p.hhi);
    for (const auto& [k, v] : rows) hhi << k << ',' << v.first << ',' << v.second << '\n';
    out << t.to_string() << ": pool " << pool->id().pair.to_string() << ", " << pool->n_syncs()
        << " syncs, " << periods.size() << " active periods\n";
  }
  json flags;
  flags["corpus"] = a.corpus;
  flags["tokens"] = a.tokens;
  corpus::write_json(fs::path(a.out) / "manifest.json", manifest("reconstruct", g, flags));
}

// --- label ----------------------------------------------------------------

struct LabelArgs {
  std::string corpus;
  std::string allowlist;
  std::string out;
};

void label(const LabelArgs& a, const Globals& g, std::ostream& out) {
  const corpus::CorpusPaths paths{a.corpus};
  labeler::LabelConfig config;
  config.thresholds = g.thresholds();
  config.horizon_block = g.horizon;
  config.deployment = deployment_for(a.corpus, g);
  std::string allow_path = a.allowlist;
  if (allow_path.empty() && fs::exists(paths.allowlist())) allow_path = paths.allowlist().string();
  if (!allow_path.empty()) config.allowlist = corpus::read_allowlist(allow_path);

  const auto tokens = corpus::load_tokens(paths, g.threads);
  const auto labels = labeler::label_all(tokens, config, g.threads);
  fs::create_directories(a.out);
  {
    std::ofstream csv(fs::path(a.out) / "labels.csv", std::ios::binary);
    labeler::write_labels_csv(csv, labels);
  }
  const auto summary = labeler::summarize(labels, config.thresholds);
  corpus::write_json(fs::path(a.out) / "summary.json", summary.to_json());
  {
    std::ofstream md(fs::path(a.out) / "summary.md", std::ios::binary);
    md << summary.to_markdown();
  }
  json flags;
  flags["corpus"] = a.corpus;
  flags["allowlist"] = allow_path;
  auto m = manifest("label", g, flags);
  m["deployment"] = json::parse(config.deployment.to_json().dump());
  corpus::write_json(fs::path(a.out) / "manifest.json", m);
  out << "labeled " << labels.size() << " tokens: " << summary.malicious << " Malicious, "
      << summary.non_malicious << " NonMalicious, " << summary.unlabeled << " Unlabeled\n";
}

// --- build-dataset --------------------------------------------------------

struct BuildArgs {
  std::string corpus;
  std::string labels;
  std::string method = "activity";
  std::string out;
};

void build_dataset(const BuildArgs& a, const Globals& g, std::ostream& out) {
  const auto method = datasets::parse_method(a.method);
  const corpus::CorpusPaths paths{a.corpus};
  const auto deployment = deployment_for(a.corpus, g);
  fs::path labels_path = a.labels;
  if (fs::is_directory(labels_path)) labels_path /= "labels.csv";
  const auto labels = labeler::read_labels_csv(labels_path);
  const auto tokens = corpus::load_tokens(paths, g.threads);

  datasets::PlanContext ctx{g.horizon, deployment.weth, g.blocks_per_hour, g.seed};
  const auto plans = method == datasets::Method::Activity
                         ? datasets::plan_activity(labels, tokens, ctx)
                         : datasets::plan_early24(labels, tokens, ctx);
  datasets::SnapshotConfig snap{deployment.weth, deployment.lockers, g.period_blocks};
  const auto rows = datasets::assemble(plans, tokens, snap, g.threads);
  datasets::BuildInfo info{g.seed, g.thresholds(), g.horizon, g.blocks_per_hour, g.period_blocks};
  datasets::build(method, rows, a.out, info);

  // Record the invocation next to the dataset manifest.
  auto m = corpus::read_json(fs::path(a.out) / "manifest.json");
  json flags;
  flags["corpus"] = a.corpus;
  flags["labels"] = labels_path.string();
  flags["method"] = a.method;
  m["stage"] = "build-dataset";
  m["config"] = g.to_json();
  m["flags"] = flags;
  corpus::write_json(fs::path(a.out) / "manifest.json", m);
  out << "built " << datasets::to_string(method) << " dataset with " << rows.size() << " rows from "
      << plans.size() << " tokens\n";
}

// --- train / evaluate -----------------------------------------------------

gbdt::Dataset to_dataset(const std::vector<datasets::FeatureVector>& rows) {
  gbdt::Dataset d;
  d.x = gbdt::Matrix(rows.size(), datasets::kNumFeatures);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto f = datasets::features_of(rows[r]);
    std::copy(f.begin(), f.end(), d.x.data.begin() + static_cast<std::ptrdiff_t>(r * d.x.cols));
    d.y.push_back(rows[r].label);
    d.group.push_back(rows[r].token);
  }
  for (std::size_t i = 0; i < datasets::kNumFeatures; ++i) {
    d.feature_names.emplace_back(datasets::kColumns[i]);
  }
  return d;
}

struct TrainArgs {
  std::string dataset;
  std::string method;
  std::vector<int> hours;
  int trials = 30;
  int folds = 5;
  int max_rounds = 200;
  int patience = 20;
  int permutation_repeats = 5;
  std::string out;
};

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

struct TrainOutcome {
  gbdt::CvReport cv;
  gbdt::Model model;
};

TrainOutcome train_one(const gbdt::Dataset& data, const gbdt::SearchConfig& sc, int folds,
                       const fs::path& dir, int repeats) {
  fs::create_directories(dir);
  TrainOutcome o;
  o.cv = gbdt::cross_validate(data, sc, folds);
  corpus::write_json(dir / "cv.json", o.cv.to_json());

  gbdt::SearchConfig final_sc = sc;
  final_sc.seed = mix_seed(sc.seed, 0x616c6cULL);
  const auto best = gbdt::search(data, final_sc);
  o.model = gbdt::train(data.x, data.y, best.hp, mix_seed(final_sc.seed, 1)).model;
  o.model.feature_names = data.feature_names;
  o.model.save(dir / "model.json");

  const auto gain = gbdt::gain_importance(o.model);
  const auto perm = gbdt::permutation_importance(o.model, data.x, data.y, repeats,
                                                 mix_seed(sc.seed, 0x7065726dULL));
  std::ofstream imp(dir / "importance.csv", std::ios::binary);
  imp << "feature,gain,permutation\n";
  for (std::size_t i = 0; i < gain.size(); ++i) {
    imp << data.feature_names[i] << ',' << format_double(gain[i]) << ',' << format_double(perm[i])
        << '\n';
  }
  return o;
}

void train(const TrainArgs& a, const Globals& g, std::ostream& out) {
  const fs::path dir = a.dataset;
  const auto dm = corpus::read_json(dir / "manifest.json");
  const auto method = datasets::parse_method(
      a.method.empty() ? dm.at("method").get<std::string>() : a.method);
  if (dm.at("method").get<std::string>() != datasets::to_string(method)) {
    throw Error(ErrorCode::InvalidParams, "dataset was built for method " +
                                              dm.at("method").get<std::string>());
  }
  gbdt::SearchConfig sc;
  sc.n_trials = a.trials;
  sc.max_rounds = a.max_rounds;
  sc.patience = a.patience;
  sc.seed = g.seed;
  sc.threads = g.threads;
  fs::create_directories(a.out);

  json flags;
  flags["dataset"] = a.dataset;
  flags["method"] = datasets::to_string(method);
  flags["hours"] = a.hours;
  flags["trials"] = a.trials;
  flags["folds"] = a.folds;
  flags["max_rounds"] = a.max_rounds;
  flags["patience"] = a.patience;
  flags["permutation_repeats"] = a.permutation_repeats;

  if (method == datasets::Method::Activity) {
    const auto data = to_dataset(datasets::read_csv(dir / "dataset.csv"));
    const auto o = train_one(data, sc, a.folds, a.out, a.permutation_repeats);
    std::ofstream rep(fs::path(a.out) / "report.csv", std::ios::binary);
    rep << "metric,mean,std\n";
    rep << "accuracy," << format_double(o.cv.mean.accuracy) << ','
        << format_double(o.cv.std.accuracy) << '\n';
    rep << "recall," << format_double(o.cv.mean.recall) << ',' << format_double(o.cv.std.recall)
        << '\n';
    rep << "precision," << format_double(o.cv.mean.precision) << ','
        << format_double(o.cv.std.precision) << '\n';
    rep << "f1," << format_double(o.cv.mean.f1) << ',' << format_double(o.cv.std.f1) << '\n';
    out << "activity: accuracy " << fixed(o.cv.mean.accuracy, 4) << " +/- "
        << fixed(o.cv.std.accuracy, 4) << ", recall " << fixed(o.cv.mean.recall, 4) << ", precision "
        << fixed(o.cv.mean.precision, 4) << ", f1 " << fixed(o.cv.mean.f1, 4) << '\n';
  } else {
    std::vector<int> hours = a.hours;
    if (hours.empty()) {
      for (int h = 1; h <= 24; ++h) hours.push_back(h);
    }
    std::sort(hours.begin(), hours.end());
    hours.erase(std::unique(hours.begin(), hours.end()), hours.end());
    std::ofstream rep(fs::path(a.out) / "report.csv", std::ios::binary);
    rep << "hour,accuracy,sensitivity,precision,f1\n";
    for (int h : hours) {
      if (h < 1 || h > 24) throw Error(ErrorCode::InvalidParams, "hour must be in 1..24");
      const auto data = to_dataset(datasets::read_csv(dir / datasets::hour_file(h)));
      gbdt::SearchConfig hsc = sc;
      hsc.seed = mix_seed(g.seed, static_cast<std::uint64_t>(h));
      std::ostringstream sub;
      sub << "hour_" << std::setw(2) << std::setfill('0') << h;
      const auto o = train_one(data, hsc, a.folds, fs::path(a.out) / sub.str(), a.permutation_repeats);
      const auto& m = o.cv.mean;
      rep << h << ',' << format_double(m.accuracy) << ',' << format_double(m.recall) << ','
          << format_double(m.precision) << ',' << format_double(m.f1) << '\n';
      out << "hour " << h << ": accuracy " << fixed(m.accuracy, 3) << ", sensitivity "
          << fixed(m.recall, 3) << ", precision " << fixed(m.precision, 3) << ", f1 "
          << fixed(m.f1, 3) << '\n';
    }
  }
  corpus::write_json(fs::path(a.out) / "manifest.json", manifest("train", g, flags));
}

struct EvaluateArgs {
  std::string model;
  std::string dataset;
  std::string out;
};

void evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out) {
  const auto model = gbdt::Model::load(a.model);
  const auto rows = datasets::read_csv(a.dataset);
  const auto data = to_dataset(rows);
  const auto prob = model.predict(data.x);
  const auto m = gbdt::evaluate(prob, data.y);
  fs::create_directories(a.out);
  json metrics;
  metrics["n_rows"] = rows.size();
  metrics["accuracy"] = m.accuracy;
  metrics["recall"] = m.recall;
  metrics["precision"] = m.precision;
  metrics["f1"] = m.f1;
  corpus::write_json(fs::path(a.out) / "metrics.json", metrics);
  std::ofstream pred(fs::path(a.out) / "predictions.csv", std::ios::binary);
  pred << "token,eval_block,label,probability\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pred << rows[i].token.to_string() << ',' << rows[i].eval_block << ',' << rows[i].label << ','
         << format_double(prob[i]) << '\n';
  }
  json flags;
  flags["model"] = a.model;
  flags["dataset"] = a.dataset;
  corpus::write_json(fs::path(a.out) / "manifest.json", manifest("evaluate", g, flags));
  out << "accuracy " << fixed(m.accuracy, 4) << ", recall " << fixed(m.recall, 4) << ", precision "
      << fixed(m.precision, 4) << ", f1 " << fixed(m.f1, 4) << '\n';
}

// --- report ---------------------------------------------------------------

struct ReportArgs {
  std::string labels;
  std::vector<std::string> runs;
  std::string out;
};

void report(const ReportArgs& a, const Globals& g, std::ostream& out) {
  std::ostringstream md;
  md << "# rugwatch report\n\n";
  if (!a.labels.empty()) {
    md << "## Labels\n\n";
    std::ifstream in(fs::path(a.labels) / "summary.md");
    if (!in) throw Error(ErrorCode::Io, "cannot open labels summary in " + a.labels);
    md << in.rdbuf() << '\n';
  }
  for (const auto& run : a.runs) {
    const auto m = corpus::read_json(fs::path(run) / "manifest.json");
    const auto method = datasets::parse_method(m.at("flags").at("method").get<std::string>());
    const auto rows = corpus::read_csv(fs::path(run) / "report.csv");
    if (method == datasets::Method::Activity) {
      md << "## Activity-based method (" << run << ")\n\n";
      md << "| XGBoost | Mean | Std |\n|---|---:|---:|\n";
      const std::map<std::string, std::string> names{
          {"accuracy", "Accuracy"}, {"recall", "Recall"}, {"precision", "Precision"},
          {"f1", "F1-score"}};
      for (std::size_t i = 1; i < rows.size(); ++i) {
        md << "| " << names.at(rows[i].at(0)) << " | " << fixed(std::stod(rows[i].at(1)), 4)
           << " | " << fixed(std::stod(rows[i].at(2)), 4) << " |\n";
      }
    } else {
      md << "## 24-Early method (" << run << ")\n\n";
      md << "| Hour | Accuracy | Sensitivity | Precision | F1_Score |\n|---:|---:|---:|---:|---:|\n";
      for (std::size_t i = 1; i < rows.size(); ++i) {
        md << "| " << rows[i].at(0);
        for (std::size_t c = 1; c < 5; ++c) md << " | " << fixed(std::stod(rows[i].at(c)), 3);
        md << " |\n";
      }
    }
    md << '\n';
  }
  fs::create_directories(a.out);
  std::ofstream(fs::path(a.out) / "report.md", std::ios::binary) << md.str();
  json flags;
  flags["labels"] = a.labels;
  flags["runs"] = a.runs;
  corpus::write_json(fs::path(a.out) / "manifest.json", manifest("report", g, flags));
  out << md.str();
}

void add_globals(CLI::App& app, Globals& g) {
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--horizon", g.horizon, "Horizon block for labeling")->capture_default_str();
  app.add_option("--theta-liq", g.theta_liq, "Liquidity maximum-drop threshold")
      ->capture_default_str();
  app.add_option("--theta-price", g.theta_price, "Price maximum-drop threshold")
      ->capture_default_str();
  app.add_option("--theta-rc", g.theta_rc, "Recovery threshold")->capture_default_str();
  app.add_option("--blocks-per-hour", g.blocks_per_hour, "Blocks per hour")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--period-blocks", g.period_blocks, "Blocks per feature period")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--locker", g.lockers, "LP locker address (repeatable)");
  app.add_flag("-v,--verbose", g.verbose, "Log progress");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rugwatch: rug-pull labeling and early detection for Uniswap V2 tokens",
               "rugwatch"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  add_globals(app, g);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
  c_sim->add_option("--spec", sim.spec, "Batch spec JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Corpus directory")->required();

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "Fetch or import event logs into a corpus");
  c_ing->add_option("--rpc", ing.rpc, "JSON-RPC endpoint URL");
  c_ing->add_option("--logs", ing.logs, "JSONL file of raw RPC log objects")
      ->check(CLI::ExistingFile);
  c_ing->add_option("--token", ing.tokens, "Token address (repeatable)");
  c_ing->add_option("--tokens-file", ing.tokens_file, "File of token addresses")
      ->check(CLI::ExistingFile);
  c_ing->add_option("--meta", ing.meta, "TokenMeta JSONL to copy into the corpus")
      ->check(CLI::ExistingFile);
  c_ing->add_option("--from", ing.from, "First block")->capture_default_str();
  c_ing->add_option("--to", ing.to, "Last block (default: horizon)");
  c_ing->add_option("--page-blocks", ing.page_blocks, "Blocks per eth_getLogs page")
      ->capture_default_str();
  c_ing->add_option("--out", ing.out, "Corpus directory")->required();

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Export pool, HHI and graph series for tokens");
  c_rec->add_option("--corpus", rec.corpus, "Corpus directory")->required()
      ->check(CLI::ExistingDirectory);
  c_rec->add_option("--token", rec.tokens, "Token address (repeatable)")->required();
  c_rec->add_option("--out", rec.out, "Output directory")->required();

  LabelArgs lab;
  auto* c_lab = app.add_subcommand("label", "Label every token in a corpus");
  c_lab->add_option("--corpus", lab.corpus, "Corpus directory")->required()
      ->check(CLI::ExistingDirectory);
  c_lab->add_option("--allowlist", lab.allowlist, "Non-malicious allowlist")
      ->check(CLI::ExistingFile);
  c_lab->add_option("--out", lab.out, "Output directory")->required();

  BuildArgs bld;
  auto* c_bld = app.add_subcommand("build-dataset", "Snapshot features at evaluation blocks");
  c_bld->add_option("--corpus", bld.corpus, "Corpus directory")->required()
      ->check(CLI::ExistingDirectory);
  c_bld->add_option("--labels", bld.labels, "Labels directory or labels.csv")->required()
      ->check(CLI::ExistingPath);
  c_bld->add_option("--method", bld.method, "activity or early24")->capture_default_str()
      ->check(CLI::IsMember({"activity", "early24"}));
  c_bld->add_option("--out", bld.out, "Dataset directory")->required();

  TrainArgs trn;
  auto* c_trn = app.add_subcommand("train", "Cross-validate and fit the GBDT classifier");
  c_trn->add_option("--dataset", trn.dataset, "Dataset directory")->required()
      ->check(CLI::ExistingDirectory);
  c_trn->add_option("--method", trn.method, "activity or early24 (default: from manifest)")
      ->check(CLI::IsMember({"activity", "early24"}));
  c_trn->add_option("--hour", trn.hours, "Early24 hour(s) to train (default: all)");
  c_trn->add_option("--trials", trn.trials, "Hyperparameter trials per search")
      ->capture_default_str()->check(CLI::PositiveNumber);
  c_trn->add_option("--folds", trn.folds, "Cross-validation folds")->capture_default_str()
      ->check(CLI::Range(2, 100));
  c_trn->add_option("--max-rounds", trn.max_rounds, "Boosting round cap")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_trn->add_option("--patience", trn.patience, "Early-stopping patience")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_trn->add_option("--permutation-repeats", trn.permutation_repeats,
                    "Shuffles per feature for permutation importance")
      ->capture_default_str()->check(CLI::PositiveNumber);
  c_trn->add_option("--out", trn.out, "Output directory")->required();

  EvaluateArgs evl;
  auto* c_evl = app.add_subcommand("evaluate", "Score a dataset CSV with a saved model");
  c_evl->add_option("--model", evl.model, "model.json")->required()->check(CLI::ExistingFile);
  c_evl->add_option("--dataset", evl.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  c_evl->add_option("--out", evl.out, "Output directory")->required();

  ReportArgs rpt;
  auto* c_rpt = app.add_subcommand("report", "Render Markdown tables from label and train outputs");
  c_rpt->add_option("--labels", rpt.labels, "Labels directory")->check(CLI::ExistingDirectory);
  c_rpt->add_option("--run", rpt.runs, "Train output directory (repeatable)")
      ->check(CLI::ExistingDirectory);
  c_rpt->add_option("--out", rpt.out, "Output directory")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 2;
  }
  spdlog::set_level(g.verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    g.thresholds();
    if (c_sim->parsed()) simulate(sim, g, out);
    else if (c_ing->parsed()) ingest(ing, g, out);
    else if (c_rec->parsed()) reconstruct(rec, g, out);
    else if (c_lab->parsed()) label(lab, g, out);
    else if (c_bld->parsed()) build_dataset(bld, g, out);
    else if (c_trn->parsed()) train(trn, g, out);
    else if (c_evl->parsed()) evaluate(evl, g, out);
    else if (c_rpt->parsed()) report(rpt, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rugwatch::cli
