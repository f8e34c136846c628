#include "rugwatch/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rugwatch/parallel.hpp"

namespace rugwatch::corpus {

nlohmann::json Deployment::to_json() const {
  nlohmann::json lockers_json = nlohmann::json::array();
  for (const auto& l : lockers) lockers_json.push_back(l.to_string());
  return {{"weth", weth.to_string()}, {"factory", factory.to_string()}, {"lockers", lockers_json}};
}

Deployment Deployment::from_json(const nlohmann::json& j) {
  Deployment d;
  if (j.contains("weth")) d.weth = Address::parse(j.at("weth").get<std::string>());
  if (j.contains("factory")) d.factory = Address::parse(j.at("factory").get<std::string>());
  if (j.contains("lockers")) {
    d.lockers.clear();
    for (const auto& l : j.at("lockers")) d.lockers.push_back(Address::parse(l.get<std::string>()));
  }
  return d;
}

std::vector<TokenInput> load_tokens(const CorpusPaths& paths, unsigned threads) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(paths.events_dir())) {
    throw Error(ErrorCode::Io, "corpus has no events/ directory: " + paths.root.string());
  }
  std::vector<Address> tokens;
  for (const auto& entry : fs::directory_iterator(paths.events_dir())) {
    if (entry.path().extension() != ".jsonl") continue;
    auto parsed = Address::try_parse(entry.path().stem().string());
    if (!parsed) {
      spdlog::warn("skipping {}: file name is not a token address", entry.path().string());
      continue;
    }
    tokens.push_back(*parsed);
  }
  std::sort(tokens.begin(), tokens.end());

  std::map<Address, evdecode::TokenMeta> metas;
  if (fs::exists(paths.meta())) {
    auto load = evdecode::read_meta(paths.meta());
    for (auto& m : load.tokens) metas.emplace(m.token, std::move(m));
    for (const auto& a : load.missing_decimals) {
      spdlog::warn("token {} has no decimals; it will not be labeled", a.to_string());
    }
  }

  std::vector<TokenInput> out(tokens.size());
  parallel_for(tokens.size(), threads, [&](std::size_t i) {
    out[i].token = tokens[i];
    if (auto it = metas.find(tokens[i]); it != metas.end()) out[i].meta = it->second;
    out[i].events = evdecode::read_fixture(paths.events_for(tokens[i]));
  });
  return out;
}

Deployment load_deployment(const CorpusPaths& paths) {
  if (!std::filesystem::exists(paths.manifest())) return Deployment{};
  const auto manifest = read_json(paths.manifest());
  if (!manifest.contains("deployment")) return Deployment{};
  return Deployment::from_json(nlohmann::json::parse(manifest.at("deployment").dump()));
}

std::set<Address> read_allowlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open allowlist " + path.string());
  std::set<Address> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    auto parsed = Address::try_parse(std::string_view(line).substr(first, last - first + 1));
    if (!parsed) {
      throw Error(ErrorCode::SchemaViolation,
                  "allowlist line " + std::to_string(line_number) + " is not an address");
    }
    out.insert(*parsed);
  }
  return out;
}

void write_allowlist(const std::filesystem::path& path, const std::set<Address>& tokens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write allowlist " + path.string());
  for (const auto& t : tokens) out << t.to_string() << '\n';
}

nlohmann::ordered_json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << value.dump(2) << '\n';
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace rugwatch::corpus
