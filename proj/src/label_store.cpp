#include "crowd/label_store.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>
#include <json.hpp>

#include "crowd/errors.hpp"
#include "crowd/rng.hpp"

namespace crowd {

// --- LabelMatrix -----------------------------------------------------------

LabelMatrix::LabelMatrix(std::size_t n_samples, std::size_t n_workers,
                         std::vector<Response> entries)
    : n_samples_(n_samples), n_workers_(n_workers), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.sample >= n_samples_ || e.worker >= n_workers_) {
      throw DataError(fmt::format("label matrix: entry ({}, {}) outside {} x {}", e.sample,
                                  e.worker, n_samples_, n_workers_));
    }
    if (e.label != 1 && e.label != -1) {
      throw DataError(fmt::format("label matrix: label {} at ({}, {}) is not -1 or +1", e.label,
                                  e.sample, e.worker));
    }
  }
  std::sort(entries_.begin(), entries_.end(), [](const Response& a, const Response& b) {
    return a.sample != b.sample ? a.sample < b.sample : a.worker < b.worker;
  });
  for (std::size_t k = 1; k < entries_.size(); ++k) {
    if (entries_[k].sample == entries_[k - 1].sample &&
        entries_[k].worker == entries_[k - 1].worker) {
      throw DataError(fmt::format("label matrix: duplicate entry for sample {}, worker {}",
                                  entries_[k].sample, entries_[k].worker));
    }
  }

  row_offsets_.assign(n_samples_ + 1, 0);
  worker_offsets_.assign(n_workers_ + 1, 0);
  for (const auto& e : entries_) {
    ++row_offsets_[e.sample + 1];
    ++worker_offsets_[e.worker + 1];
  }
  std::partial_sum(row_offsets_.begin(), row_offsets_.end(), row_offsets_.begin());
  std::partial_sum(worker_offsets_.begin(), worker_offsets_.end(), worker_offsets_.begin());

  by_worker_.resize(entries_.size());
  std::vector<std::size_t> cursor(worker_offsets_.begin(), worker_offsets_.end() - 1);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    by_worker_[cursor[entries_[k].worker]++] = k;
  }
}

std::span<const Response> LabelMatrix::row(std::size_t sample) const {
  return std::span<const Response>(entries_).subspan(row_offsets_[sample], row_size(sample));
}

std::span<const std::size_t> LabelMatrix::worker_entries(std::size_t worker) const {
  return std::span<const std::size_t>(by_worker_).subspan(worker_offsets_[worker],
                                                          worker_size(worker));
}

Eigen::MatrixXd LabelMatrix::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_samples_),
                                            static_cast<Eigen::Index>(n_workers_));
  for (const auto& e : entries_) {
    a(static_cast<Eigen::Index>(e.sample), static_cast<Eigen::Index>(e.worker)) = e.label;
  }
  return a;
}

LabelMatrix LabelMatrix::flipped() const {
  std::vector<Response> out = entries_;
  for (auto& e : out) e.label = -e.label;
  return LabelMatrix(n_samples_, n_workers_, std::move(out));
}

// --- GoldStandards / LabelPool ---------------------------------------------

std::size_t GoldStandards::known_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
}

std::size_t LabelPool::total_labels() const {
  std::size_t total = 0;
  for (const auto& l : labels) total += l.size();
  return total;
}

std::size_t LabelPool::max_labels_per_sample() const {
  std::size_t best = 0;
  for (const auto& l : labels) best = std::max(best, l.size());
  return best;
}

std::size_t LabelPool::active_workers() const {
  std::vector<bool> seen(worker_ids.size(), false);
  for (const auto& row : labels) {
    for (const auto& l : row) seen[l.worker] = true;
  }
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

void validate(const LabelPool& pool) {
  if (pool.sample_ids.size() != pool.labels.size()) {
    throw DataError("pool: sample id count does not match label rows");
  }
  if (!pool.gold.labels.empty() && pool.gold.size() != pool.labels.size()) {
    throw DataError("pool: gold standards do not cover every sample");
  }
  for (int y : pool.gold.labels) {
    if (y != 0 && y != 1 && y != -1) throw DataError("pool: gold label outside {-1, 0, +1}");
  }
  std::unordered_set<std::size_t> orders;
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    std::unordered_set<std::size_t> workers;
    for (const auto& l : pool.labels[i]) {
      if (l.worker >= pool.worker_ids.size()) {
        throw DataError(fmt::format("pool: sample {} references unknown worker", i));
      }
      if (l.label != 1 && l.label != -1) {
        throw DataError(fmt::format("pool: sample {} has label {}", i, l.label));
      }
      if (!workers.insert(l.worker).second) {
        throw DataError(fmt::format("pool: duplicate label for sample {} by worker {}", i,
                                    pool.worker_ids[l.worker]));
      }
      if (!orders.insert(l.order).second) {
        throw DataError(fmt::format("pool: arrival order {} is not unique", l.order));
      }
    }
  }
}

LabelMatrix flatten(const LabelPool& pool) {
  std::vector<Response> entries;
  entries.reserve(pool.total_labels());
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    for (const auto& l : pool.labels[i]) entries.push_back({i, l.worker, l.label});
  }
  return LabelMatrix(pool.n_samples(), pool.n_workers(), std::move(entries));
}

LabelMatrix subsample(const LabelPool& pool, std::size_t lps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Response> entries;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    const auto& row = pool.labels[i];
    const std::size_t take = std::min(lps, row.size());
    idx.resize(row.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `take` slots form a uniform subset.
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, row.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
      entries.push_back({i, row[idx[k]].worker, row[idx[k]].label});
    }
  }
  return LabelMatrix(pool.n_samples(), pool.n_workers(), std::move(entries));
}

// --- file formats ----------------------------------------------------------

LabelMap default_label_map() {
  return {{"1", 1}, {"+1", 1}, {"-1", -1}};
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

Table read_table(const std::filesystem::path& path, char delim) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (table.header.empty()) {
      table.header = split(line, delim);
      continue;
    }
    auto fields = split(line, delim);
    if (fields.size() != table.header.size()) {
      throw DataError(fmt::format("{}:{}: expected {} fields, found {}", path.string(), line_no,
                                  table.header.size(), fields.size()));
    }
    table.rows.emplace_back(line_no, std::move(fields));
  }
  return table;
}

std::size_t column(const Table& table, const std::string& name, const std::filesystem::path& path) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError(fmt::format("{}: missing column '{}'", path.string(), name));
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

int map_label(const LabelMap& map, const std::string& token, const std::filesystem::path& path,
              std::size_t line_no) {
  auto it = map.find(token);
  if (it == map.end()) {
    throw DataError(
        fmt::format("{}:{}: unknown label token '{}'", path.string(), line_no, token));
  }
  return it->second;
}

class PoolBuilder {
 public:
  explicit PoolBuilder(std::string name) { pool_.name = std::move(name); }

  std::size_t sample(const std::string& id) {
    auto [it, inserted] = samples_.try_emplace(id, pool_.sample_ids.size());
    if (inserted) {
      pool_.sample_ids.push_back(id);
      pool_.labels.emplace_back();
      gold_.push_back(0);
    }
    return it->second;
  }

  std::size_t worker(const std::string& id) {
    auto [it, inserted] = workers_.try_emplace(id, pool_.worker_ids.size());
    if (inserted) pool_.worker_ids.push_back(id);
    return it->second;
  }

  void add(const std::string& sample_id, const std::string& worker_id, int label,
           const std::string& where) {
    const std::size_t i = sample(sample_id);
    const std::size_t j = worker(worker_id);
    if (!seen_.insert({i, j}).second) {
      throw DataError(fmt::format("{}: duplicate label for sample '{}' by worker '{}'", where,
                                  sample_id, worker_id));
    }
    pool_.labels[i].push_back({j, label, order_++});
  }

  void set_gold(const std::string& sample_id, int label, const std::string& where) {
    const std::size_t i = sample(sample_id);
    if (gold_[i] != 0 && gold_[i] != label) {
      throw DataError(fmt::format("{}: conflicting gold labels for sample '{}'", where, sample_id));
    }
    gold_[i] = label;
    any_gold_ = true;
  }

  LabelPool finish(const std::string& source) {
    if (pool_.total_labels() == 0) {
      throw DataError(fmt::format("{}: empty pool (no labels)", source));
    }
    if (any_gold_) pool_.gold.labels = std::move(gold_);
    validate(pool_);
    return std::move(pool_);
  }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const {
      return std::hash<std::uint64_t>{}(splitmix64(p.first * 0x9e3779b97f4a7c15ULL ^ p.second));
    }
  };
  LabelPool pool_;
  std::unordered_map<std::string, std::size_t> samples_;
  std::unordered_map<std::string, std::size_t> workers_;
  std::unordered_set<std::pair<std::size_t, std::size_t>, PairHash> seen_;
  std::vector<int> gold_;
  std::size_t order_ = 0;
  bool any_gold_ = false;
};

struct ColumnSpec {
  std::string sample = "sample";
  std::string worker = "worker";
  std::string label = "label";
  std::optional<std::string> gold;
};

void read_labels(PoolBuilder& builder, const std::filesystem::path& path, char delim,
                 const ColumnSpec& cols, const LabelMap& label_map, const LabelMap& gold_map) {
  const Table table = read_table(path, delim);
  const std::size_t cs = column(table, cols.sample, path);
  const std::size_t cw = column(table, cols.worker, path);
  const std::size_t cl = column(table, cols.label, path);
  std::optional<std::size_t> cg;
  if (cols.gold) cg = column(table, *cols.gold, path);
  for (const auto& [line_no, f] : table.rows) {
    const std::string where = fmt::format("{}:{}", path.string(), line_no);
    builder.add(f[cs], f[cw], map_label(label_map, f[cl], path, line_no), where);
    if (cg && !f[*cg].empty()) {
      builder.set_gold(f[cs], map_label(gold_map, f[*cg], path, line_no), where);
    }
  }
}

void read_gold(PoolBuilder& builder, const std::filesystem::path& path, char delim,
               const std::string& sample_col, const std::string& label_col,
               const LabelMap& gold_map) {
  const Table table = read_table(path, delim);
  const std::size_t cs = column(table, sample_col, path);
  const std::size_t cl = column(table, label_col, path);
  for (const auto& [line_no, f] : table.rows) {
    builder.set_gold(f[cs], map_label(gold_map, f[cl], path, line_no),
                     fmt::format("{}:{}", path.string(), line_no));
  }
}

LabelMap label_map_from_json(const nlohmann::json& j) {
  LabelMap map;
  for (auto it = j.begin(); it != j.end(); ++it) map[it.key()] = it.value().get<int>();
  for (const auto& [token, value] : map) {
    if (value != 1 && value != -1) {
      throw DataError(fmt::format("label map: token '{}' maps to {}", token, value));
    }
  }
  return map;
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

LabelPool load_manifest(const std::filesystem::path& path, const nlohmann::json& j) {
  try {
    const auto dir = path.parent_path();
    PoolBuilder builder(j.value("name", path.stem().string()));
    const std::string delim_text = j.value("delimiter", std::string(","));
    const char delim = delim_text == "\\t" || delim_text == "tab" ? '\t' : delim_text.at(0);
    ColumnSpec cols;
    if (j.contains("columns")) {
      const auto& c = j.at("columns");
      cols.sample = c.value("sample", cols.sample);
      cols.worker = c.value("worker", cols.worker);
      cols.label = c.value("label", cols.label);
      if (c.contains("gold")) cols.gold = c.at("gold").get<std::string>();
    }
    const LabelMap label_map =
        j.contains("label_map") ? label_map_from_json(j.at("label_map")) : default_label_map();
    const LabelMap gold_map =
        j.contains("gold_label_map") ? label_map_from_json(j.at("gold_label_map")) : label_map;
    const auto labels_path = dir / j.at("labels").get<std::string>();
    read_labels(builder, labels_path, delim, cols, label_map, gold_map);
    if (j.contains("gold")) {
      read_gold(builder, dir / j.at("gold").get<std::string>(), delim, "sample", "label",
                gold_map);
    }
    return builder.finish(path.string());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid manifest: {}", path.string(), e.what()));
  }
}

LabelPool load_json_pool(const std::filesystem::path& path, const nlohmann::json& j) {
  try {
    PoolBuilder builder(j.value("name", path.stem().string()));
    std::size_t n = 0;
    for (const auto& s : j.at("samples")) {
      const std::string where = fmt::format("{}: samples[{}]", path.string(), n++);
      const std::string id = s.at("id").is_string() ? s.at("id").get<std::string>()
                                                    : s.at("id").dump();
      builder.sample(id);
      if (s.contains("gold") && !s.at("gold").is_null()) {
        const int g = s.at("gold").get<int>();
        if (g != 1 && g != -1) throw DataError(where + ": gold label must be -1 or +1");
        builder.set_gold(id, g, where);
      }
      for (const auto& l : s.value("labels", nlohmann::json::array())) {
        const int label = l.at("label").get<int>();
        if (label != 1 && label != -1) {
          throw DataError(fmt::format("{}: unknown label token '{}'", where, label));
        }
        const std::string worker = l.at("worker").is_string()
                                       ? l.at("worker").get<std::string>()
                                       : l.at("worker").dump();
        builder.add(id, worker, label, where);
      }
    }
    return builder.finish(path.string());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid pool document: {}", path.string(), e.what()));
  }
}

}  // namespace

LabelPool load_pool_csv(const std::filesystem::path& labels,
                        const std::optional<std::filesystem::path>& gold,
                        const LabelMap& label_map) {
  PoolBuilder builder(labels.stem().string());
  const char delim = labels.extension() == ".tsv" ? '\t' : ',';
  read_labels(builder, labels, delim, ColumnSpec{}, label_map, label_map);
  if (gold) read_gold(builder, *gold, delim, "sample", "label", label_map);
  return builder.finish(labels.string());
}

LabelPool load_pool(const std::filesystem::path& path, PoolFormat format) {
  switch (format) {
    case PoolFormat::triples_csv: {
      auto gold = path.parent_path() / (path.stem().string() + "_gold" + path.extension().string());
      return load_pool_csv(path, std::filesystem::exists(gold) ? std::optional(gold) : std::nullopt);
    }
    case PoolFormat::json: {
      const auto j = parse_json_file(path);
      return load_json_pool(path, j);
    }
    case PoolFormat::manifest: {
      const auto j = parse_json_file(path);
      return load_manifest(path, j);
    }
  }
  throw DataError("unknown pool format");
}

LabelPool load_pool(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    const auto j = parse_json_file(path);
    if (j.is_object() && j.contains("samples")) return load_json_pool(path, j);
    if (j.is_object() && j.contains("labels")) return load_manifest(path, j);
    throw DataError(fmt::format("{}: neither a pool document nor a manifest", path.string()));
  }
  return load_pool(path, PoolFormat::triples_csv);
}

void save_pool_csv(const LabelPool& pool, const std::filesystem::path& labels,
                   const std::filesystem::path& gold) {
  std::vector<std::tuple<std::size_t, std::size_t, const PooledLabel*>> ordered;
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    for (const auto& l : pool.labels[i]) ordered.emplace_back(l.order, i, &l);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
  std::ofstream out(labels);
  if (!out) throw DataError(fmt::format("cannot write '{}'", labels.string()));
  out << "sample,worker,label\n";
  for (const auto& [order, i, l] : ordered) {
    out << pool.sample_ids[i] << ',' << pool.worker_ids[l->worker] << ',' << l->label << '\n';
  }
  if (!pool.gold.labels.empty()) {
    std::ofstream g(gold);
    if (!g) throw DataError(fmt::format("cannot write '{}'", gold.string()));
    g << "sample,label\n";
    for (std::size_t i = 0; i < pool.gold.size(); ++i) {
      if (pool.gold.known(i)) g << pool.sample_ids[i] << ',' << pool.gold.labels[i] << '\n';
    }
  }
}

void save_pool_json(const LabelPool& pool, const std::filesystem::path& path) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    nlohmann::json s;
    s["id"] = pool.sample_ids[i];
    if (!pool.gold.labels.empty() && pool.gold.known(i)) s["gold"] = pool.gold.labels[i];
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : pool.labels[i]) {
      labels.push_back({{"worker", pool.worker_ids[l.worker]}, {"label", l.label}});
    }
    s["labels"] = std::move(labels);
    samples.push_back(std::move(s));
  }
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << nlohmann::json{{"name", pool.name}, {"samples", samples}}.dump(1) << '\n';
}

}  // namespace crowd
