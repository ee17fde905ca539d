#include "sbgft/subsets.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbgft/binio.hpp"
#include "sbgft/parallel.hpp"

namespace sbgft {

long FrequencyTable::total(const SubsetKey& k) const {
  const auto it = counts.find(k);
  return it == counts.end() ? 0 : std::accumulate(it->second.begin(), it->second.end(), 0L);
}

double FrequencyTable::frequency(const SubsetKey& k, int ordinal) const {
  const long t = total(k);
  if (t == 0) return 0.0;
  return static_cast<double>(counts.at(k).at(static_cast<std::size_t>(ordinal))) / static_cast<double>(t);
}

void FrequencyTable::add(const SubsetKey& k, int ordinal, std::size_t bank_size) {
  auto& v = counts[k];
  if (v.empty()) v.assign(bank_size, 0);
  if (v.size() != bank_size) throw std::invalid_argument("frequency cell with inconsistent bank size");
  ++v.at(static_cast<std::size_t>(ordinal));
}

void FrequencyTable::merge(const FrequencyTable& other) {
  for (const auto& [k, v] : other.counts) {
    auto& mine = counts[k];
    if (mine.empty()) mine.assign(v.size(), 0);
    if (mine.size() != v.size()) throw std::invalid_argument("frequency cell with inconsistent bank size");
    for (std::size_t i = 0; i < v.size(); ++i) mine[i] += v[i];
  }
}

FrequencyTable collect_stats(const std::vector<ResidualRecord>& dataset, const BankSet& banks, int threads) {
  if (dataset.empty()) throw std::invalid_argument("collect_stats: empty dataset");
  for (const auto& r : dataset)
    if (!banks.count(r.size))
      throw std::invalid_argument("collect_stats: no bank for block size " + std::to_string(r.size));
  // Fixed chunks, each a batch of same-size, same-qp records.
  constexpr std::size_t kChunk = 64;
  struct Chunk {
    int n, qp;
    std::vector<std::size_t> items;
  };
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) groups[{dataset[i].size, dataset[i].qp}].push_back(i);
  std::vector<Chunk> chunks;
  for (const auto& [key, items] : groups)
    for (std::size_t s = 0; s < items.size(); s += kChunk)
      chunks.push_back({key.first, key.second,
                        {items.begin() + static_cast<std::ptrdiff_t>(s),
                         items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), s + kChunk))}});
  std::vector<FrequencyTable> partial(chunks.size());
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    const Chunk& ch = chunks[c];
    const TransformBank& bank = banks.at(ch.n);
    Eigen::MatrixXd F(ch.n * ch.n, static_cast<Eigen::Index>(ch.items.size()));
    for (std::size_t b = 0; b < ch.items.size(); ++b) {
      const Eigen::MatrixXd blk = dataset[ch.items[b]].block();
      F.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXd>(blk.data(), blk.size());
    }
    std::vector<int> all(bank.size());
    std::iota(all.begin(), all.end(), 0);
    const auto coded = rdot_select_batch(F, bank, all, rdot_options(ch.qp));
    for (std::size_t b = 0; b < ch.items.size(); ++b) {
      const int pm = dataset[ch.items[b]].pm;
      partial[c].add({ch.qp, pm, ch.n}, coded[b].transform, bank.size());
      partial[c].add({ch.qp, kPooledMode, ch.n}, coded[b].transform, bank.size());
    }
  });
  FrequencyTable out;
  for (const auto& p : partial) out.merge(p);
  return out;
}

std::string frequency_table_csv(const FrequencyTable& t) {
  std::string out = "qp,pm,n,ordinal,count\n";
  for (const auto& [k, v] : t.counts)
    for (std::size_t i = 0; i < v.size(); ++i)
      out += std::to_string(k[0]) + "," + std::to_string(k[1]) + "," + std::to_string(k[2]) + "," +
             std::to_string(i) + "," + std::to_string(v[i]) + "\n";
  return out;
}

FrequencyTable parse_frequency_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "qp,pm,n,ordinal,count")
    throw FormatError(FormatError::Kind::Invalid, "frequency table: missing or wrong CSV header");
  FrequencyTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    int qp, pm, n, ord, used = 0;
    long count;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%ld%n", &qp, &pm, &n, &ord, &count, &used) != 5 ||
        static_cast<std::size_t>(used) != line.size() || count < 0)
      throw FormatError(FormatError::Kind::Invalid, "frequency table: malformed row " + std::to_string(lineno));
    auto& v = t.counts[{qp, pm, n}];
    if (ord != static_cast<int>(v.size()))
      throw FormatError(FormatError::Kind::Invalid, "frequency table: ordinals out of order on row " + std::to_string(lineno));
    v.push_back(count);
  }
  return t;
}

SubsetTable top_c(const FrequencyTable& table, int C) {
  if (C < 1) throw std::invalid_argument("top_c: C must be at least 1");
  SubsetTable out;
  for (const auto& [key, counts] : table.counts) {
    std::vector<int> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });
    const std::size_t k = std::min(counts.size(), static_cast<std::size_t>(C));
    auto& cell = out.cells[key];
    for (std::size_t i = 0; i < k; ++i) cell.push_back({order[i], table.frequency(key, order[i])});
  }
  return out;
}

const std::vector<SubsetEntry>& SubsetTable::lookup(int qp, int pm, int n) const {
  std::set<int> qps;
  for (const auto& [k, v] : cells)
    if (k[2] == n) qps.insert(k[0]);
  if (qps.empty()) throw std::out_of_range("no subset table for block size " + std::to_string(n));
  int best = *qps.begin();
  for (int q : qps)
    if (std::abs(q - qp) < std::abs(best - qp)) best = q;
  auto it = cells.find({best, pm, n});
  if (it == cells.end()) it = cells.find({best, kPooledMode, n});
  if (it == cells.end())
    throw std::out_of_range("no subset cell for pm " + std::to_string(pm) + ", size " + std::to_string(n));
  return it->second;
}

std::vector<int> SubsetTable::ordinals(int qp, int pm, int n) const {
  std::vector<int> out;
  for (const auto& e : lookup(qp, pm, n)) out.push_back(e.ordinal);
  return out;
}

std::string subset_table_csv(const SubsetTable& t) {
  std::string out = "qp,pm,n,rank,ordinal,frequency\n";
  char line[160];
  for (const auto& [k, cell] : t.cells)
    for (std::size_t r = 0; r < cell.size(); ++r) {
      std::snprintf(line, sizeof line, "%d,%d,%d,%zu,%d,%.17g\n", k[0], k[1], k[2], r, cell[r].ordinal,
                    cell[r].frequency);
      out += line;
    }
  return out;
}

SubsetTable parse_subset_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "qp,pm,n,rank,ordinal,frequency")
    throw FormatError(FormatError::Kind::Invalid, "subset table: missing or wrong CSV header");
  SubsetTable t;
  std::map<SubsetKey, std::map<int, SubsetEntry>> ranked;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    int qp, pm, n, rank, ord, used = 0;
    double f;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%lf%n", &qp, &pm, &n, &rank, &ord, &f, &used) != 6 ||
        static_cast<std::size_t>(used) != line.size() || rank < 0 || ord < 0 || f < 0 || f > 1)
      throw FormatError(FormatError::Kind::Invalid, "subset table: malformed row " + std::to_string(lineno));
    if (!ranked[{qp, pm, n}].emplace(rank, SubsetEntry{ord, f}).second)
      throw FormatError(FormatError::Kind::Invalid, "subset table: duplicate rank on row " + std::to_string(lineno));
  }
  for (auto& [k, m] : ranked) {
    auto& cell = t.cells[k];
    for (auto& [rank, e] : m) {
      if (rank != static_cast<int>(cell.size()))
        throw FormatError(FormatError::Kind::Invalid, "subset table: ranks are not contiguous");
      cell.push_back(e);
    }
  }
  return t;
}

void save_subset_table(const SubsetTable& t, const std::string& path) {
  const std::string s = subset_table_csv(t);
  write_file_bytes(path, {s.begin(), s.end()});
}

SubsetTable load_subset_table(const std::string& path) {
  const auto b = read_file_bytes(path);
  return parse_subset_table_csv({b.begin(), b.end()});
}

CodedBlock rdot_select_subset(const Eigen::MatrixXd& block, const TransformBank& bank,
                              const SubsetTable& subsets, int pm, const RdotOptions& opt,
                              bool full_width_index) {
  const auto cand = subsets.ordinals(opt.qp, pm, bank.n);
  RdotOptions o = opt;
  if (full_width_index) o.side_bits = index_bits(bank.size());
  return rdot_select_among(block, bank, cand, o);
}

}  // namespace sbgft
