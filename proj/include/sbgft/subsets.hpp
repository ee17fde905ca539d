#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sbgft/block_codec.hpp"
#include "sbgft/partition.hpp"

namespace sbgft {

/// Cell key (qp, pm, n). pm = -1 pools every prediction mode.
using SubsetKey = std::array<int, 3>;
inline constexpr int kPooledMode = -1;

/// Winner counts per (qp, pm, n) over the bank ordinals of size n.
struct FrequencyTable {
  std::map<SubsetKey, std::vector<long>> counts;

  long total(const SubsetKey& k) const;
  double frequency(const SubsetKey& k, int ordinal) const;
  void add(const SubsetKey& k, int ordinal, std::size_t bank_size);
  void merge(const FrequencyTable& other);
};

/// Runs full-bank RDOT on every record (at the record's qp) and counts the
/// winners per mode, plus pooled pm = -1 cells. Throws
/// std::invalid_argument when a record's size has no bank.
FrequencyTable collect_stats(const std::vector<ResidualRecord>& dataset, const BankSet& banks,
                             int threads = 0);

/// CSV with header "qp,pm,n,ordinal,count"; every ordinal of a cell is
/// listed so the bank size survives the round trip.
std::string frequency_table_csv(const FrequencyTable& t);
FrequencyTable parse_frequency_table_csv(const std::string& text);

struct SubsetEntry {
  int ordinal = 0;
  double frequency = 0.0;
  bool operator==(const SubsetEntry&) const = default;
};

/// Per cell, min(C, l) ordinals by descending frequency, ordinal ascending
/// on ties; unobserved ordinals fill the tail at frequency 0.
struct SubsetTable {
  std::map<SubsetKey, std::vector<SubsetEntry>> cells;
  bool operator==(const SubsetTable&) const = default;

  /// Cell for the trained qp nearest to `qp` (lower on ties), falling back to
  /// the pooled mode. Throws std::out_of_range when nothing matches.
  const std::vector<SubsetEntry>& lookup(int qp, int pm, int n) const;
  std::vector<int> ordinals(int qp, int pm, int n) const;
};

SubsetTable top_c(const FrequencyTable& table, int C);

/// CSV with header "qp,pm,n,rank,ordinal,frequency".
std::string subset_table_csv(const SubsetTable& t);
SubsetTable parse_subset_table_csv(const std::string& text);
void save_subset_table(const SubsetTable& t, const std::string& path);
SubsetTable load_subset_table(const std::string& path);

/// RDOT over the subset for (pm, n) at the options' qp. Side bits are
/// ceil(log2 C), or ceil(log2 l) of the whole bank with full_width_index.
CodedBlock rdot_select_subset(const Eigen::MatrixXd& block, const TransformBank& bank,
                              const SubsetTable& subsets, int pm, const RdotOptions& opt,
                              bool full_width_index = false);

}  // namespace sbgft
