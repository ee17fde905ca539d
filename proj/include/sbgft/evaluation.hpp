#pragma once

#include <limits>
#include <string>
#include <vector>

#include "sbgft/codec.hpp"
#include "sbgft/image_io.hpp"
#include "sbgft/subsets.hpp"

namespace sbgft {

/// Returned by psnr() for identical images.
inline constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();

double psnr_from_mse(double mse, double peak = 255.0);
/// Throws std::invalid_argument on a size mismatch.
double psnr(const GrayImage& a, const GrayImage& b, double peak = 255.0);

struct RdPoint {
  int qp = 0;
  double bpp = 0.0;
  double psnr = 0.0;
};

struct RdCurve {
  std::string config;
  std::string image;
  std::vector<RdPoint> points;
};

/// Bjontegaard delta rate in percent: cubic least-squares fits of log10
/// rate against PSNR, averaged over the common PSNR interval. Needs at least
/// four finite points per curve and a nonempty overlap
/// (std::invalid_argument otherwise).
double bd_rate(const RdCurve& anchor, const RdCurve& test);
/// Average PSNR gain in dB over the common log-rate interval.
double bd_psnr(const RdCurve& anchor, const RdCurve& test);

struct NamedImage {
  std::string name;
  GrayImage image;
};

struct ExperimentSpec {
  /// Configuration labels: "A" .. "F", or "F_<C>".
  std::vector<std::string> configs;
  std::vector<int> qps{25, 30, 35, 40, 45};
  int threads = 0;
  /// Measure bpp with the arithmetic-coded payload instead of the rate model.
  bool real_bits = false;
  /// Required for F_<C> configurations.
  const SubsetTable* subsets = nullptr;
  bool full_width_subset_index = false;
  /// Include index bits in RDOT costs and in the estimated rate.
  bool index_side_bits = true;
};

struct BlockRecord {
  std::string config;
  std::string image;
  int qp = 0;
  Leaf leaf;
  int pm = -1;
  int transform = 0;
  std::string label;
  double cost = 0.0;
  double side_bits = 0.0;
};

struct ComplexityRecord {
  std::string config;
  int qp = 0;
  int n = 0;
  long leaves = 0;
  long evaluations = 0;
  long multiplications = 0;
};

struct ExperimentResult {
  /// Per configuration, one curve per image and one pooled curve with image
  /// "all" (total bits over total pixels, PSNR of the pooled MSE).
  std::vector<RdCurve> curves;
  std::vector<BlockRecord> blocks;
  std::vector<ComplexityRecord> complexity;

  const RdCurve& curve(const std::string& config, const std::string& image = "all") const;
  std::vector<std::string> images() const;
};

/// Partitions every macroblock (DCT-II driver for A/B/C, MTS-5 for the
/// residual configurations, open-loop prediction from the source), runs RDOT
/// per leaf with each configuration's bank and accumulates rate (coefficient
/// entropy, index bits, split flags and mode bits) and reconstruction PSNR.
/// Images are cropped to multiples of 64. Output does not depend on the
/// thread count.
ExperimentResult run_experiment(const std::vector<NamedImage>& images, const ExperimentSpec& spec);
/// Pooled curve of one configuration.
RdCurve run_configuration(const std::vector<NamedImage>& images, const std::string& config,
                          const ExperimentSpec& spec);

/// CSV writers: rd_curve (config,image,qp,bpp,psnr), winners
/// (config,image,qp,row,col,size,pm,transform,label), complexity
/// (config,qp,n,leaves,evaluations,evaluations_per_leaf,multiplications) and
/// bd_rate (anchor,test,image,bd_rate_percent,bd_psnr_db).
std::string rd_curve_csv(const std::vector<RdCurve>& curves);
std::vector<RdCurve> parse_rd_curve_csv(const std::string& text);
std::string winners_csv(const std::vector<BlockRecord>& blocks);
std::string complexity_csv(const std::vector<ComplexityRecord>& rows);
/// Every test configuration against `anchor`, per image and pooled, plus a
/// "mean" row averaging the per-image values.
std::string bd_rate_csv(const ExperimentResult& r, const std::string& anchor);

/// Mean of the per-image BD-rates between two configurations.
double mean_bd_rate(const ExperimentResult& r, const std::string& anchor, const std::string& test);

}  // namespace sbgft
