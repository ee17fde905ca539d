#include "sbgft/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbgft/binio.hpp"
#include "sbgft/parallel.hpp"

namespace sbgft {

double psnr_from_mse(double mse, double peak) {
  if (mse < 0) throw std::invalid_argument("psnr: negative MSE");
  if (mse == 0) return kLosslessPsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const GrayImage& a, const GrayImage& b, double peak) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("psnr: image sizes differ");
  if (a.pixels.empty()) throw std::invalid_argument("psnr: empty images");
  double sse = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    sse += d * d;
  }
  return psnr_from_mse(sse / static_cast<double>(a.pixels.size()), peak);
}

// ---------------------------------------------------------------------------
// Bjontegaard metrics

namespace {

struct Cubic {
  Eigen::Vector4d c;  // c0 + c1 x + c2 x^2 + c3 x^3
  double integral(double lo, double hi) const {
    auto F = [&](double x) { return x * (c[0] + x * (c[1] / 2 + x * (c[2] / 3 + x * c[3] / 4))); };
    return F(hi) - F(lo);
  }
};

Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  const Eigen::Index m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(m, 4);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    A(i, 0) = 1;
    A(i, 1) = xi;
    A(i, 2) = xi * xi;
    A(i, 3) = xi * xi * xi;
    b[i] = y[static_cast<std::size_t>(i)];
  }
  return {A.colPivHouseholderQr().solve(b)};
}

void check_curve(const RdCurve& c) {
  if (c.points.size() < 4) throw std::invalid_argument("BD metric needs at least four RD points per curve");
  for (const auto& p : c.points)
    if (!(p.bpp > 0) || !std::isfinite(p.psnr) || !std::isfinite(p.bpp))
      throw std::invalid_argument("BD metric needs positive rates and finite PSNR");
}

}  // namespace

double bd_rate(const RdCurve& anchor, const RdCurve& test) {
  check_curve(anchor);
  check_curve(test);
  std::vector<double> pa, ra, pt, rt;
  for (const auto& p : anchor.points) pa.push_back(p.psnr), ra.push_back(std::log10(p.bpp));
  for (const auto& p : test.points) pt.push_back(p.psnr), rt.push_back(std::log10(p.bpp));
  const double lo = std::max(*std::min_element(pa.begin(), pa.end()), *std::min_element(pt.begin(), pt.end()));
  const double hi = std::min(*std::max_element(pa.begin(), pa.end()), *std::max_element(pt.begin(), pt.end()));
  if (!(hi > lo)) throw std::invalid_argument("BD-rate: PSNR ranges do not overlap");
  const double avg = (fit_cubic(pt, rt).integral(lo, hi) - fit_cubic(pa, ra).integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

double bd_psnr(const RdCurve& anchor, const RdCurve& test) {
  check_curve(anchor);
  check_curve(test);
  std::vector<double> pa, ra, pt, rt;
  for (const auto& p : anchor.points) pa.push_back(p.psnr), ra.push_back(std::log10(p.bpp));
  for (const auto& p : test.points) pt.push_back(p.psnr), rt.push_back(std::log10(p.bpp));
  const double lo = std::max(*std::min_element(ra.begin(), ra.end()), *std::min_element(rt.begin(), rt.end()));
  const double hi = std::min(*std::max_element(ra.begin(), ra.end()), *std::max_element(rt.begin(), rt.end()));
  if (!(hi > lo)) throw std::invalid_argument("BD-PSNR: rate ranges do not overlap");
  return (fit_cubic(rt, pt).integral(lo, hi) - fit_cubic(ra, pa).integral(lo, hi)) / (hi - lo);
}

// ---------------------------------------------------------------------------
// Experiment runner

const RdCurve& ExperimentResult::curve(const std::string& config, const std::string& image) const {
  for (const auto& c : curves)
    if (c.config == config && c.image == image) return c;
  throw std::out_of_range("no RD curve for " + config + " / " + image);
}

std::vector<std::string> ExperimentResult::images() const {
  std::vector<std::string> out;
  for (const auto& c : curves)
    if (c.image != "all" && std::find(out.begin(), out.end(), c.image) == out.end()) out.push_back(c.image);
  return out;
}

namespace {

struct ConfigRun {
  std::string label;
  Config config;
  int subset_size = 0;
  const BankSet* banks = nullptr;
};

struct Accum {
  double bits = 0, sse = 0;
  long pixels = 0;
};

}  // namespace

ExperimentResult run_experiment(const std::vector<NamedImage>& images, const ExperimentSpec& spec) {
  if (images.empty()) throw std::invalid_argument("experiment needs at least one image");
  if (spec.configs.empty()) throw std::invalid_argument("experiment needs at least one configuration");
  for (int qp : spec.qps) QuantizerSpec::from_qp(qp);

  // Banks per distinct configuration; F_<C> codes with the F bank.
  std::map<Config, BankSet> banks;
  std::vector<ConfigRun> runs;
  for (const auto& label : spec.configs) {
    ConfigRun r;
    r.label = label;
    r.config = parse_config(label, &r.subset_size);
    if (r.config == Config::F_C && !spec.subsets)
      throw std::invalid_argument("configuration " + label + " needs a subset table");
    const Config bank_cfg = r.config == Config::F_C ? Config::F : r.config;
    if (!banks.count(bank_cfg)) banks.emplace(bank_cfg, config_banks(bank_cfg));
    r.banks = &banks.at(bank_cfg);
    runs.push_back(r);
  }

  std::vector<GrayImage> cropped;
  for (const auto& im : images) cropped.push_back(crop_to_multiple(im.image, kMacroblockSize));
  std::map<SignalDomain, BankSet> drivers;

  ExperimentResult out;
  std::map<std::string, std::map<int, Accum>> pooled;
  std::map<std::tuple<std::string, int, int>, ComplexityRecord> complexity;
  for (std::size_t ii = 0; ii < images.size(); ++ii) {
    const GrayImage& img = cropped[ii];
    std::vector<std::pair<int, int>> mbs;
    for (int r = 0; r < img.height; r += kMacroblockSize)
      for (int c = 0; c < img.width; c += kMacroblockSize) mbs.push_back({r, c});
    std::map<std::string, RdCurve> per_config;
    for (int qp : spec.qps) {
      std::map<SignalDomain, std::vector<MacroblockPartition>> parts;
      for (const auto& run : runs) {
        const SignalDomain dom = is_residual_config(run.config) ? SignalDomain::Residual : SignalDomain::Pixel;
        if (parts.count(dom)) continue;
        if (!drivers.count(dom)) drivers.emplace(dom, driver_banks(dom));
        auto& p = parts[dom];
        p.resize(mbs.size());
        parallel_for(mbs.size(), spec.threads, [&](std::size_t i) {
          p[i] = partition_macroblock(img, mbs[i].first, mbs[i].second, qp, dom, drivers.at(dom));
        });
      }
      for (const auto& run : runs) {
        const bool residual = is_residual_config(run.config);
        const auto& p = parts.at(residual ? SignalDomain::Residual : SignalDomain::Pixel);
        CodingSetup setup;
        setup.config = run.config;
        setup.qp = qp;
        setup.banks = run.banks;
        setup.subsets = spec.subsets;
        setup.subset_size = run.subset_size;
        setup.full_width_index = spec.full_width_subset_index;
        setup.index_side_bits = spec.index_side_bits;

        std::vector<const Eigen::MatrixXd*> sig;
        std::vector<int> pms;
        for (const auto& mp : p)
          for (const auto& l : mp.leaves) {
            sig.push_back(&l.signal);
            pms.push_back(l.pm);
          }
        auto coded = select_transforms(sig, pms, setup, spec.threads);

        std::vector<MacroblockCode> codes(p.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          codes[i].tree = p[i].tree;
          for (const auto& l : p[i].leaves)
            codes[i].leaves.push_back({l.leaf, l.pm, l.prediction, std::move(coded[k++])});
        }
        GrayImage rec(img.width, img.height);
        parallel_for(codes.size(), spec.threads, [&](std::size_t i) {
          for (const auto& lc : codes[i].leaves) reconstruct_leaf(lc, setup, rec);
        });

        double bits = 0;
        for (const auto& mb : codes) {
          bits += mb.tree.split_flag_bits();
          for (const auto& lc : mb.leaves) {
            bits += lc.coded.rate_bits + (residual ? kModeBits : 0);
            const TransformBank& bank = setup.bank(lc.leaf.size);
            out.blocks.push_back({run.label, images[ii].name, qp, lc.leaf, lc.pm, lc.coded.transform,
                                  bank[static_cast<std::size_t>(lc.coded.transform)].id().label(),
                                  lc.coded.cost, lc.coded.side_bits});
            auto& cx = complexity[{run.label, qp, lc.leaf.size}];
            cx.config = run.label;
            cx.qp = qp;
            cx.n = lc.leaf.size;
            cx.leaves += 1;
            cx.evaluations += lc.coded.evaluations;
            for (int t : setup.candidates(lc.leaf.size, lc.pm))
              cx.multiplications += bank[static_cast<std::size_t>(t)].multiplications();
          }
        }
        if (spec.real_bits) {
          PayloadWriter pw(setup);
          for (const auto& mb : codes) pw.macroblock(mb);
          bits = static_cast<double>(pw.finish().size() * 8);
        }
        double sse = 0;
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
          const double d = static_cast<double>(img.pixels[i]) - rec.pixels[i];
          sse += d * d;
        }
        const long px = static_cast<long>(img.pixels.size());
        auto& curve = per_config[run.label];
        curve.config = run.label;
        curve.image = images[ii].name;
        curve.points.push_back({qp, bits / static_cast<double>(px), psnr_from_mse(sse / static_cast<double>(px))});
        auto& acc = pooled[run.label][qp];
        acc.bits += bits;
        acc.sse += sse;
        acc.pixels += px;
      }
    }
    for (const auto& run : runs) out.curves.push_back(per_config.at(run.label));
  }
  for (const auto& run : runs) {
    RdCurve c{run.label, "all", {}};
    for (int qp : spec.qps) {
      const Accum& a = pooled[run.label][qp];
      c.points.push_back({qp, a.bits / static_cast<double>(a.pixels),
                          psnr_from_mse(a.sse / static_cast<double>(a.pixels))});
    }
    out.curves.push_back(c);
  }
  // Complexity rows in configuration order, then qp and size.
  for (const auto& run : runs)
    for (const auto& [key, row] : complexity)
      if (std::get<0>(key) == run.label) out.complexity.push_back(row);
  return out;
}

RdCurve run_configuration(const std::vector<NamedImage>& images, const std::string& config,
                          const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.configs = {config};
  return run_experiment(images, s).curve(config);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt("%.6f", v);
}

}  // namespace

std::string rd_curve_csv(const std::vector<RdCurve>& curves) {
  std::string s = "config,image,qp,bpp,psnr\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      s += c.config + "," + c.image + "," + std::to_string(p.qp) + "," + num(p.bpp) + "," + num(p.psnr) + "\n";
  return s;
}

std::vector<RdCurve> parse_rd_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("config,", 0) != 0)
    throw FormatError(FormatError::Kind::Invalid, "RD curve CSV: missing header");
  // Accept both the full layout and a plain config,qp,bpp,psnr one.
  const bool with_image = line == "config,image,qp,bpp,psnr";
  if (!with_image && line != "config,qp,bpp,psnr")
    throw FormatError(FormatError::Kind::Invalid, "RD curve CSV: unexpected header");
  std::vector<RdCurve> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != (with_image ? 5u : 4u)) throw FormatError(FormatError::Kind::Invalid, "RD curve CSV: bad row");
    const std::string image = with_image ? f[1] : "all";
    const std::size_t o = with_image ? 2 : 1;
    RdPoint p;
    try {
      p.qp = std::stoi(f[o]);
      p.bpp = std::stod(f[o + 1]);
      p.psnr = std::stod(f[o + 2]);
    } catch (const std::exception&) {
      throw FormatError(FormatError::Kind::Invalid, "RD curve CSV: bad number in row");
    }
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const RdCurve& c) { return c.config == f[0] && c.image == image; });
    if (it == out.end()) {
      out.push_back({f[0], image, {}});
      it = out.end() - 1;
    }
    it->points.push_back(p);
  }
  return out;
}

std::string winners_csv(const std::vector<BlockRecord>& blocks) {
  std::string s = "config,image,qp,row,col,size,pm,transform,label\n";
  for (const auto& b : blocks)
    s += b.config + "," + b.image + "," + std::to_string(b.qp) + "," + std::to_string(b.leaf.row) + "," +
         std::to_string(b.leaf.col) + "," + std::to_string(b.leaf.size) + "," + std::to_string(b.pm) + "," +
         std::to_string(b.transform) + "," + b.label + "\n";
  return s;
}

std::string complexity_csv(const std::vector<ComplexityRecord>& rows) {
  std::string s = "config,qp,n,leaves,evaluations,evaluations_per_leaf,multiplications\n";
  for (const auto& r : rows)
    s += r.config + "," + std::to_string(r.qp) + "," + std::to_string(r.n) + "," + std::to_string(r.leaves) + "," +
         std::to_string(r.evaluations) + "," +
         num(static_cast<double>(r.evaluations) / static_cast<double>(r.leaves)) + "," +
         std::to_string(r.multiplications) + "\n";
  return s;
}

double mean_bd_rate(const ExperimentResult& r, const std::string& anchor, const std::string& test) {
  const auto imgs = r.images();
  if (imgs.empty()) throw std::invalid_argument("no images in experiment result");
  double s = 0;
  for (const auto& im : imgs) s += bd_rate(r.curve(anchor, im), r.curve(test, im));
  return s / static_cast<double>(imgs.size());
}

std::string bd_rate_csv(const ExperimentResult& r, const std::string& anchor) {
  std::string s = "anchor,test,image,bd_rate_percent,bd_psnr_db\n";
  std::vector<std::string> configs;
  for (const auto& c : r.curves)
    if (c.config != anchor && std::find(configs.begin(), configs.end(), c.config) == configs.end())
      configs.push_back(c.config);
  auto imgs = r.images();
  imgs.push_back("all");
  for (const auto& t : configs) {
    double sum_rate = 0, sum_psnr = 0;
    for (const auto& im : imgs) {
      const double br = bd_rate(r.curve(anchor, im), r.curve(t, im));
      const double bp = bd_psnr(r.curve(anchor, im), r.curve(t, im));
      if (im != "all") sum_rate += br, sum_psnr += bp;
      s += anchor + "," + t + "," + im + "," + num(br) + "," + num(bp) + "\n";
    }
    const double k = static_cast<double>(imgs.size() - 1);
    s += anchor + "," + t + ",mean," + num(sum_rate / k) + "," + num(sum_psnr / k) + "\n";
  }
  return s;
}

}  // namespace sbgft
