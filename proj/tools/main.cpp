// Command-line front end: banks, symmetry analysis, image coding, residual
// datasets, subset statistics and RD experiments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbgft/binio.hpp"
#include "sbgft/codec.hpp"
#include "sbgft/evaluation.hpp"
#include "sbgft/image_io.hpp"
#include "sbgft/partition.hpp"
#include "sbgft/subsets.hpp"
#include "sbgft/symmetry.hpp"
#include "sbgft/transform_bank.hpp"

namespace fs = std::filesystem;
using namespace sbgft;

namespace {

int g_threads = 0;
unsigned g_seed = 0;

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_bytes(p.string(), {s.begin(), s.end()});
}

std::string read_text(const std::string& p) {
  const auto b = read_file_bytes(p);
  return {b.begin(), b.end()};
}

GrayImage load_image(const std::string& path) {
  const GrayImage raw = read_pgm(path);
  GrayImage img = crop_to_multiple(raw, kMacroblockSize);
  if (img.width != raw.width || img.height != raw.height)
    std::cerr << "note: " << path << " cropped from " << raw.width << "x" << raw.height << " to " << img.width
              << "x" << img.height << "\n";
  return img;
}

// Banks for a configuration; files given with --bank replace the built-in
// bank of their size.
BankSet banks_for(Config config, const std::vector<std::string>& files) {
  BankSet b = config_banks(config == Config::F_C ? Config::F : config);
  for (const auto& f : files) {
    TransformBank tb = load_bank(f);
    const int n = tb.n;
    b[n] = std::move(tb);
  }
  return b;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void add_bank(CLI::App& app) {
  auto* bank = app.add_subcommand("bank", "Build or inspect transform bank files")->require_subcommand(1);

  auto* build = bank->add_subcommand("build", "Build SBGF bank files");
  static std::vector<int> sizes{8};
  static std::string config = "F", out;
  build->add_option("--sizes", sizes, "Block sizes")->delimiter(',');
  build->add_option("--config", config, "Configuration whose bank to build (A..F)");
  build->add_option("--out", out, "Output file (one size) or directory")->required();
  build->callback([] {
    const Config c = parse_config(config);
    for (int n : sizes) {
      const TransformBank b = build_bank(n, c == Config::F_C ? Config::F : c);
      fs::path p = out;
      if (sizes.size() > 1 || fs::is_directory(p)) p = p / fmt("%s_%d.sbgf", to_string(c), n);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      save_bank(b, p.string());
      std::cout << p.string() << ": n=" << n << " members=" << b.size() << fmt(" hash=%08x", bank_hash(b)) << "\n";
    }
  });

  auto* inspect = bank->add_subcommand("inspect", "Describe a bank file");
  static std::string file;
  inspect->add_option("file", file, "SBGF file")->required()->check(CLI::ExistingFile);
  inspect->callback([] {
    const TransformBank b = load_bank(file);
    std::cout << "n=" << b.n << " label=" << b.label << " members=" << b.size()
              << fmt(" hash=%08x", bank_hash(b)) << "\n";
    for (std::size_t i = 0; i < b.size(); ++i)
      std::cout << i << " " << b[i].id().label() << " multiplications=" << b[i].multiplications() << "\n";
  });
}

void add_analyze(CLI::App& app) {
  auto* an = app.add_subcommand("analyze", "Analyses")->require_subcommand(1);
  auto* sym = an->add_subcommand("symmetry", "Eigenvector and residual symmetry ratios");
  static int n = 8;
  static double threshold = 0.7;
  static std::string out_dir = ".", residuals;
  sym->add_option("--n", n, "Grid size");
  sym->add_option("--out-dir", out_dir, "Directory for the CSV files");
  sym->add_option("--residuals", residuals, "SBRD file for the residual histogram")->check(CLI::ExistingFile);
  sym->add_option("--threshold", threshold, "Residual symmetry threshold");
  sym->callback([] {
    const auto reports = eigenvector_symmetry_report(n, g_threads);
    std::string per = "axis,main,index,symmetry_ratio\n", summary = "axis,main,min_abs,mean_abs\n";
    double worst = 1.0;
    for (const auto& r : reports) {
      for (std::size_t j = 0; j < r.ratios.size(); ++j)
        per += r.axis.label() + "," + std::to_string(r.axis.is_main()) + "," + std::to_string(j) + "," +
               (std::isnan(r.ratios[j]) ? std::string("nan") : fmt("%.9f", r.ratios[j])) + "\n";
      summary += r.axis.label() + "," + std::to_string(r.axis.is_main()) + "," + fmt("%.9f", r.min_abs) + "," +
                 fmt("%.9f", r.mean_abs) + "\n";
      if (!r.axis.is_main()) worst = std::min(worst, r.min_abs);
    }
    write_text(fs::path(out_dir) / "eigen_symmetry.csv", per);
    write_text(fs::path(out_dir) / "eigen_symmetry_summary.csv", summary);
    std::cout << "non-main-axis minimum |S| = " << fmt("%.6f", worst) << "\n";
    if (residuals.empty()) return;
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& r : load_residuals(residuals))
      if (r.size == n) blocks.push_back(r.block());
    if (blocks.empty()) throw std::runtime_error("no residual blocks of size " + std::to_string(n));
    const auto h = residual_symmetry_histogram(blocks, n, threshold, g_threads);
    std::string csv = "axis,fraction_above_threshold\n";
    for (std::size_t i = 0; i < h.axes.size(); ++i) csv += h.axes[i].label() + "," + fmt("%.6f", h.per_axis[i]) + "\n";
    for (int d = 0; d < 4; ++d)
      csv += std::string("any_") + to_string(static_cast<AxisDirection>(d)) + "," + fmt("%.6f", h.any_axis[d]) + "\n";
    write_text(fs::path(out_dir) / "residual_symmetry.csv", csv);
    std::cout << "residual blocks analysed: " << h.blocks << "\n";
  });
}

void add_codec(CLI::App& app) {
  static std::string in, out, config = "C", subset, recon, reference;
  static int qp = 30;
  static std::vector<std::string> bank_files;
  static bool real_bits = false, full_width = false;
  auto* enc = app.add_subcommand("encode", "Encode a PGM image into an SBGC stream");
  enc->add_option("--in", in, "Input PGM")->required()->check(CLI::ExistingFile);
  enc->add_option("--out", out, "Output stream")->required();
  enc->add_option("--qp", qp, "Quantization parameter")->check(CLI::Range(0, 51));
  enc->add_option("--config", config, "Configuration A..F or F_<C>");
  enc->add_option("--bank", bank_files, "Bank files replacing built-in banks")->check(CLI::ExistingFile);
  enc->add_option("--subset", subset, "Subset table CSV (F_<C>)")->check(CLI::ExistingFile);
  enc->add_flag("--full-width-index", full_width, "Signal bank ordinals with full-bank width (F_<C>)");
  enc->add_flag("--real-bits", real_bits, "Report the coded payload size as the rate");
  enc->add_option("--recon", recon, "Write the encoder reconstruction as PGM");
  enc->callback([] {
    const GrayImage img = load_image(in);
    int c_size = 0;
    const Config c = parse_config(config, &c_size);
    const BankSet banks = banks_for(c, bank_files);
    SubsetTable table;
    if (c == Config::F_C) {
      if (subset.empty()) throw std::runtime_error("configuration " + config + " needs --subset");
      table = load_subset_table(subset);
    }
    CodingSetup s;
    s.config = c;
    s.qp = qp;
    s.banks = &banks;
    s.subsets = c == Config::F_C ? &table : nullptr;
    s.subset_size = c_size;
    s.full_width_index = full_width;
    const auto t0 = std::chrono::steady_clock::now();
    const EncodedImage e = encode_image(img, s, g_threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file_bytes(out, e.stream);
    if (!recon.empty()) write_pgm(e.reconstruction, recon);
    const double px = static_cast<double>(img.pixels.size());
    std::cout << "config=" << config << " qp=" << qp << " size=" << img.width << "x" << img.height
              << fmt(" psnr=%.4f", e.psnr) << fmt(" bpp_estimate=%.6f", e.estimated_bits / px)
              << fmt(" bpp_coded=%.6f", static_cast<double>(e.stream.size() * 8) / px)
              << " bpp=" << fmt("%.6f", (real_bits ? static_cast<double>(e.stream.size() * 8) : e.estimated_bits) / px)
              << " bytes=" << e.stream.size() << fmt(" seconds=%.2f", secs) << "\n";
  });

  auto* dec = app.add_subcommand("decode", "Decode an SBGC stream into a PGM image");
  static std::string din, dout, dsubset, dref;
  static std::vector<std::string> dbanks;
  dec->add_option("--in", din, "Input stream")->required()->check(CLI::ExistingFile);
  dec->add_option("--out", dout, "Output PGM")->required();
  dec->add_option("--bank", dbanks, "Bank files used at encode time")->check(CLI::ExistingFile);
  dec->add_option("--subset", dsubset, "Subset table CSV used at encode time")->check(CLI::ExistingFile);
  dec->add_option("--reference", dref, "Original image to report PSNR against")->check(CLI::ExistingFile);
  dec->callback([] {
    const auto stream = read_file_bytes(din);
    const StreamHeader h = read_stream_header(stream);
    const BankSet banks = banks_for(h.config, dbanks);
    SubsetTable table;
    if (!dsubset.empty()) table = load_subset_table(dsubset);
    const GrayImage img = decode_image(stream, banks, dsubset.empty() ? nullptr : &table);
    write_pgm(img, dout);
    std::cout << "decoded " << img.width << "x" << img.height << " config=" << to_string(h.config)
              << " qp=" << h.qp;
    if (!dref.empty()) std::cout << fmt(" psnr=%.4f", psnr(load_image(dref), img));
    std::cout << "\n";
  });
}

void add_dataset(CLI::App& app) {
  auto* ds = app.add_subcommand("dataset", "Residual datasets")->require_subcommand(1);
  auto* res = ds->add_subcommand("residuals", "Generate open-loop intra residuals (SBRD)");
  static std::vector<std::string> images;
  static std::vector<int> qps{30};
  static std::string out;
  res->add_option("--images", images, "Input PGM images")->required()->check(CLI::ExistingFile);
  res->add_option("--qps", qps, "Quantization parameters")->delimiter(',');
  res->add_option("--out", out, "Output SBRD file")->required();
  res->callback([] {
    std::vector<GrayImage> imgs;
    for (const auto& p : images) imgs.push_back(load_image(p));
    std::vector<ResidualRecord> all;
    for (int qp : qps) {
      auto part = generate_residual_dataset(imgs, qp, g_threads);
      all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    save_residuals(all, out);
    std::cout << out << ": " << all.size() << " residual blocks\n";
  });
}

void add_stats(CLI::App& app) {
  auto* st = app.add_subcommand("stats", "Transform selection statistics")->require_subcommand(1);
  auto* col = st->add_subcommand("collect", "Count full-bank RDOT winners per mode, size and qp");
  static std::string in, out;
  col->add_option("--in", in, "SBRD residual dataset")->required()->check(CLI::ExistingFile);
  col->add_option("--out", out, "Frequency table CSV")->required();
  col->callback([] {
    const auto ds = load_residuals(in);
    const BankSet banks = config_banks(Config::F);
    const FrequencyTable t = collect_stats(ds, banks, g_threads);
    write_text(out, frequency_table_csv(t));
    std::cout << out << ": " << t.counts.size() << " cells from " << ds.size() << " blocks\n";
  });
  auto* top = st->add_subcommand("topc", "Build a top-C subset table from a frequency table");
  static std::string tin, tout;
  static int C = 5;
  top->add_option("--in", tin, "Frequency table CSV")->required()->check(CLI::ExistingFile);
  top->add_option("-C,--cardinality", C, "Subset size")->check(CLI::PositiveNumber);
  top->add_option("--out", tout, "Subset table CSV")->required();
  top->callback([] {
    const SubsetTable s = top_c(parse_frequency_table_csv(read_text(tin)), C);
    save_subset_table(s, tout);
    std::cout << tout << ": " << s.cells.size() << " cells, C=" << C << "\n";
  });
}

void add_experiment(CLI::App& app) {
  auto* ex = app.add_subcommand("experiment", "RD experiments")->require_subcommand(1);
  auto* run = ex->add_subcommand("run", "Run configurations over a QP sweep");
  static std::vector<std::string> images, configs{"A", "B", "C"};
  static std::vector<int> qps{25, 30, 35, 40, 45};
  static std::string out_dir = ".", subset, anchor;
  static bool real_bits = false, full_width = false, timing = false, no_side_bits = false;
  run->add_option("--images", images, "Input PGM images")->required()->check(CLI::ExistingFile);
  run->add_option("--configs", configs, "Configurations")->delimiter(',');
  run->add_option("--qps", qps, "Quantization parameters")->delimiter(',');
  run->add_option("--out-dir", out_dir, "Directory for the CSV files");
  run->add_option("--subset", subset, "Subset table CSV for F_<C>")->check(CLI::ExistingFile);
  run->add_option("--anchor", anchor, "Anchor configuration for bd_rate.csv (default: first)");
  run->add_flag("--real-bits", real_bits, "Measure rate with the arithmetic coder");
  run->add_flag("--full-width-index", full_width, "F_<C> signals full-width bank ordinals");
  run->add_flag("--no-index-bits", no_side_bits, "Leave transform index bits out of RD costs and the rate estimate");
  run->add_flag("--timing", timing, "Print wall-clock time to stderr");
  run->callback([] {
    std::vector<NamedImage> imgs;
    for (const auto& p : images) imgs.push_back({fs::path(p).stem().string(), load_image(p)});
    SubsetTable table;
    if (!subset.empty()) table = load_subset_table(subset);
    ExperimentSpec spec;
    spec.configs = configs;
    spec.qps = qps;
    spec.threads = g_threads;
    spec.real_bits = real_bits;
    spec.subsets = subset.empty() ? nullptr : &table;
    spec.full_width_subset_index = full_width;
    spec.index_side_bits = !no_side_bits;
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult r = run_experiment(imgs, spec);
    const fs::path dir(out_dir);
    write_text(dir / "rd_curve.csv", rd_curve_csv(r.curves));
    write_text(dir / "winners.csv", winners_csv(r.blocks));
    write_text(dir / "complexity.csv", complexity_csv(r.complexity));
    const std::string a = anchor.empty() ? configs.front() : anchor;
    if (qps.size() >= 4 && configs.size() > 1) {
      write_text(dir / "bd_rate.csv", bd_rate_csv(r, a));
      for (const auto& c : configs)
        if (c != a) std::cout << c << " vs " << a << ": mean BD-rate " << fmt("%.2f%%", mean_bd_rate(r, a, c)) << "\n";
    }
    if (timing)
      std::cerr << fmt("elapsed %.1f s\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  });
}

void add_bdrate(CLI::App& app) {
  auto* bd = app.add_subcommand("bdrate", "BD-rate between two RD curve CSV files");
  static std::string a, b, ca, cb, image = "all";
  bd->add_option("anchor", a, "Anchor rd_curve.csv")->required()->check(CLI::ExistingFile);
  bd->add_option("test", b, "Test rd_curve.csv")->required()->check(CLI::ExistingFile);
  bd->add_option("--anchor-config", ca, "Configuration in the anchor file (default: first)");
  bd->add_option("--test-config", cb, "Configuration in the test file (default: first)");
  bd->add_option("--image", image, "Image name, or all for the pooled curve");
  bd->callback([] {
    auto pick = [](const std::vector<RdCurve>& cs, const std::string& cfg) -> const RdCurve& {
      for (const auto& c : cs)
        if ((cfg.empty() || c.config == cfg) && c.image == image) return c;
      throw std::runtime_error("curve not found for image " + image);
    };
    const auto A = parse_rd_curve_csv(read_text(a)), B = parse_rd_curve_csv(read_text(b));
    std::cout << fmt("%.2f%%", bd_rate(pick(A, ca), pick(B, cb))) << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-based graph Fourier transform coding toolkit"};
  app.require_subcommand(1);
  app.add_option("--threads", g_threads, "Worker threads (0 = available parallelism)");
  app.add_option("--seed", g_seed, "Seed for any sampling (results are otherwise deterministic)");
  add_bank(app);
  add_analyze(app);
  add_codec(app);
  add_dataset(app);
  add_stats(app);
  add_experiment(app);
  add_bdrate(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
