#include <cmath>

#include "doctest.h"
#include "sbgft/binio.hpp"
#include "sbgft/codec.hpp"

using namespace sbgft;

namespace {

GrayImage crop(const GrayImage& img, int r0, int c0, int h, int w) {
  GrayImage out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
  return out;
}

GrayImage camera_crop() {
  return crop(read_pgm(std::string(SBGFT_TEST_DATA) + "/eval_camera.pgm"), 128, 192, 128, 128);
}

// Graph banks up to 16 and DCT-II above keep the test fast.
BankSet small_graph_banks() {
  BankSet s;
  for (int n : {4, 8, 16}) s.emplace(n, build_bank(n, Config::F));
  for (int n : {32, 64}) s.emplace(n, build_dct_bank(n));
  return s;
}

}  // namespace

TEST_CASE("stream round trip is bit-exact") {
  const GrayImage img = camera_crop();
  const BankSet graph = small_graph_banks();
  const BankSet dbank = config_banks(Config::D);
  const BankSet abank = config_banks(Config::A);
  struct Case {
    Config c;
    const BankSet* b;
  };
  for (const Case& cs : {Case{Config::A, &abank}, Case{Config::D, &dbank}, Case{Config::F, &graph},
                         Case{Config::C, &graph}}) {
    for (int qp : {25, 40}) {
      CodingSetup s;
      s.config = cs.c;
      s.qp = qp;
      s.banks = cs.b;
      const auto enc = encode_image(img, s, 2);
      const auto dec = decode_image(enc.stream, *cs.b);
      CHECK(dec == enc.reconstruction);
      CHECK(enc.psnr > 25);
      const auto h = read_stream_header(enc.stream);
      CHECK(h.qp == qp);
      CHECK(h.config == cs.c);
      CHECK(h.width == 128);
      CHECK(enc.payload_bits > 0);
      CHECK(enc.stream.size() * 8 >= enc.payload_bits);
      // Thread count does not change the stream.
      CHECK(encode_image(img, s, 1).stream == enc.stream);
    }
  }
}

TEST_CASE("subset stream round trip") {
  const GrayImage img = camera_crop();
  const GrayImage train = crop(read_pgm(std::string(SBGFT_TEST_DATA) + "/train_chelsea.pgm"), 0, 0, 128, 128);
  const BankSet graph = small_graph_banks();
  const auto stats = collect_stats(generate_residual_dataset({train}, 30, 2), graph, 2);
  const auto table = top_c(stats, 5);
  for (bool wide : {false, true}) {
    CodingSetup s;
    s.config = Config::F_C;
    s.qp = 32;
    s.banks = &graph;
    s.subsets = &table;
    s.subset_size = 5;
    s.full_width_index = wide;
    const auto enc = encode_image(img, s, 2);
    CHECK(decode_image(enc.stream, graph, &table) == enc.reconstruction);
    for (const auto& mb : enc.macroblocks)
      for (const auto& lc : mb.leaves) {
        CHECK(lc.coded.evaluations == std::min<int>(5, static_cast<int>(graph.at(lc.leaf.size).size())));
        if (lc.leaf.size <= 16) CHECK(lc.coded.side_bits == (wide ? index_bits(graph.at(lc.leaf.size).size()) : 3));
      }
    CHECK_THROWS_AS(decode_image(enc.stream, graph, nullptr), std::invalid_argument);
    SubsetTable other = table;
    other.cells.begin()->second[0].frequency += 0.5;
    CHECK_THROWS_AS(decode_image(enc.stream, graph, &other), std::invalid_argument);
  }
  CodingSetup bad;
  bad.config = Config::F_C;
  bad.banks = &graph;
  CHECK_THROWS_AS(encode_image(img, bad), std::invalid_argument);
}

TEST_CASE("stream corruption and mismatch") {
  const GrayImage img = camera_crop();
  const BankSet abank = config_banks(Config::A);
  CodingSetup s;
  s.config = Config::A;
  s.qp = 51;
  s.banks = &abank;
  const auto enc = encode_image(img, s, 1);
  CHECK(decode_image(enc.stream, abank) == enc.reconstruction);
  auto bad = enc.stream;
  bad[bad.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode_image(bad, abank), FormatError);
  bad = enc.stream;
  bad.resize(bad.size() - 7);
  CHECK_THROWS_AS(decode_image(bad, abank), FormatError);
  bad = enc.stream;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_image(bad, abank), FormatError);
  const BankSet dbank = config_banks(Config::D);
  CHECK_THROWS_AS(decode_image(enc.stream, dbank), std::invalid_argument);
  CHECK_THROWS_AS(encode_image(GrayImage(100, 64), s), std::invalid_argument);
}
