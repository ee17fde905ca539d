#include "sbgft/transform_bank.hpp"

#include <cmath>
#include <stdexcept>

#include <cstring>

#include "sbgft/binio.hpp"

namespace sbgft {

Eigen::MatrixXd dct2_kernel(int n) {
  Eigen::MatrixXd K(n, n);
  for (int k = 0; k < n; ++k) {
    const double c = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i) K(k, i) = c * std::cos(M_PI * (2 * i + 1) * k / (2.0 * n));
  }
  return K;
}

Eigen::MatrixXd dst7_kernel(int n) {
  Eigen::MatrixXd K(n, n);
  const double c = std::sqrt(4.0 / (2 * n + 1));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) K(k, i) = c * std::sin(M_PI * (2 * k + 1) * (i + 1) / (2.0 * n + 1));
  return K;
}

Eigen::MatrixXd dct8_kernel(int n) {
  Eigen::MatrixXd K(n, n);
  const double c = std::sqrt(4.0 / (2 * n + 1));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      K(k, i) = c * std::cos(M_PI * (2 * k + 1) * (2 * i + 1) / (4.0 * n + 2));
  return K;
}

const char* to_string(Kernel1D k) {
  switch (k) {
    case Kernel1D::DCT2: return "DCT2";
    case Kernel1D::DST7: return "DST7";
    case Kernel1D::DCT8: return "DCT8";
  }
  return "?";
}

Eigen::MatrixXd make_kernel(Kernel1D k, int n) {
  switch (k) {
    case Kernel1D::DCT2: return dct2_kernel(n);
    case Kernel1D::DST7: return dst7_kernel(n);
    case Kernel1D::DCT8: return dct8_kernel(n);
  }
  throw std::invalid_argument("unknown kernel");
}

Eigen::MatrixXd apply_separable(const Eigen::MatrixXd& h, const Eigen::MatrixXd& v,
                                const Eigen::MatrixXd& block) {
  if (block.rows() != v.cols() || block.cols() != h.cols())
    throw std::invalid_argument("apply_separable: size mismatch");
  return v * block * h.transpose();
}

Eigen::MatrixXd apply_separable_inverse(const Eigen::MatrixXd& h, const Eigen::MatrixXd& v,
                                        const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != v.rows() || coeffs.cols() != h.rows())
    throw std::invalid_argument("apply_separable_inverse: size mismatch");
  return v.transpose() * coeffs * h;
}

std::string TransformId::label() const {
  switch (kind) {
    case TransformKind::Sbgft: return "SBGFT(" + (axis ? axis->label() : std::string("?")) + ")";
    case TransformKind::Dct2: return "DCT2";
    case TransformKind::Mts:
      return std::string("MTS(") + to_string(h) + "," + to_string(v) + ")";
  }
  return "?";
}

Transform Transform::sbgft(std::shared_ptr<const GftBasis> basis, const ReflectionAxis& axis,
                           int ordinal) {
  if (basis->n != axis.n) throw std::invalid_argument("basis and axis sizes differ");
  Transform t;
  t.id_.n = basis->n;
  t.id_.kind = TransformKind::Sbgft;
  t.id_.axis = axis;
  t.id_.ordinal = ordinal;
  t.basis_ = std::move(basis);
  return t;
}

Transform Transform::separable(int n, Kernel1D h, Kernel1D v, int ordinal) {
  return separable(n, h, v, ordinal, make_kernel(h, n), make_kernel(v, n));
}

Transform Transform::separable(int n, Kernel1D h, Kernel1D v, int ordinal, Eigen::MatrixXd hk,
                               Eigen::MatrixXd vk) {
  if (hk.rows() != n || hk.cols() != n || vk.rows() != n || vk.cols() != n)
    throw std::invalid_argument("kernel size mismatch");
  Transform t;
  t.id_.n = n;
  t.id_.kind = (h == Kernel1D::DCT2 && v == Kernel1D::DCT2) ? TransformKind::Dct2 : TransformKind::Mts;
  t.id_.h = h;
  t.id_.v = v;
  t.id_.ordinal = ordinal;
  t.h_ = std::move(hk);
  t.v_ = std::move(vk);
  return t;
}

void Transform::forward(const double* f, double* c) const {
  const int nn = n() * n();
  if (basis_) {
    basis_->plan->forward({f, static_cast<std::size_t>(nn)}, {c, static_cast<std::size_t>(nn)});
    return;
  }
  Eigen::Map<const Eigen::MatrixXd> B(f, n(), n());
  Eigen::Map<Eigen::MatrixXd> C(c, n(), n());
  C.noalias() = v_ * B * h_.transpose();
}

void Transform::inverse(const double* c, double* f) const {
  const int nn = n() * n();
  if (basis_) {
    basis_->plan->inverse({c, static_cast<std::size_t>(nn)}, {f, static_cast<std::size_t>(nn)});
    return;
  }
  Eigen::Map<const Eigen::MatrixXd> C(c, n(), n());
  Eigen::Map<Eigen::MatrixXd> B(f, n(), n());
  B.noalias() = v_.transpose() * C * h_;
}

void Transform::forward_batch(const Eigen::MatrixXd& F, Eigen::MatrixXd& C) const {
  const int nn = n() * n();
  if (F.rows() != nn) throw std::invalid_argument("forward_batch: size mismatch");
  if (basis_) {
    basis_->plan->forward_batch(F, C);
    return;
  }
  C.resize(nn, F.cols());
  for (Eigen::Index b = 0; b < F.cols(); ++b) forward(F.col(b).data(), C.col(b).data());
}

Eigen::MatrixXd Transform::dense() const {
  if (basis_) return basis_->plan->dense();
  const int nn = n() * n();
  Eigen::MatrixXd U(nn, nn);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(nn);
  for (int j = 0; j < nn; ++j) {
    e.setZero();
    e[j] = 1.0;
    inverse(e.data(), U.col(j).data());
  }
  return U;
}

long Transform::multiplications() const {
  if (basis_) return basis_->plan->multiplication_count();
  return 2L * n() * n() * n();
}

const char* to_string(Config c) {
  switch (c) {
    case Config::A: return "A";
    case Config::B: return "B";
    case Config::C: return "C";
    case Config::D: return "D";
    case Config::E: return "E";
    case Config::F: return "F";
    case Config::F_C: return "F_C";
  }
  return "?";
}

Config parse_config(const std::string& s, int* subset_size) {
  if (s.size() == 1) {
    switch (s[0]) {
      case 'A': return Config::A;
      case 'B': return Config::B;
      case 'C': return Config::C;
      case 'D': return Config::D;
      case 'E': return Config::E;
      case 'F': return Config::F;
      default: break;
    }
  }
  if (s.rfind("F_", 0) == 0 && s.size() > 2) {
    if (s == "F_C") return Config::F_C;
    std::size_t used = 0;
    int c = 0;
    try {
      c = std::stoi(s.substr(2), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == s.size() - 2 && c >= 1) {
      if (subset_size) *subset_size = c;
      return Config::F_C;
    }
  }
  throw std::invalid_argument("unknown configuration '" + s + "'");
}

bool is_residual_config(Config c) {
  return c == Config::D || c == Config::E || c == Config::F || c == Config::F_C;
}

TransformBank build_dct_bank(int n) {
  TransformBank b;
  b.n = n;
  b.label = "DCT2";
  b.members.push_back(Transform::separable(n, Kernel1D::DCT2, Kernel1D::DCT2, 0));
  return b;
}

TransformBank build_mts5_bank(int n) {
  TransformBank b;
  b.n = n;
  b.label = "MTS5";
  const Kernel1D pairs[5][2] = {{Kernel1D::DCT2, Kernel1D::DCT2},
                                {Kernel1D::DST7, Kernel1D::DST7},
                                {Kernel1D::DCT8, Kernel1D::DCT8},
                                {Kernel1D::DST7, Kernel1D::DCT8},
                                {Kernel1D::DCT8, Kernel1D::DST7}};
  for (int i = 0; i < 5; ++i) b.members.push_back(Transform::separable(n, pairs[i][0], pairs[i][1], i));
  return b;
}

TransformBank build_bank(int n, Config config, SbgftLibrary& lib) {
  validate_grid_size(n);
  if (n != 4 && n != 8 && n != 16 && n != 32 && n != 64)
    throw std::invalid_argument("block size must be a power of two in 4..64");
  const bool big = n > kMaxMultiTransformSize;
  TransformBank b;
  b.n = n;
  b.label = to_string(config);
  auto dct = [&] { b.members.push_back(Transform::separable(n, Kernel1D::DCT2, Kernel1D::DCT2, 0)); };
  auto mts = [&] { b.members = build_mts5_bank(n).members; };
  auto sbg = [&] {
    const auto& bases = lib.bases(n);
    const auto axes = enumerate_reflection_axes(n);
    for (std::size_t i = 0; i < axes.size(); ++i)
      b.members.push_back(Transform::sbgft(bases[i], axes[i], static_cast<int>(b.members.size())));
  };
  if (big) {
    dct();
    return b;
  }
  switch (config) {
    case Config::A: dct(); break;
    case Config::B:
      dct();
      if (n == 8) sbg();
      break;
    case Config::C: dct(); sbg(); break;
    case Config::D: mts(); break;
    case Config::E:
      if (n == 8) sbg(); else mts();
      break;
    case Config::F:
    case Config::F_C: sbg(); break;
  }
  return b;
}

BankSet config_banks(Config config, SbgftLibrary& lib) {
  BankSet s;
  for (int n = 4; n <= 64; n *= 2) s.emplace(n, build_bank(n, config, lib));
  return s;
}

namespace {

constexpr std::uint16_t kBankVersion = 1;

void write_matrix_rowmajor(ByteWriter& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

Eigen::MatrixXd read_matrix_rowmajor(ByteReader& r, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_bank(const TransformBank& bank) {
  ByteWriter w;
  w.bytes("SBGF", 4);
  w.u16(kBankVersion);
  w.u16(static_cast<std::uint16_t>(bank.n));
  w.u32(static_cast<std::uint32_t>(bank.members.size()));
  w.str8(bank.label);
  const int nn = bank.n * bank.n;
  for (const auto& t : bank.members) {
    const auto& id = t.id();
    w.u8(static_cast<std::uint8_t>(id.kind));
    if (id.kind == TransformKind::Sbgft) {
      if (!id.axis) throw std::logic_error("SBGFT member without axis");
      w.u8(static_cast<std::uint8_t>(id.axis->direction));
      w.u16(static_cast<std::uint16_t>(id.axis->k));
      // Forward matrix U^T row-major is U column-major.
      const Eigen::MatrixXd U = t.dense();
      w.data().reserve(w.data().size() + static_cast<std::size_t>(nn) * nn * 8);
      for (Eigen::Index i = 0; i < U.size(); ++i) w.f64(U.data()[i]);
    } else {
      w.u8(static_cast<std::uint8_t>(id.h));
      w.u8(static_cast<std::uint8_t>(id.v));
      write_matrix_rowmajor(w, t.h_kernel());
      write_matrix_rowmajor(w, t.v_kernel());
    }
  }
  w.u32(crc32_of(w.data().data(), w.data().size()));
  return std::move(w.data());
}

TransformBank deserialize_bank(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SBGF", 4) != 0)
    throw FormatError(FormatError::Kind::Magic, "not a transform bank file (bad magic)");
  ByteReader r(bytes);
  r.skip(4);
  const auto version = r.u16();
  if (version != kBankVersion)
    throw FormatError(FormatError::Kind::Version,
                      "unsupported bank format version " + std::to_string(version));
  const int n = r.u16();
  const std::uint32_t count = r.u32();
  const std::string label = r.str8();
  if (n < 1 || n > 64) throw FormatError(FormatError::Kind::Invalid, "bad block size in bank");
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const std::size_t body = r.pos();

  // Structural pass over sizes only, so truncation is reported as such.
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = r.u8();
    if (kind == static_cast<std::uint8_t>(TransformKind::Sbgft))
      r.skip(3 + nn * nn * 8);
    else if (kind <= static_cast<std::uint8_t>(TransformKind::Mts))
      r.skip(2 + 2 * nn * 8);
    else
      throw FormatError(FormatError::Kind::Invalid, "unknown transform kind tag");
  }
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::Invalid, "trailing bytes in bank file");
  if (stored != crc32_of(bytes.data(), bytes.size() - 4))
    throw FormatError(FormatError::Kind::Checksum, "bank file checksum mismatch");

  TransformBank bank;
  bank.n = n;
  bank.label = label;
  ByteReader m(bytes.data() + body, bytes.size() - body - 4);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = m.u8();
    if (kind == static_cast<std::uint8_t>(TransformKind::Sbgft)) {
      const auto dir = m.u8();
      const int k = m.u16();
      if (dir > 3) throw FormatError(FormatError::Kind::Invalid, "bad axis direction in bank");
      const ReflectionAxis ax{static_cast<AxisDirection>(dir), k, n};
      try {
        validate_axis(ax);
      } catch (const std::invalid_argument& e) {
        throw FormatError(FormatError::Kind::Invalid, e.what());
      }
      Eigen::MatrixXd U(nn, nn);
      for (Eigen::Index j = 0; j < U.size(); ++j) U.data()[j] = m.f64();
      auto basis = std::make_shared<GftBasis>();
      basis->n = n;
      basis->pairings = symmetry_generators(ax);
      try {
        basis->plan = std::make_shared<FastPlan>(plan_from_dense(U, basis->pairings));
      } catch (const std::exception& e) {
        throw FormatError(FormatError::Kind::Invalid, e.what());
      }
      const auto g = build_sbg(n, ax);
      basis->label = g.label();
      basis->eigenvalues.resize(nn);
      basis->parity.assign(nn, 0);
      basis->parity2.assign(nn, 0);
      for (std::size_t j = 0; j < nn; ++j)
        basis->eigenvalues[j] = laplacian_quadratic_form(g, {U.col(j).data(), nn});
      for (const auto& blk : basis->plan->blocks())
        for (int j : blk.out_index) {
          basis->parity[j] = blk.parity;
          basis->parity2[j] = blk.parity2;
        }
      bank.members.push_back(Transform::sbgft(std::move(basis), ax, static_cast<int>(i)));
    } else {
      const auto h = m.u8(), v = m.u8();
      if (h > 2 || v > 2) throw FormatError(FormatError::Kind::Invalid, "bad kernel tag in bank");
      auto hk = read_matrix_rowmajor(m, n, n);
      auto vk = read_matrix_rowmajor(m, n, n);
      bank.members.push_back(Transform::separable(n, static_cast<Kernel1D>(h), static_cast<Kernel1D>(v),
                                                  static_cast<int>(i), std::move(hk), std::move(vk)));
    }
  }
  return bank;
}

void save_bank(const TransformBank& bank, const std::string& path) {
  write_file_bytes(path, serialize_bank(bank));
}

TransformBank load_bank(const std::string& path) { return deserialize_bank(read_file_bytes(path)); }

std::uint32_t bank_hash(const TransformBank& bank) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(bank.n));
  w.str8(bank.label);
  std::uint32_t c = crc32_of(w.data().data(), w.data().size());
  for (const auto& t : bank.members) {
    const auto lab = t.id().label();
    c = crc32_of(lab.data(), lab.size(), c);
    if (t.basis()) {
      for (const auto& b : t.basis()->plan->blocks()) {
        c = crc32_of(b.W.data(), static_cast<std::size_t>(b.W.size()) * sizeof(double), c);
        c = crc32_of(b.out_index.data(), b.out_index.size() * sizeof(int), c);
      }
    } else {
      c = crc32_of(t.h_kernel().data(), static_cast<std::size_t>(t.h_kernel().size()) * sizeof(double), c);
      c = crc32_of(t.v_kernel().data(), static_cast<std::size_t>(t.v_kernel().size()) * sizeof(double), c);
    }
  }
  return c;
}

}  // namespace sbgft
