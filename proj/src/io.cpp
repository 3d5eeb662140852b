#include "csi/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "csi/error.hpp"
#include "csi/random.hpp"

namespace csi::io {

namespace {

class Writer {
 public:
  void magic(std::string_view m) { out_.append(m); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(double v) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f) && std::isfinite(v))
      throw FormatError("value " + std::to_string(v) + " overflows 32-bit float", out_.size());
    u32(std::bit_cast<std::uint32_t>(f));
  }
  void finite_f32(double v) {
    if (!std::isfinite(v)) throw FormatError("refusing to write a non-finite value", out_.size());
    f32(v);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  void magic(std::string_view want) {
    need(want.size());
    if (b_.substr(pos_, want.size()) != want)
      throw FormatError("bad magic, expected \"" + std::string(want) + "\"", pos_);
    pos_ += want.size();
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double finite_f32() {
    const std::size_t at = pos_;
    const float f = f32();
    if (!std::isfinite(f)) throw FormatError("non-finite payload value", at);
    return f;
  }
  // Payload of `count` 4-byte values must fill the rest of the buffer exactly.
  void expect_payload(std::uint64_t count) {
    const std::uint64_t want = count * 4;
    if (b_.size() - pos_ < want)
      throw FormatError("truncated payload: need " + std::to_string(want) + " bytes, have " +
                            std::to_string(b_.size() - pos_),
                        b_.size());
    if (b_.size() - pos_ > want) throw FormatError("trailing bytes after payload", pos_ + want);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) throw FormatError("truncated header", b_.size());
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw ArgumentError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

void positive(std::uint64_t v, const char* what, std::size_t offset) {
  if (v == 0) throw FormatError(std::string(what) + " must be positive", offset);
}

}  // namespace

std::string encode_scube(const Tensor3& cube) {
  const Dims& d = cube.dims();
  Writer w;
  w.magic("SCB1");
  w.u32(checked_u32(d.M, "M"));
  w.u32(checked_u32(d.N, "N"));
  w.u32(checked_u32(d.L, "L"));
  for (double v : cube.data()) w.finite_f32(v);
  return w.take();
}

Tensor3 decode_scube(std::string_view bytes) {
  Reader r(bytes);
  r.magic("SCB1");
  const std::uint32_t M = r.u32(), N = r.u32(), L = r.u32();
  positive(M, "M", 4);
  positive(N, "N", 8);
  positive(L, "L", 12);
  const std::uint64_t count = std::uint64_t(M) * N * L;
  r.expect_payload(count);
  std::vector<double> data(count);
  for (double& v : data) v = r.finite_f32();
  return Tensor3(Dims{M, N, L}, std::move(data));
}

std::string encode_smea(const MeasurementSet& m) {
  Writer w;
  w.magic("SME1");
  w.u32(checked_u32(m.shots(), "S"));
  w.u32(checked_u32(m.rows(), "M"));
  w.u32(checked_u32(m.cols(), "cols"));
  w.f32(m.provenance().snr_db);
  w.u64(m.provenance().seed);
  w.u8(static_cast<std::uint8_t>(m.provenance().kind));
  for (double v : m.y()) w.finite_f32(v);
  return w.take();
}

MeasurementSet decode_smea(std::string_view bytes) {
  Reader r(bytes);
  r.magic("SME1");
  const std::uint32_t S = r.u32(), M = r.u32(), cols = r.u32();
  positive(S, "S", 4);
  positive(M, "M", 8);
  positive(cols, "cols", 12);
  Provenance p;
  const std::size_t snr_at = r.pos();
  const float snr = r.f32();
  if (std::isnan(snr) || snr == -std::numeric_limits<float>::infinity())
    throw FormatError("SNR must be finite or +inf", snr_at);
  p.snr_db = snr;
  p.seed = r.u64();
  const std::size_t kind_at = r.pos();
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("unknown aperture kind " + std::to_string(kind), kind_at);
  p.kind = static_cast<ApertureKind>(kind);
  const std::uint64_t count = std::uint64_t(S) * M * cols;
  r.expect_payload(count);
  std::vector<double> y(count);
  for (double& v : y) v = r.finite_f32();
  return MeasurementSet(S, M, cols, std::move(y), p);
}

std::string encode_aperture(const CodedApertureSet& a) {
  const Dims& d = a.scene_dims();
  Writer w;
  w.magic("SCA1");
  w.u8(static_cast<std::uint8_t>(a.kind()));
  w.u32(checked_u32(a.shots(), "S"));
  w.u32(checked_u32(d.M, "M"));
  w.u32(checked_u32(d.N, "N"));
  w.u32(checked_u32(d.L, "L"));
  for (const Tensor3& c : a.codes())
    for (double v : c.data()) w.finite_f32(v);
  return w.take();
}

CodedApertureSet decode_aperture(std::string_view bytes) {
  Reader r(bytes);
  r.magic("SCA1");
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("unknown aperture kind " + std::to_string(kind), 4);
  const std::uint32_t S = r.u32(), M = r.u32(), N = r.u32(), L = r.u32();
  positive(S, "S", 5);
  positive(M, "M", 9);
  positive(N, "N", 13);
  positive(L, "L", 17);
  const auto k = static_cast<ApertureKind>(kind);
  const std::size_t planes = k == ApertureKind::binary ? 1 : L;
  r.expect_payload(std::uint64_t(S) * M * N * planes);
  std::vector<Tensor3> codes;
  for (std::uint32_t s = 0; s < S; ++s) {
    Tensor3 c(Dims{M, N, planes});
    for (double& v : c.data()) v = r.finite_f32();
    codes.push_back(std::move(c));
  }
  try {
    return CodedApertureSet(k, Dims{M, N, L}, std::move(codes));
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid aperture payload: ") + e.what(), kScaHeaderBytes);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArgumentError("short write to '" + path.string() + "'");
}

Tensor3 read_scube(const std::filesystem::path& path) { return decode_scube(read_file(path)); }
void write_scube(const std::filesystem::path& path, const Tensor3& cube) {
  write_file(path, encode_scube(cube));
}
MeasurementSet read_smea(const std::filesystem::path& path) { return decode_smea(read_file(path)); }
void write_smea(const std::filesystem::path& path, const MeasurementSet& m) {
  write_file(path, encode_smea(m));
}
CodedApertureSet read_aperture(const std::filesystem::path& path) {
  return decode_aperture(read_file(path));
}
void write_aperture(const std::filesystem::path& path, const CodedApertureSet& a) {
  write_file(path, encode_aperture(a));
}

double normalize_cube(Tensor3& cube) {
  double peak = 0.0;
  for (double v : cube.data()) peak = std::max(peak, v);
  if (!(peak > 0.0)) return 1.0;
  for (double& v : cube.data()) v /= peak;
  return peak;
}

std::filesystem::path scale_sidecar_path(const std::filesystem::path& cube_path) {
  return std::filesystem::path(cube_path.string() + ".scale.txt");
}

void write_scale_sidecar(const std::filesystem::path& cube_path, double scale) {
  std::ostringstream os;
  os << std::setprecision(17) << "scale " << scale << "\n";
  write_file(scale_sidecar_path(cube_path), os.str());
}

std::string encode_pgm16(const Tensor3& cube, std::size_t band) {
  const Dims& d = cube.dims();
  if (band >= d.L)
    throw ArgumentError("band " + std::to_string(band) + " out of range [0, " + std::to_string(d.L - 1) + "]");
  std::string out = "P5\n" + std::to_string(d.N) + " " + std::to_string(d.M) + "\n65535\n";
  for (double v : cube.band(band)) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xFF));
  }
  return out;
}

Tensor3 parse_voxel_csv(std::string_view text) {
  struct Voxel {
    std::size_t m, n, l;
    double v;
  };
  std::vector<Voxel> voxels;
  Dims d{0, 0, 0};
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(offset, end - offset));
    const std::size_t line_start = offset;
    offset = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long long m = -1, n = -1, l = -1;
    double v = 0.0;
    char trail = 0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lf%c", &m, &n, &l, &v, &trail) != 4) {
      if (line_no == 1) continue;  // header
      throw FormatError("malformed voxel row " + std::to_string(line_no), line_start);
    }
    if (m < 0 || n < 0 || l < 0) throw FormatError("negative voxel index", line_start);
    if (!std::isfinite(v)) throw FormatError("non-finite voxel value", line_start);
    voxels.push_back({std::size_t(m), std::size_t(n), std::size_t(l), v});
    d.M = std::max(d.M, std::size_t(m) + 1);
    d.N = std::max(d.N, std::size_t(n) + 1);
    d.L = std::max(d.L, std::size_t(l) + 1);
  }
  if (voxels.empty()) throw FormatError("no voxel rows", 0);
  if (voxels.size() != d.size())
    throw FormatError("expected " + std::to_string(d.size()) + " voxels for " + std::to_string(d.M) + "x" +
                          std::to_string(d.N) + "x" + std::to_string(d.L) + ", found " +
                          std::to_string(voxels.size()),
                      text.size());
  Tensor3 t(d);
  std::vector<bool> seen(d.size(), false);
  for (const Voxel& x : voxels) {
    const std::size_t i = Tensor3::index(d, x.m, x.n, x.l);
    if (seen[i]) throw FormatError("duplicate voxel", text.size());
    seen[i] = true;
    t.data()[i] = x.v;
  }
  return t;
}

Tensor3 make_phantom(Dims dims, std::size_t blobs, std::uint64_t seed) {
  Rng rng(seed);
  Tensor3 cube(dims);
  const double side = static_cast<double>(std::min(dims.M, dims.N));
  // Spectral profiles are wide enough that adjacent bands differ by at most
  // about 0.4 of the peak.
  const double wmin = dims.L > 1 ? std::max(0.2, 1.5 / static_cast<double>(dims.L - 1)) : 0.2;
  std::vector<double> spectrum(dims.L);
  for (std::size_t b = 0; b < std::max<std::size_t>(blobs, 1); ++b) {
    const double cm = rng.uniform() * static_cast<double>(dims.M);
    const double cn = rng.uniform() * static_cast<double>(dims.N);
    const double sm = side * (0.06 + 0.14 * rng.uniform());
    const double sn = side * (0.06 + 0.14 * rng.uniform());
    const double amp = 0.5 + 0.5 * rng.uniform();

    std::fill(spectrum.begin(), spectrum.end(), 0.0);
    for (int k = 0; k < 3; ++k) {
      const double centre = rng.uniform();
      const double width = wmin + 0.25 * rng.uniform();
      const double weight = 0.2 + 0.8 * rng.uniform();
      for (std::size_t l = 0; l < dims.L; ++l) {
        const double t = dims.L > 1 ? static_cast<double>(l) / static_cast<double>(dims.L - 1) : 0.5;
        spectrum[l] += weight * std::exp(-(t - centre) * (t - centre) / (2.0 * width * width));
      }
    }
    const double smax = *std::max_element(spectrum.begin(), spectrum.end());
    for (double& s : spectrum) s /= smax;

    for (std::size_t m = 0; m < dims.M; ++m)
      for (std::size_t n = 0; n < dims.N; ++n) {
        const double dm = (static_cast<double>(m) - cm) / sm;
        const double dn = (static_cast<double>(n) - cn) / sn;
        const double spatial = amp * std::exp(-0.5 * (dm * dm + dn * dn));
        for (std::size_t l = 0; l < dims.L; ++l) cube(m, n, l) += spatial * spectrum[l];
      }
  }
  normalize_cube(cube);
  return cube;
}

std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) { return digest(read_file(path)); }

Dims parse_dims(const std::string& text) {
  unsigned long long m = 0, n = 0, l = 0;
  char trail = 0;
  if (std::sscanf(text.c_str(), "%llux%llux%llu%c", &m, &n, &l, &trail) != 3 || m == 0 || n == 0 || l == 0)
    throw ArgumentError("dims must look like MxNxL with positive extents, got '" + text + "'");
  return {m, n, l};
}

}  // namespace csi::io
