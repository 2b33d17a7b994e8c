#include "io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unistd.h>

namespace avds {
namespace {

constexpr char kMagic[4] = {'A', 'V', 'D', 'S'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

std::string offset_text(std::size_t offset) { return "byte offset " + std::to_string(offset); }

// PGM header tokenizer: whitespace and '#' comments between fields.
class PgmCursor {
 public:
  explicit PgmCursor(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* field) {
    skip_space();
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      require(v <= (1ULL << 40), ErrorCode::Parse,
              std::string("PGM ") + field + " too large at " + offset_text(start));
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size())
        fail(ErrorCode::Parse,
             std::string("PGM truncated: expected ") + field + " at " + offset_text(pos_));
      fail(ErrorCode::Parse, std::string("PGM malformed: expected ") + field + " at " +
                                 offset_text(pos_));
    }
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  return tmp;
}

}  // namespace

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (std::uint64_t d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor Tensor::from_real(RVec values, std::vector<std::uint64_t> dims) {
  Tensor t;
  t.dtype = DType::Real64;
  t.dims = dims.empty() ? std::vector<std::uint64_t>{values.size()} : std::move(dims);
  t.real = std::move(values);
  require(t.numel() == t.real.size(), ErrorCode::DimensionMismatch,
          "tensor dims do not match payload length");
  return t;
}

Tensor Tensor::from_complex(CVec values, std::vector<std::uint64_t> dims) {
  Tensor t;
  t.dtype = DType::Complex128;
  t.dims = dims.empty() ? std::vector<std::uint64_t>{values.size()} : std::move(dims);
  t.complex = std::move(values);
  require(t.numel() == t.complex.size(), ErrorCode::DimensionMismatch,
          "tensor dims do not match payload length");
  return t;
}

CVec Tensor::as_complex() const {
  if (dtype == DType::Complex128) return complex;
  return CVec(real.begin(), real.end());
}

const RVec& Tensor::as_real() const {
  require(dtype == DType::Real64, ErrorCode::InvalidArgument, "expected a real64 tensor");
  return real;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  require(t.dims.size() <= 255, ErrorCode::InvalidArgument, "too many tensor dimensions");
  const std::size_t n = t.numel();
  require(n == (t.dtype == DType::Real64 ? t.real.size() : t.complex.size()),
          ErrorCode::DimensionMismatch, "tensor dims do not match payload length");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kTensorVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (std::uint64_t d : t.dims) put_u64(out, d);
  if (t.dtype == DType::Real64) {
    for (double v : t.real) put_f64(out, v);
  } else {
    for (const cplx& v : t.complex) {
      put_f64(out, v.real());
      put_f64(out, v.imag());
    }
  }
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 7, ErrorCode::Parse, "tensor file truncated in header");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::Parse,
          "not a tensor file (bad magic)");
  require(bytes[4] == kTensorVersion, ErrorCode::Parse,
          "unsupported tensor version " + std::to_string(bytes[4]));
  require(bytes[5] <= 1, ErrorCode::Parse, "unknown tensor dtype " + std::to_string(bytes[5]));
  Tensor t;
  t.dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  std::size_t pos = 7;
  require(bytes.size() >= pos + 8 * ndim, ErrorCode::Parse, "tensor file truncated in dims");
  unsigned __int128 count = 1;
  for (std::size_t d = 0; d < ndim; ++d, pos += 8) {
    t.dims.push_back(get_u64(bytes.data() + pos));
    count *= t.dims.back();
    require(count <= (1ULL << 40), ErrorCode::Parse, "tensor too large");
  }
  const std::size_t width = t.dtype == DType::Real64 ? 8 : 16;
  const std::size_t n = static_cast<std::size_t>(count);
  require(bytes.size() - pos == n * width, ErrorCode::Parse,
          "tensor payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
              std::to_string(n * width));
  if (t.dtype == DType::Real64) {
    t.real.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.real[i] = get_f64(bytes.data() + pos + 8 * i);
  } else {
    t.complex.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      t.complex[i] = {get_f64(bytes.data() + pos + 16 * i), get_f64(bytes.data() + pos + 16 * i + 8)};
  }
  return t;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  const auto tmp = temp_sibling(path);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::Io, "cannot rename into " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

RVec Image::column_major() const {
  RVec out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r + rows * c] = pixels[r * cols + c];
  return out;
}

Image Image::from_column_major(std::span<const double> values, std::size_t rows,
                               std::size_t cols) {
  require(values.size() == rows * cols, ErrorCode::DimensionMismatch,
          "image data does not match its shape");
  Image img{rows, cols, RVec(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) img.pixels[r * cols + c] = values[r + rows * c];
  return img;
}

Image decode_pgm(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5'),
          ErrorCode::Parse, "PGM malformed: expected magic P2 or P5 at byte offset 0");
  const bool binary = bytes[1] == '5';
  PgmCursor cur(bytes);
  cur.advance(2);
  const std::uint64_t cols = cur.number("width");
  const std::uint64_t rows = cur.number("height");
  const std::size_t maxval_at = cur.pos();
  const std::uint64_t maxval = cur.number("maxval");
  require(cols > 0 && rows > 0, ErrorCode::Parse, "PGM has zero width or height");
  require(maxval >= 1 && maxval <= 65535, ErrorCode::Parse,
          "PGM maxval " + std::to_string(maxval) + " outside 1..65535 near " +
              offset_text(maxval_at));
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  Image img{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), RVec(count)};
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    const std::size_t data = cur.pos() + 1;  // single whitespace after maxval
    require(cur.pos() < bytes.size(), ErrorCode::Parse,
            "PGM truncated: missing payload at " + offset_text(cur.pos()));
    require(std::isspace(bytes[cur.pos()]) != 0, ErrorCode::Parse,
            "PGM malformed: expected whitespace after maxval at " + offset_text(cur.pos()));
    const std::size_t width = maxval > 255 ? 2 : 1;
    const std::size_t need = count * width;
    if (bytes.size() < data + need)
      fail(ErrorCode::Parse, "PGM truncated: payload ends at " + offset_text(bytes.size()) +
                                 ", expected " + std::to_string(need) + " bytes from " +
                                 offset_text(data));
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = data + i * width;
      const unsigned v = width == 2 ? (bytes[at] << 8) | bytes[at + 1] : bytes[at];
      require(v <= maxval, ErrorCode::Parse, "PGM sample exceeds maxval at " + offset_text(at));
      img.pixels[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = cur.pos();
      const std::uint64_t v = cur.number("sample");
      require(v <= maxval, ErrorCode::Parse, "PGM sample exceeds maxval at " + offset_text(at));
      img.pixels[i] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

Image read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) fail(ErrorCode::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::vector<std::uint8_t> encode_pgm(const Image& image, int maxval) {
  require(maxval >= 1 && maxval <= 65535, ErrorCode::InvalidArgument, "maxval outside 1..65535");
  require(image.pixels.size() == image.rows * image.cols, ErrorCode::DimensionMismatch,
          "image data does not match its shape");
  const std::string header = "P5\n" + std::to_string(image.cols) + " " +
                             std::to_string(image.rows) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double p : image.pixels) {
    const double clamped = std::isfinite(p) ? std::clamp(p, 0.0, 1.0) : 0.0;
    const auto v = static_cast<unsigned>(std::lround(clamped * maxval));
    if (maxval > 255) out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& image, int maxval) {
  write_file_atomic(path, encode_pgm(image, maxval));
}

Image log_scale_image(std::span<const double> values, std::size_t rows, std::size_t cols,
                      double decades) {
  require(decades > 0.0, ErrorCode::InvalidArgument, "decades must be positive");
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  RVec scaled(values.size(), 0.0);
  if (top > 0.0) {
    const double hi = std::log10(top), lo = hi - decades;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] > 0.0) scaled[i] = std::max(0.0, (std::log10(values[i]) - lo) / decades);
  }
  return Image::from_column_major(scaled, rows, cols);
}

Image linear_scale_image(std::span<const double> values, std::size_t rows, std::size_t cols) {
  require(!values.empty(), ErrorCode::InvalidArgument, "empty image");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  RVec scaled(values.size(), 0.0);
  if (*hi > *lo)
    for (std::size_t i = 0; i < values.size(); ++i) scaled[i] = (values[i] - *lo) / (*hi - *lo);
  return Image::from_column_major(scaled, rows, cols);
}

std::vector<RVec> load_corpus(const std::filesystem::path& dir, const OperatorSpec& spec) {
  require(std::filesystem::is_directory(dir), ErrorCode::Io,
          "corpus directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".avds")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::Io, "corpus directory " + dir.string() + " has no .pgm or .avds files");
  const Operator op(spec);
  std::vector<RVec> corpus;
  for (const auto& f : files) {
    CVec image;
    if (f.extension() == ".pgm") {
      const Image img = read_pgm(f);
      const RVec v = img.column_major();
      image.assign(v.begin(), v.end());
    } else {
      image = read_tensor(f).as_complex();
    }
    require(image.size() == spec.size(), ErrorCode::DimensionMismatch,
            f.string() + " has " + std::to_string(image.size()) + " samples, transform expects " +
                std::to_string(spec.size()));
    const CVec coeffs = op.analyze(image);
    RVec mag(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) mag[i] = std::abs(coeffs[i]);
    corpus.push_back(std::move(mag));
  }
  return corpus;
}

}  // namespace avds
