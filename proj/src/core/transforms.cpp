#include "transforms.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fourier.hpp"
#include "partition.hpp"

namespace avds {
namespace {

bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) { return std::countr_zero(n); }

bool sparsity_is_2d(SparsityBasis s) {
  return s == SparsityBasis::Haar2D || s == SparsityBasis::DB4_2D ||
         s == SparsityBasis::TensorWavelet;
}

bool sparsity_is_1d(SparsityBasis s) {
  return s == SparsityBasis::Haar1D || s == SparsityBasis::DB4_1D;
}

cplx unit_phase(std::size_t num, std::size_t den) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(num % den) /
                       static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

bool OperatorSpec::is_2d() const {
  switch (measurement) {
    case Measurement::DFT2D:
    case Measurement::Hadamard2D: return true;
    case Measurement::DFT1D: return false;
    case Measurement::Identity: return sparsity_is_2d(sparsity);
  }
  return false;
}

int OperatorSpec::depth() const {
  if (levels > 0) return levels;
  return std::max(1, log2_exact(side) - 3);
}

bool OperatorSpec::is_kronecker() const {
  return (measurement == Measurement::DFT2D || measurement == Measurement::Hadamard2D) &&
         (sparsity == SparsityBasis::Identity || sparsity == SparsityBasis::TensorWavelet);
}

void validate(const OperatorSpec& spec) {
  require(spec.side >= 1 && is_pow2(spec.side), ErrorCode::InvalidArgument,
          "operator side must be a power of two, got " + std::to_string(spec.side));
  require(spec.levels >= 0, ErrorCode::InvalidArgument, "negative wavelet depth");
  const bool meas_2d = spec.measurement == Measurement::DFT2D ||
                       spec.measurement == Measurement::Hadamard2D;
  if (meas_2d)
    require(!sparsity_is_1d(spec.sparsity), ErrorCode::InvalidArgument,
            "2D measurement paired with a 1D sparsity basis");
  if (spec.measurement == Measurement::DFT1D)
    require(!sparsity_is_2d(spec.sparsity), ErrorCode::InvalidArgument,
            "1D measurement paired with a 2D sparsity basis");
  if (spec.sparsity != SparsityBasis::Identity) {
    require(spec.side >= 2, ErrorCode::InvalidArgument, "wavelet side must be >= 2");
    require(spec.depth() <= log2_exact(spec.side), ErrorCode::InvalidArgument,
            "wavelet depth " + std::to_string(spec.depth()) + " exceeds log2(side)");
  }
}

OperatorSpec parse_operator_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, '/');) parts.push_back(item);
  require(parts.size() == 3 || parts.size() == 4, ErrorCode::Parse,
          "operator spec must be <measurement>/<sparsity>/<side>[/<levels>]: '" + text + "'");
  OperatorSpec spec;
  const std::string& m = parts[0];
  if (m == "identity") spec.measurement = Measurement::Identity;
  else if (m == "dft1d") spec.measurement = Measurement::DFT1D;
  else if (m == "dft2d") spec.measurement = Measurement::DFT2D;
  else if (m == "hadamard2d") spec.measurement = Measurement::Hadamard2D;
  else fail(ErrorCode::Parse, "unknown measurement '" + m + "'");

  const std::string& s = parts[1];
  if (s == "identity") spec.sparsity = SparsityBasis::Identity;
  else if (s == "haar1d") spec.sparsity = SparsityBasis::Haar1D;
  else if (s == "db4-1d") spec.sparsity = SparsityBasis::DB4_1D;
  else if (s == "haar2d") spec.sparsity = SparsityBasis::Haar2D;
  else if (s == "db4-2d") spec.sparsity = SparsityBasis::DB4_2D;
  else if (s == "tensor-haar") {
    spec.sparsity = SparsityBasis::TensorWavelet;
    spec.tensor_wavelet = Wavelet::Haar;
  } else if (s == "tensor-db4") {
    spec.sparsity = SparsityBasis::TensorWavelet;
    spec.tensor_wavelet = Wavelet::DB4;
  } else {
    fail(ErrorCode::Parse, "unknown sparsity basis '" + s + "'");
  }

  try {
    std::size_t pos = 0;
    spec.side = std::stoul(parts[2], &pos);
    require(pos == parts[2].size(), ErrorCode::Parse, "bad side '" + parts[2] + "'");
    if (parts.size() == 4) {
      spec.levels = std::stoi(parts[3], &pos);
      require(pos == parts[3].size(), ErrorCode::Parse, "bad levels '" + parts[3] + "'");
      require(spec.levels >= 1, ErrorCode::InvalidArgument, "wavelet depth must be at least 1");
    }
  } catch (const std::logic_error&) {
    fail(ErrorCode::Parse, "bad number in operator spec '" + text + "'");
  }
  validate(spec);
  return spec;
}

std::string to_string(const OperatorSpec& spec) {
  std::string m, s;
  switch (spec.measurement) {
    case Measurement::Identity: m = "identity"; break;
    case Measurement::DFT1D: m = "dft1d"; break;
    case Measurement::DFT2D: m = "dft2d"; break;
    case Measurement::Hadamard2D: m = "hadamard2d"; break;
  }
  switch (spec.sparsity) {
    case SparsityBasis::Identity: s = "identity"; break;
    case SparsityBasis::Haar1D: s = "haar1d"; break;
    case SparsityBasis::DB4_1D: s = "db4-1d"; break;
    case SparsityBasis::Haar2D: s = "haar2d"; break;
    case SparsityBasis::DB4_2D: s = "db4-2d"; break;
    case SparsityBasis::TensorWavelet:
      s = spec.tensor_wavelet == Wavelet::Haar ? "tensor-haar" : "tensor-db4";
      break;
  }
  std::string out = m + "/" + s + "/" + std::to_string(spec.side);
  if (spec.levels > 0) out += "/" + std::to_string(spec.levels);
  return out;
}

Operator::Operator(OperatorSpec spec) : spec_(spec) { validate(spec_); }

void Operator::apply_measurement(std::span<cplx> v, bool adjoint) const {
  const std::size_t n = spec_.side;
  switch (spec_.measurement) {
    case Measurement::Identity: break;
    case Measurement::DFT1D: unitary_dft(v, n, 1, adjoint); break;
    case Measurement::DFT2D: unitary_dft(v, n, n, adjoint); break;
    case Measurement::Hadamard2D: hadamard_2d(v, n); break;
  }
}

void Operator::apply_sparsity(std::span<cplx> v, bool synthesis) const {
  const std::size_t n = spec_.side;
  const int depth = spec_.depth();
  switch (spec_.sparsity) {
    case SparsityBasis::Identity: break;
    case SparsityBasis::Haar1D:
    case SparsityBasis::DB4_1D: {
      const Wavelet w = spec_.sparsity == SparsityBasis::Haar1D ? Wavelet::Haar : Wavelet::DB4;
      synthesis ? synthesize_1d(v, w, depth) : analyze_1d(v, w, depth);
      break;
    }
    case SparsityBasis::Haar2D:
    case SparsityBasis::DB4_2D: {
      const Wavelet w = spec_.sparsity == SparsityBasis::Haar2D ? Wavelet::Haar : Wavelet::DB4;
      synthesis ? synthesize_2d(v, n, w, depth) : analyze_2d(v, n, w, depth);
      break;
    }
    case SparsityBasis::TensorWavelet:
      synthesis ? synthesize_tensor(v, n, spec_.tensor_wavelet, depth)
                : analyze_tensor(v, n, spec_.tensor_wavelet, depth);
      break;
  }
}

CVec Operator::apply(Direction dir, std::span<const cplx> x) const {
  require(x.size() == size(), ErrorCode::DimensionMismatch,
          "operator input has length " + std::to_string(x.size()) + ", expected " +
              std::to_string(size()));
  CVec v(x.begin(), x.end());
  if (dir == Direction::Forward) {
    apply_sparsity(v, true);
    apply_measurement(v, false);
  } else {
    apply_measurement(v, true);
    apply_sparsity(v, false);
  }
  return v;
}

void Operator::measurement_row(std::size_t k, std::span<cplx> out) const {
  const std::size_t n = spec_.side;
  switch (spec_.measurement) {
    case Measurement::Identity:
      std::fill(out.begin(), out.end(), cplx{});
      out[k] = 1.0;
      break;
    case Measurement::DFT1D: {
      const double s = 1.0 / std::sqrt(static_cast<double>(n));
      for (std::size_t p = 0; p < n; ++p) out[p] = s * unit_phase(k * p, n);
      break;
    }
    case Measurement::DFT2D: {
      const std::size_t k1 = k % n, k2 = k / n;
      const double s = 1.0 / static_cast<double>(n);
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t p = 0; p < n; ++p)
          out[p + n * q] = s * unit_phase(k1 * p + k2 * q, n);
      break;
    }
    case Measurement::Hadamard2D: {
      const std::size_t k1 = k % n, k2 = k / n;
      for (std::size_t q = 0; q < n; ++q)
        for (std::size_t p = 0; p < n; ++p)
          out[p + n * q] = hadamard_entry(k1, p, n) * hadamard_entry(k2, q, n);
      break;
    }
  }
}

CVec Operator::row(std::size_t k) const {
  require(k < size(), ErrorCode::OutOfRange,
          "row index " + std::to_string(k) + " out of range [0, " + std::to_string(size()) + ")");
  CVec v(size());
  measurement_row(k, v);
  // a_k = Phi_{k,:} Psi* = (Psi Phi_{k,:}^T)^T since Psi is real.
  apply_sparsity(v, false);
  return v;
}

CVec Operator::factor_row(std::size_t k) const {
  require(spec_.is_kronecker(), ErrorCode::Unsupported,
          "operator " + to_string(spec_) + " has no Kronecker factorisation");
  const std::size_t n = spec_.side;
  require(k < n, ErrorCode::OutOfRange, "factor row index out of range");
  CVec v(n);
  if (spec_.measurement == Measurement::DFT2D) {
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p) v[p] = s * unit_phase(k * p, n);
  } else {
    for (std::size_t p = 0; p < n; ++p) v[p] = hadamard_entry(k, p, n);
  }
  if (spec_.sparsity == SparsityBasis::TensorWavelet)
    analyze_1d(v, spec_.tensor_wavelet, spec_.depth());
  return v;
}

CVec Operator::analyze(std::span<const cplx> image) const {
  require(image.size() == size(), ErrorCode::DimensionMismatch, "image length mismatch");
  CVec v(image.begin(), image.end());
  apply_sparsity(v, false);
  return v;
}

CVec Operator::synthesize(std::span<const cplx> coeffs) const {
  require(coeffs.size() == size(), ErrorCode::DimensionMismatch, "coefficient length mismatch");
  CVec v(coeffs.begin(), coeffs.end());
  apply_sparsity(v, true);
  return v;
}

std::vector<CVec> block_rows(const Operator& op, const BlockPartition& partition,
                             std::size_t k) {
  require(partition.size() == op.size(), ErrorCode::DimensionMismatch,
          "partition covers " + std::to_string(partition.size()) + " rows, operator has " +
              std::to_string(op.size()));
  std::vector<CVec> rows;
  for (std::size_t idx : partition.block(k)) rows.push_back(op.row(idx));
  return rows;
}

}  // namespace avds
