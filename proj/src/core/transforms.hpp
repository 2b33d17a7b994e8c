#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "wavelet.hpp"

namespace avds {

enum class Measurement { Identity, DFT1D, DFT2D, Hadamard2D };

enum class SparsityBasis {
  Identity,
  Haar1D,
  DB4_1D,
  Haar2D,        // square multilevel MRA
  DB4_2D,        // square multilevel MRA
  TensorWavelet  // psi (x) psi with a 1D wavelet
};

enum class Direction { Forward, Adjoint };

// Declarative description of the unitary A0 = Phi Psi*. `side` is the
// signal length for 1D operators and the image side for 2D ones; images
// are vectorised column-major.
struct OperatorSpec {
  Measurement measurement = Measurement::DFT1D;
  SparsityBasis sparsity = SparsityBasis::Identity;
  Wavelet tensor_wavelet = Wavelet::Haar;  // only for TensorWavelet
  std::size_t side = 0;
  int levels = 0;  // 0 selects the default depth

  bool is_2d() const;
  std::size_t size() const { return is_2d() ? side * side : side; }
  // Effective decomposition depth: `levels` if set, else
  // max(1, log2(side) - 3).
  int depth() const;
  // True when A0 = phi (x) phi for a 1D unitary phi of order `side`.
  bool is_kronecker() const;

  bool operator==(const OperatorSpec&) const = default;
};

// Validates sizes and measurement/sparsity compatibility; throws.
void validate(const OperatorSpec& spec);

// "<measurement>/<sparsity>/<side>[/<levels>]", e.g. "dft2d/db4-2d/64".
// measurement: identity | dft1d | dft2d | hadamard2d
// sparsity:    identity | haar1d | db4-1d | haar2d | db4-2d |
//              tensor-haar | tensor-db4
OperatorSpec parse_operator_spec(const std::string& text);
std::string to_string(const OperatorSpec& spec);

// Fast application of A0 and its rows. Cheap to copy; all methods are
// const and reentrant.
class Operator {
 public:
  explicit Operator(OperatorSpec spec);

  const OperatorSpec& spec() const { return spec_; }
  std::size_t size() const { return spec_.size(); }

  CVec apply(Direction dir, std::span<const cplx> x) const;
  CVec forward(std::span<const cplx> x) const { return apply(Direction::Forward, x); }
  CVec adjoint(std::span<const cplx> y) const { return apply(Direction::Adjoint, y); }

  // Row a_k of A0, built from the k-th measurement row and one sparsity
  // transform.
  CVec row(std::size_t k) const;

  // Row k of the 1D factor phi when A0 = phi (x) phi.
  CVec factor_row(std::size_t k) const;

  // Psi and Psi* on their own (image <-> coefficients).
  CVec analyze(std::span<const cplx> image) const;
  CVec synthesize(std::span<const cplx> coeffs) const;

 private:
  void measurement_row(std::size_t k, std::span<cplx> out) const;
  void apply_measurement(std::span<cplx> v, bool adjoint) const;
  void apply_sparsity(std::span<cplx> v, bool synthesis) const;

  OperatorSpec spec_;
};

class BlockPartition;

// Rows of block k in partition order.
std::vector<CVec> block_rows(const Operator& op, const BlockPartition& partition,
                             std::size_t k);

}  // namespace avds
