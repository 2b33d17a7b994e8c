#pragma once

#include <span>
#include <vector>

#include "error.hpp"
#include "mask.hpp"
#include "transforms.hpp"

namespace avds {

enum class Scaling { Unscaled, Importance };

// A = rows of A0 selected by a flat-index mask. With importance scaling each
// selected row is multiplied by sqrt(multiplicity / (m * pi_atom)), which
// gives the same A*A as stacking the m i.i.d. draws scaled by
// 1/sqrt(m pi_j).
class MeasurementOp {
 public:
  MeasurementOp(Operator op, Mask mask, Scaling scaling = Scaling::Unscaled);

  const Operator& op() const { return op_; }
  const Mask& mask() const { return mask_; }
  Scaling scaling() const { return scaling_; }
  std::size_t rows() const { return mask_.indices.size(); }
  std::size_t cols() const { return op_.size(); }
  bool is_full() const { return scaling_ == Scaling::Unscaled && rows() == cols(); }

  CVec forward(std::span<const cplx> x) const;
  CVec adjoint(std::span<const cplx> y) const;

 private:
  Operator op_;
  Mask mask_;
  Scaling scaling_;
  RVec row_scale_;
};

CVec measure(std::span<const cplx> x, const MeasurementOp& op);

struct SolverParams {
  int continuation_steps = 5;
  double mu_final_relative = 1e-6;  // final mu = this * max|A* y|
  double tolerance = 1e-7;          // relative objective change
  int max_inner_iterations = 3000;  // per continuation stage
};

struct StageRecord {
  double mu = 0.0;
  int iterations = 0;
  double objective_start = 0.0;  // smoothed objective at the warm start
  double objective_end = 0.0;
  double l1_norm = 0.0;
};

struct SolveResult {
  CVec x;
  bool converged = true;
  double relative_residual = 0.0;  // ||A x - y|| / ||y||
  int iterations = 0;
  std::vector<StageRecord> stages;
};

// min ||x||_1 s.t. A x = y by Nesterov's method on the Huber-smoothed l1
// norm with continuation in mu. Requires an unscaled operator (A A* = I).
// Hitting the iteration cap is reported through `converged`, not thrown.
SolveResult solve_bp(std::span<const cplx> y, const MeasurementOp& op,
                     const SolverParams& params = {});

// ||A_{I^c}* A_I (A_I* A_I)^{-1} sigma_I||_inf over the unscaled rows
// selected by `mask`. A value below 1 certifies that the signal with
// support I and sign pattern sigma is the unique l1 minimiser.
double check_fuchs(const Operator& op, const Mask& mask, std::span<const std::size_t> support,
                   std::span<const cplx> signs);

}  // namespace avds
