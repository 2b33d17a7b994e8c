#include "recon.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace avds {
namespace {

double norm2(std::span<const cplx> v) {
  double acc = 0.0;
  for (const cplx& c : v) acc += std::norm(c);
  return std::sqrt(acc);
}

double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const cplx& c : v) m = std::max(m, std::abs(c));
  return m;
}

double huber(std::span<const cplx> x, double mu) {
  double f = 0.0;
  for (const cplx& c : x) {
    const double a = std::abs(c);
    f += a < mu ? a * a / (2.0 * mu) : a - mu / 2.0;
  }
  return f;
}

double l1(std::span<const cplx> x) {
  double f = 0.0;
  for (const cplx& c : x) f += std::abs(c);
  return f;
}

void huber_gradient(std::span<const cplx> x, double mu, CVec& g) {
  g.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / std::max(std::abs(x[i]), mu);
}

}  // namespace

MeasurementOp::MeasurementOp(Operator op, Mask mask, Scaling scaling)
    : op_(std::move(op)), mask_(std::move(mask)), scaling_(scaling) {
  const std::size_t size = op_.size();
  for (std::size_t i = 0; i < mask_.indices.size(); ++i) {
    require(mask_.indices[i] < size, ErrorCode::OutOfRange,
            "mask row " + std::to_string(mask_.indices[i]) + " outside operator with " +
                std::to_string(size) + " rows");
    require(i == 0 || mask_.indices[i] > mask_.indices[i - 1], ErrorCode::InvalidArgument,
            "mask indices must be sorted and unique");
  }
  if (scaling_ == Scaling::Importance) {
    require(mask_.atom_probability.size() == mask_.indices.size() && mask_.draws > 0,
            ErrorCode::InvalidArgument, "importance scaling needs atom probabilities and a draw count");
    const double m = static_cast<double>(mask_.draws);
    row_scale_.resize(mask_.indices.size());
    for (std::size_t i = 0; i < row_scale_.size(); ++i) {
      const double p = mask_.atom_probability[i];
      require(p > 0.0, ErrorCode::InvalidArgument, "drawn atom with zero probability");
      const double mult = mask_.multiplicities.empty() ? 1.0 : static_cast<double>(mask_.multiplicities[i]);
      row_scale_[i] = std::sqrt(mult / (m * p));
    }
  }
}

CVec MeasurementOp::forward(std::span<const cplx> x) const {
  const CVec full = op_.forward(x);
  CVec y(rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = full[mask_.indices[i]];
    if (!row_scale_.empty()) y[i] *= row_scale_[i];
  }
  return y;
}

CVec MeasurementOp::adjoint(std::span<const cplx> y) const {
  require(y.size() == rows(), ErrorCode::DimensionMismatch,
          "measurement vector has length " + std::to_string(y.size()) + ", expected " +
              std::to_string(rows()));
  CVec full(cols(), cplx{});
  for (std::size_t i = 0; i < y.size(); ++i)
    full[mask_.indices[i]] = row_scale_.empty() ? y[i] : y[i] * row_scale_[i];
  return op_.adjoint(full);
}

CVec measure(std::span<const cplx> x, const MeasurementOp& op) {
  require(x.size() == op.cols(), ErrorCode::DimensionMismatch,
          "signal has length " + std::to_string(x.size()) + ", expected " +
              std::to_string(op.cols()));
  return op.forward(x);
}

SolveResult solve_bp(std::span<const cplx> y, const MeasurementOp& op,
                     const SolverParams& params) {
  require(op.scaling() == Scaling::Unscaled, ErrorCode::Unsupported,
          "basis pursuit solver needs orthonormal (unscaled) row selection");
  require(y.size() == op.rows(), ErrorCode::DimensionMismatch,
          "measurement vector has length " + std::to_string(y.size()) + ", expected " +
              std::to_string(op.rows()));
  require(params.continuation_steps >= 1 && params.mu_final_relative > 0.0 &&
              params.tolerance > 0.0 && params.max_inner_iterations >= 1,
          ErrorCode::InvalidArgument, "solver parameters must be positive");

  SolveResult result;
  const std::size_t size = op.cols();
  const double y_norm = norm2(y);
  if (y_norm == 0.0) {
    result.x.assign(size, cplx{});
    return result;
  }

  CVec x = op.adjoint(y);  // least-norm feasible point
  if (op.is_full()) {
    result.x = std::move(x);
    CVec r = op.forward(result.x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    result.relative_residual = norm2(r) / y_norm;
    return result;
  }

  // Component of v in the null space of A: v - A*(A v).
  auto null_part = [&](std::span<const cplx> v) {
    const CVec back = op.adjoint(op.forward(v));
    CVec out(v.begin(), v.end());
    for (std::size_t i = 0; i < size; ++i) out[i] -= back[i];
    return out;
  };
  auto reproject = [&](CVec& v) {
    CVec r = op.forward(v);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const CVec back = op.adjoint(r);
    for (std::size_t i = 0; i < size; ++i) v[i] -= back[i];
  };

  const double scale = max_abs(x);
  const double mu_start = 0.9 * scale;
  const double mu_final = params.mu_final_relative * scale;
  const double ratio =
      std::pow(mu_final / mu_start, 1.0 / static_cast<double>(params.continuation_steps));

  CVec g, xk(size), yk(size), zk(size), acc_null(size);
  double mu = mu_start;
  for (int stage = 0; stage < params.continuation_steps; ++stage) {
    mu = stage + 1 == params.continuation_steps ? mu_final : mu * ratio;
    const double step = mu;  // 1/L with L = 1/mu
    StageRecord rec;
    rec.mu = mu;
    rec.objective_start = huber(x, mu);

    const CVec anchor = x;
    xk = x;
    std::fill(acc_null.begin(), acc_null.end(), cplx{});
    std::deque<double> recent;
    bool stopped = false;
    int k = 0;
    for (; k < params.max_inner_iterations; ++k) {
      huber_gradient(xk, mu, g);
      const CVec gn = null_part(g);
      const double alpha = 0.5 * static_cast<double>(k + 1);
      for (std::size_t i = 0; i < size; ++i) {
        yk[i] = xk[i] - step * gn[i];
        acc_null[i] += alpha * gn[i];
        zk[i] = anchor[i] - step * acc_null[i];
      }
      const double tau = 2.0 / static_cast<double>(k + 3);
      for (std::size_t i = 0; i < size; ++i) xk[i] = tau * zk[i] + (1.0 - tau) * yk[i];

      const double fx = huber(xk, mu);
      if (recent.size() == 10) {
        const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / 10.0;
        if (std::abs(fx - mean) <= params.tolerance * mean) {
          stopped = true;
          ++k;
          break;
        }
        recent.pop_front();
      }
      recent.push_back(fx);
    }
    x = xk;
    reproject(x);
    rec.iterations = k;
    rec.objective_end = huber(x, mu);
    rec.l1_norm = l1(x);
    result.iterations += k;
    result.converged = result.converged && stopped;
    result.stages.push_back(rec);
  }

  CVec r = op.forward(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  result.relative_residual = norm2(r) / y_norm;
  result.x = std::move(x);
  return result;
}

double check_fuchs(const Operator& op, const Mask& mask, std::span<const std::size_t> support,
                   std::span<const cplx> signs) {
  const std::size_t size = op.size();
  const std::size_t s = support.size();
  const std::size_t m = mask.indices.size();
  require(s >= 1, ErrorCode::InvalidArgument, "empty support");
  require(signs.size() == s, ErrorCode::DimensionMismatch, "one sign per support index required");
  require(s <= m, ErrorCode::Singular,
          "support size " + std::to_string(s) + " exceeds the " + std::to_string(m) +
              " measurements; A_I cannot have full column rank");
  for (std::size_t idx : support)
    require(idx < size, ErrorCode::OutOfRange, "support index out of range");
  for (std::size_t idx : mask.indices)
    require(idx < size, ErrorCode::OutOfRange, "mask index out of range");

  const auto mi = static_cast<Eigen::Index>(m);
  const auto si = static_cast<Eigen::Index>(s);
  Eigen::MatrixXcd a_sub(mi, si);
  CVec unit(size, cplx{});
  for (std::size_t c = 0; c < s; ++c) {
    unit[support[c]] = 1.0;
    const CVec col = op.forward(unit);
    unit[support[c]] = 0.0;
    for (std::size_t r = 0; r < m; ++r)
      a_sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[mask.indices[r]];
  }
  const Eigen::MatrixXcd gram = a_sub.adjoint() * a_sub;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  require(hi > 0.0 && lo > 1e-10 * hi, ErrorCode::Singular,
          "Gram matrix A_I* A_I is singular (eigenvalues " + std::to_string(lo) + " .. " +
              std::to_string(hi) + ")");

  Eigen::VectorXcd sigma(si);
  for (std::size_t c = 0; c < s; ++c) sigma(static_cast<Eigen::Index>(c)) = signs[c];
  const Eigen::VectorXcd coeffs = gram.ldlt().solve(sigma);
  const Eigen::VectorXcd v = a_sub * coeffs;

  CVec scattered(size, cplx{});
  for (std::size_t r = 0; r < m; ++r) scattered[mask.indices[r]] = v(static_cast<Eigen::Index>(r));
  const CVec dual = op.adjoint(scattered);

  std::vector<bool> on_support(size, false);
  for (std::size_t idx : support) on_support[idx] = true;
  double value = 0.0;
  for (std::size_t j = 0; j < size; ++j)
    if (!on_support[j]) value = std::max(value, std::abs(dual[j]));
  return value;
}

}  // namespace avds
