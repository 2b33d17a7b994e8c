#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "recon.hpp"
#include "support_model.hpp"

using avds::cplx;
using avds::CVec;
using avds::MeasurementOp;
using avds::Operator;
using avds::parse_operator_spec;

namespace {

avds::Mask uniform_mask(std::size_t k, std::size_t m, std::uint64_t seed) {
  return avds::draw_mask(std::vector<double>(k, 1.0 / k), m, avds::MaskMode::DistinctUntilBudget, seed);
}

oracle::Mat dense(const Operator& op) {
  const std::size_t k = op.size();
  oracle::Mat a(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const CVec r = op.row(i);
    for (std::size_t j = 0; j < k; ++j) a(i, j) = r[j];
  }
  return a;
}

double rel(const CVec& a, const CVec& b) {
  return (oracle::to_eigen(a) - oracle::to_eigen(b)).norm() / oracle::to_eigen(b).norm();
}

cplx inner(const CVec& a, const CVec& b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

TEST(Recon, MeasureIsRowSelection) {
  std::mt19937_64 gen(1);
  const Operator op(parse_operator_spec("dft2d/db4-2d/16"));
  const MeasurementOp full(op, avds::mask_from_indices([] {
    std::vector<std::size_t> all(256);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }(), 256));
  const CVec x = oracle::random_complex(256, gen);
  const CVec y = avds::measure(x, full);
  EXPECT_NEAR(oracle::to_eigen(y).norm(), oracle::to_eigen(x).norm(), 1e-10);
  for (const cplx& v : avds::measure(CVec(256), full)) EXPECT_EQ(v, cplx{});

  const MeasurementOp a(op, uniform_mask(256, 60, 2));
  const CVec u = oracle::random_complex(60, gen);
  const cplx lhs = inner(u, a.forward(x));
  const cplx rhs = inner(a.adjoint(u), x);
  EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::abs(lhs));
  const CVec fwd = op.forward(x);
  const CVec ax = a.forward(x);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(ax[i], fwd[a.mask().indices[i]]);
}

TEST(Recon, SelectedRowsAreOrthonormal) {
  std::mt19937_64 gen(2);
  for (const char* text : {"hadamard2d/haar2d/32", "dft2d/tensor-db4/32"}) {
    const MeasurementOp a(Operator(parse_operator_spec(text)), uniform_mask(1024, 300, 3));
    const CVec u = oracle::random_complex(300, gen);
    EXPECT_LE(rel(a.forward(a.adjoint(u)), u), 1e-10);
  }
}

TEST(Recon, ImportanceScalingMatchesStackedDraws) {
  const Operator op(parse_operator_spec("dft1d/haar1d/16"));
  std::vector<double> pi(16);
  for (std::size_t i = 0; i < 16; ++i) pi[i] = (i + 1) / 136.0;
  const auto mask = avds::draw_mask(pi, 40, avds::MaskMode::IidWithReplacement, 4);
  const MeasurementOp a(op, mask, avds::Scaling::Importance);
  // A*A from the definition: sum over draws of a_j* a_j / (m pi_j).
  const oracle::Mat a0 = dense(op);
  oracle::Mat gram = oracle::Mat::Zero(16, 16);
  for (std::size_t j = 0; j < mask.count(); ++j) {
    const auto r = static_cast<Eigen::Index>(mask.indices[j]);
    gram += static_cast<double>(mask.multiplicities[j]) / (40.0 * pi[mask.indices[j]]) *
            a0.row(r).adjoint() * a0.row(r);
  }
  oracle::Mat fast(16, 16);
  CVec e(16);
  for (std::size_t c = 0; c < 16; ++c) {
    std::fill(e.begin(), e.end(), cplx{});
    e[c] = 1.0;
    const CVec col = a.adjoint(a.forward(e));
    for (std::size_t r = 0; r < 16; ++r) fast(r, c) = col[r];
  }
  EXPECT_LE(oracle::max_abs(fast - gram), 1e-12);

  const CVec y = a.forward(e);
  try {
    avds::solve_bp(y, a);
    FAIL();
  } catch (const avds::Error& err) {
    EXPECT_EQ(err.code(), avds::ErrorCode::Unsupported);
  }
}

TEST(Recon, FullSamplingInverts) {
  std::mt19937_64 gen(5);
  const Operator op(parse_operator_spec("dft2d/db4-2d/16"));
  std::vector<std::size_t> all(256);
  std::iota(all.begin(), all.end(), 0);
  const MeasurementOp a(op, avds::mask_from_indices(all, 256));
  const CVec x = oracle::random_complex(256, gen);
  const auto r = avds::solve_bp(avds::measure(x, a), a);
  EXPECT_LE(rel(r.x, x), 1e-8);
}

TEST(Recon, ZeroMeasurementsGiveZero) {
  const MeasurementOp a(Operator(parse_operator_spec("dft1d/identity/64")), uniform_mask(64, 20, 1));
  const auto r = avds::solve_bp(CVec(20), a);
  for (const cplx& v : r.x) EXPECT_EQ(v, cplx{});
  EXPECT_TRUE(r.converged);
}

TEST(Recon, FuchsCertificateMatchesDenseOracle) {
  std::mt19937_64 gen(6);
  const Operator op(parse_operator_spec("dft1d/identity/64"));
  const oracle::Mat a0 = dense(op);
  for (int t = 0; t < 10; ++t) {
    const auto mask = uniform_mask(64, 32, 100 + t);
    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<std::size_t> support(perm.begin(), perm.begin() + 3);
    std::sort(support.begin(), support.end());
    const std::vector<double> signs{1.0, -1.0, 1.0};
    const CVec csigns(signs.begin(), signs.end());
    EXPECT_NEAR(avds::check_fuchs(op, mask, support, csigns),
                oracle::fuchs(a0, mask.indices, support, signs), 1e-10);
  }
}

TEST(Recon, FuchsEdgeCases) {
  const Operator op(parse_operator_spec("dft1d/identity/64"));
  std::vector<std::size_t> all(64);
  std::iota(all.begin(), all.end(), 0);
  const CVec signs{1.0, -1.0};
  EXPECT_NEAR(avds::check_fuchs(op, avds::mask_from_indices(all, 64), std::vector<std::size_t>{3, 40}, signs), 0.0, 1e-12);

  // Rows {0, 32} cannot separate columns 0 and 2: both see (1, 1)/8.
  const auto mask = avds::mask_from_indices({0, 32}, 64);
  bool flagged = false;
  try {
    flagged = avds::check_fuchs(op, mask, std::vector<std::size_t>{0, 2}, signs) >= 1.0;
  } catch (const avds::Error& e) {
    flagged = e.code() == avds::ErrorCode::Singular;
  }
  EXPECT_TRUE(flagged);
}

TEST(Recon, CertifiedInstancesAreRecovered) {
  const Operator op(parse_operator_spec("dft1d/identity/64"));
  int certified = 0;
  for (std::uint64_t seed = 0; certified < 20 && seed < 200; ++seed) {
    avds::Rng rng(seed);
    const auto mask = uniform_mask(64, 32, avds::derive_seed(seed, 1));
    const std::vector<double> w(64, 2.0 / 64);
    const avds::SupportDistribution dist(avds::WeightVector::from_values(w), 2);
    const auto sig = dist.draw_signal(rng);
    const CVec signs(sig.signs.begin(), sig.signs.end());
    if (avds::check_fuchs(op, mask, sig.support, signs) >= 0.99) continue;
    ++certified;
    const CVec x(sig.values.begin(), sig.values.end());
    const MeasurementOp a(op, mask);
    const auto r = avds::solve_bp(avds::measure(x, a), a);
    EXPECT_LE(rel(r.x, x), 1e-4) << "seed " << seed;
    EXPECT_LE(r.relative_residual, 1e-6);
  }
  EXPECT_EQ(certified, 20);
}

TEST(Recon, StagesDecreaseTheSmoothedObjective) {
  const Operator op(parse_operator_spec("hadamard2d/haar2d/16"));
  const std::vector<double> w(256, 6.0 / 256);
  const avds::SupportDistribution dist(avds::WeightVector::from_values(w));
  const auto sig = dist.draw_signal(3);
  const CVec x(sig.values.begin(), sig.values.end());
  const MeasurementOp a(op, uniform_mask(256, 100, 4));
  const auto r = avds::solve_bp(avds::measure(x, a), a);
  ASSERT_EQ(r.stages.size(), 5u);
  for (std::size_t s = 0; s < r.stages.size(); ++s) {
    EXPECT_LE(r.stages[s].objective_end, r.stages[s].objective_start * (1 + 1e-12));
    if (s > 0) {
      EXPECT_LT(r.stages[s].mu, r.stages[s - 1].mu);
    }
  }
}

TEST(Recon, ScaleEquivariance) {
  const Operator op(parse_operator_spec("dft1d/haar1d/64"));
  const std::vector<double> w(64, 4.0 / 64);
  const avds::SupportDistribution dist(avds::WeightVector::from_values(w));
  const auto sig = dist.draw_signal(8);
  const CVec x(sig.values.begin(), sig.values.end());
  const MeasurementOp a(op, uniform_mask(64, 30, 9));
  const CVec y = avds::measure(x, a);
  CVec y3 = y;
  for (cplx& v : y3) v *= 3.0;
  const auto r1 = avds::solve_bp(y, a);
  const auto r3 = avds::solve_bp(y3, a);
  CVec scaled = r1.x;
  for (cplx& v : scaled) v *= 3.0;
  EXPECT_LE(rel(r3.x, scaled), 1e-5);
}
