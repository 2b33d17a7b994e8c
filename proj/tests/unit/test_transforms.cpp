#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "partition.hpp"
#include "transforms.hpp"

using avds::cplx;
using avds::CVec;
using avds::Operator;
using avds::parse_operator_spec;

namespace {

oracle::Mat dense_operator(const Operator& op) {
  const std::size_t k = op.size();
  oracle::Mat a(k, k);
  CVec e(k, cplx{});
  for (std::size_t j = 0; j < k; ++j) {
    e[j] = 1.0;
    const CVec col = op.forward(e);
    for (std::size_t i = 0; i < k; ++i) a(i, j) = col[i];
    e[j] = 0.0;
  }
  return a;
}

// Dense A0 = Phi Psi* from the oracle constructions.
oracle::Mat reference_operator(const std::string& text) {
  const auto spec = parse_operator_spec(text);
  const std::size_t n = spec.side;
  const int depth = spec.depth();
  oracle::Mat phi;
  switch (spec.measurement) {
    case avds::Measurement::Identity: phi = oracle::Mat::Identity(spec.size(), spec.size()); break;
    case avds::Measurement::DFT1D: phi = oracle::dft(n); break;
    case avds::Measurement::DFT2D: phi = oracle::kron(oracle::dft(n), oracle::dft(n)); break;
    case avds::Measurement::Hadamard2D: {
      const oracle::RMat h = oracle::hadamard(n);
      phi = oracle::kron(h, h).cast<cplx>();
      break;
    }
  }
  oracle::RMat psi;
  const auto db4 = oracle::db4_filter();
  const std::vector<double> haar{M_SQRT1_2, M_SQRT1_2};
  switch (spec.sparsity) {
    case avds::SparsityBasis::Identity: psi = oracle::RMat::Identity(spec.size(), spec.size()); break;
    case avds::SparsityBasis::Haar1D: psi = oracle::haar(n, depth); break;
    case avds::SparsityBasis::DB4_1D: psi = oracle::wavelet_1d(n, db4, depth); break;
    case avds::SparsityBasis::Haar2D: psi = oracle::wavelet_square(n, haar, depth); break;
    case avds::SparsityBasis::DB4_2D: psi = oracle::wavelet_square(n, db4, depth); break;
    case avds::SparsityBasis::TensorWavelet: {
      const oracle::RMat w = spec.tensor_wavelet == avds::Wavelet::Haar
                                 ? oracle::haar(n, depth)
                                 : oracle::wavelet_1d(n, db4, depth);
      psi = oracle::kron(w, w);
      break;
    }
  }
  return phi * psi.transpose().cast<cplx>();
}

const char* kSpecs[] = {"dft1d/identity/16",   "dft1d/haar1d/16/2",    "dft1d/db4-1d/64",
                        "dft1d/db4-1d/16/2",   "identity/identity/16", "hadamard2d/haar2d/8",
                        "hadamard2d/haar2d/4", "dft2d/db4-2d/8",       "dft2d/haar2d/8/2",
                        "dft2d/tensor-haar/8", "dft2d/tensor-db4/8",   "hadamard2d/tensor-db4/8/1",
                        "dft2d/identity/8",    "hadamard2d/identity/4"};

}  // namespace

TEST(Transforms, MatchesDenseConstruction) {
  for (const char* text : kSpecs) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    const oracle::Mat fast = dense_operator(op);
    const oracle::Mat ref = reference_operator(text);
    EXPECT_LE(oracle::max_abs(fast - ref), 1e-12);
  }
}

TEST(Transforms, DenseOperatorIsUnitary) {
  for (const char* text : kSpecs) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    const oracle::Mat a = dense_operator(op);
    const auto k = a.rows();
    EXPECT_LE(oracle::max_abs(a * a.adjoint() - oracle::Mat::Identity(k, k)), 1e-10);
  }
}

TEST(Transforms, AdjointInvertsForwardAndPreservesNorm) {
  std::mt19937_64 gen(7);
  for (const char* text : {"dft2d/db4-2d/64", "hadamard2d/haar2d/64", "dft2d/tensor-db4/32",
                           "dft1d/db4-1d/1024", "hadamard2d/tensor-haar/32/5"}) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    const CVec x = oracle::random_complex(op.size(), gen);
    const CVec y = op.forward(x);
    const CVec back = op.adjoint(y);
    const auto ex = oracle::to_eigen(x);
    EXPECT_LE((oracle::to_eigen(back) - ex).norm() / ex.norm(), 1e-10);
    EXPECT_NEAR(oracle::to_eigen(y).norm(), ex.norm(), 1e-10 * ex.norm());
  }
}

TEST(Transforms, RowsAgreeWithForward) {
  std::mt19937_64 gen(11);
  for (const char* text : {"dft2d/db4-2d/32", "hadamard2d/haar2d/32", "dft2d/tensor-haar/16",
                           "dft1d/haar1d/256"}) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    const CVec x = oracle::random_complex(op.size(), gen);
    const CVec y = op.forward(x);
    std::uniform_int_distribution<std::size_t> pick(0, op.size() - 1);
    for (int t = 0; t < 16; ++t) {
      const std::size_t k = pick(gen);
      const CVec a = op.row(k);
      cplx dot{};
      for (std::size_t l = 0; l < a.size(); ++l) dot += a[l] * x[l];
      EXPECT_LE(std::abs(dot - y[k]), 1e-10 * oracle::to_eigen(x).norm());
      EXPECT_NEAR(oracle::to_eigen(a).norm(), 1.0, 1e-12);
    }
  }
}

TEST(Transforms, DeltaUnderDftHasFlatMagnitude) {
  const Operator op(parse_operator_spec("dft1d/identity/4"));
  CVec e(4, cplx{});
  e[1] = 1.0;
  for (const cplx& v : op.forward(e)) EXPECT_NEAR(std::abs(v), 0.5, 1e-15);
}

TEST(Transforms, ConstantSignalHasOneHaarCoefficient) {
  const Operator op(parse_operator_spec("dft1d/haar1d/4/1"));
  const CVec c = op.analyze(CVec(4, cplx{0.5, 0.0}));
  // depth 1 on length 4 leaves two approximation coefficients, each 1/sqrt(2).
  EXPECT_NEAR(c[0].real(), M_SQRT1_2, 1e-15);
  EXPECT_NEAR(c[1].real(), M_SQRT1_2, 1e-15);
  EXPECT_NEAR(std::abs(c[2]) + std::abs(c[3]), 0.0, 1e-15);

  const Operator full(parse_operator_spec("dft1d/haar1d/4/2"));
  const CVec d = full.analyze(CVec(4, cplx{0.5, 0.0}));
  EXPECT_NEAR(d[0].real(), 1.0, 1e-15);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(std::abs(d[i]), 0.0, 1e-15);
}

TEST(Transforms, FourierRowsHaveFlatEnergy) {
  const Operator op(parse_operator_spec("dft1d/identity/64"));
  for (std::size_t k = 0; k < 64; k += 7)
    for (const cplx& v : op.row(k)) EXPECT_NEAR(std::norm(v), 1.0 / 64, 1e-15);
}

TEST(Transforms, IdentityOperatorRowsAreCoordinateVectors) {
  const Operator op(parse_operator_spec("identity/identity/8"));
  for (std::size_t k = 0; k < 8; ++k) {
    const CVec a = op.row(k);
    for (std::size_t l = 0; l < 8; ++l) EXPECT_EQ(a[l], cplx(k == l ? 1.0 : 0.0));
  }
}

TEST(Transforms, KroneckerFactorRows) {
  for (const char* text : {"dft2d/tensor-db4/16", "hadamard2d/tensor-haar/8", "dft2d/identity/8"}) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    ASSERT_TRUE(op.spec().is_kronecker());
    const std::size_t n = op.spec().side;
    for (std::size_t k1 : {std::size_t{0}, std::size_t{3}, n - 1})
      for (std::size_t k2 : {std::size_t{1}, n / 2}) {
        const CVec a = op.row(k1 * n + k2);
        const CVec f1 = op.factor_row(k1), f2 = op.factor_row(k2);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(a[i * n + j] - f1[i] * f2[j]));
        EXPECT_LE(err, 1e-12);
      }
  }
  EXPECT_FALSE(parse_operator_spec("dft2d/db4-2d/16").is_kronecker());
}

TEST(Transforms, DefaultDepth) {
  EXPECT_EQ(parse_operator_spec("dft2d/db4-2d/64").depth(), 3);
  EXPECT_EQ(parse_operator_spec("dft2d/db4-2d/16").depth(), 1);
  EXPECT_EQ(parse_operator_spec("dft2d/db4-2d/256").depth(), 5);
  EXPECT_EQ(parse_operator_spec("dft2d/db4-2d/256/2").depth(), 2);
}

TEST(Transforms, SpecRoundTrip) {
  for (const char* text : kSpecs) {
    const auto spec = parse_operator_spec(text);
    EXPECT_EQ(parse_operator_spec(avds::to_string(spec)), spec) << text;
  }
}

TEST(Transforms, RejectsInvalidSpecs) {
  for (const char* text : {"dft2d/db4-2d/48", "dft1d/haar2d/16", "dft2d/haar1d/16", "dft1d/x/16",
                           "dft1d/haar1d", "dft1d/haar1d/16/9", "dft1d/haar1d/16/0", ""}) {
    EXPECT_THROW(parse_operator_spec(text), avds::Error) << text;
  }
}

TEST(Transforms, DimensionMismatchIsReported) {
  const Operator op(parse_operator_spec("dft1d/identity/16"));
  try {
    op.forward(CVec(15));
    FAIL();
  } catch (const avds::Error& e) {
    EXPECT_EQ(e.code(), avds::ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(op.row(16), avds::Error);
}

TEST(Transforms, BlockRowsFollowPartition) {
  const Operator op(parse_operator_spec("dft2d/identity/4"));
  const auto lines = avds::BlockPartition::horizontal_lines(4);
  EXPECT_EQ(lines.block(1), (std::vector<std::size_t>{1, 5, 9, 13}));
  const auto rows = avds::block_rows(op, lines, 1);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t q = 0; q < 4; ++q) EXPECT_EQ(rows[q], op.row(1 + 4 * q));

  const auto singles = avds::BlockPartition::singletons(16);
  EXPECT_EQ(avds::block_rows(op, singles, 7).front(), op.row(7));
}
