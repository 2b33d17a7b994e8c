#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "density.hpp"
#include "oracles.hpp"

using avds::BlockMethod;
using avds::BlockPartition;
using avds::CVec;
using avds::Operator;
using avds::parse_operator_spec;
using avds::WeightVector;

namespace {

WeightVector random_weights(std::size_t k, double s, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(k);
  for (double& v : raw) v = u(gen) * u(gen);
  return avds::normalize_weights(raw, s);
}

double sum(const avds::RVec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// max eigenvalue of B D B* from a dense eigensolve.
double dense_gram_norm(const std::vector<CVec>& rows, const avds::RVec& w) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(w.size());
  oracle::Mat b(r, k);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < k; ++j) b(i, j) = rows[i][j];
  Eigen::VectorXcd d(k);
  for (Eigen::Index j = 0; j < k; ++j) d(j) = w[j];
  const oracle::Mat g = b * d.asDiagonal() * b.adjoint();
  return Eigen::SelfAdjointEigenSolver<oracle::Mat>(g).eigenvalues().maxCoeff();
}

}  // namespace

TEST(Density, FourierIsUniformForAnyWeights) {
  std::mt19937_64 gen(1);
  for (const char* text : {"dft1d/identity/256", "dft2d/identity/16"}) {
    const Operator op(parse_operator_spec(text));
    for (int t = 0; t < 5; ++t) {
      const auto d = avds::adapted_isolated(op, random_weights(op.size(), 10, gen));
      for (double p : d.pi) EXPECT_NEAR(p, 1.0 / op.size(), 1e-12);
    }
  }
}

TEST(Density, IdentityOperatorSamplesTheWeightedRows) {
  const Operator op(parse_operator_spec("identity/identity/4"));
  const auto d = avds::adapted_isolated(op, WeightVector::from_values({1, 1, 0, 0}));
  EXPECT_EQ(d.pi, (avds::RVec{0.5, 0.5, 0.0, 0.0}));
}

TEST(Density, TwoByTwoHadamard) {
  const Operator op(parse_operator_spec("hadamard2d/identity/2"));
  // Rows of H2 (x) H2 all have entries of modulus 1/2.
  const auto d = avds::adapted_isolated(op, WeightVector::from_values({0.6, 0.4, 0.0, 0.0}));
  for (double p : d.pi) EXPECT_NEAR(p, 0.25, 1e-15);
  EXPECT_NEAR(d.normalizer, 1.0, 1e-15);
}

TEST(Density, NumeratorsMatchDefinition) {
  std::mt19937_64 gen(2);
  const Operator op(parse_operator_spec("hadamard2d/haar2d/8"));
  const auto w = random_weights(64, 6, gen);
  const auto d = avds::adapted_isolated(op, w);
  double total = 0.0;
  for (std::size_t k = 0; k < 64; ++k) {
    const CVec a = op.row(k);
    double quad = 0.0, peak = 0.0;
    for (std::size_t l = 0; l < 64; ++l) {
      quad += std::norm(a[l]) * w.values[l];
      peak = std::max(peak, std::norm(a[l]));
    }
    EXPECT_NEAR(d.pi[k] * d.normalizer, std::max(quad, peak), 1e-14);
    total += peak;
  }
  EXPECT_LE(d.normalizer, 6.0 + total + 1e-12);
  EXPECT_NEAR(sum(d.pi), 1.0, 1e-12);
}

TEST(Density, TraceIdentity) {
  std::mt19937_64 gen(3);
  for (const char* text : {"hadamard2d/haar2d/16", "dft2d/db4-2d/16", "dft1d/db4-1d/256"}) {
    SCOPED_TRACE(text);
    const Operator op(parse_operator_spec(text));
    const auto w = random_weights(op.size(), 12, gen);
    double trace = 0.0;
    for (std::size_t k = 0; k < op.size(); ++k) {
      const CVec a = op.row(k);
      const std::vector<CVec> block{a};
      trace += avds::block_gram_opnorm(block, w.values);
    }
    EXPECT_NEAR(trace, 12.0, 1e-8);
  }
}

TEST(Density, BlockNormsOnSmallCases) {
  const Operator h(parse_operator_spec("hadamard2d/identity/2"));
  const auto vertical = BlockPartition::vertical_lines(2);
  // W = [[0.2, 0.4], [0.1, 0.3]] stored column-major.
  const avds::RVec w{0.2, 0.1, 0.4, 0.3};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto rows = avds::block_rows(h, vertical, k);
    EXPECT_NEAR(avds::block_gram_opnorm(rows, w), 0.3, 1e-14);
    EXPECT_NEAR(avds::block_gram_opnorm(rows, w), dense_gram_norm(rows, w), 1e-14);
  }

  const Operator f(parse_operator_spec("dft1d/identity/32"));
  EXPECT_NEAR(avds::block_inf1_norm(std::vector<CVec>{f.row(5)}), 1.0 / 32, 1e-15);

  const Operator id(parse_operator_spec("identity/identity/8"));
  const std::vector<CVec> coords{id.row(1), id.row(4), id.row(6)};
  EXPECT_EQ(avds::block_inf1_norm(coords), 1.0);

  const Operator t(parse_operator_spec("dft2d/tensor-db4/8"));
  const auto lines = BlockPartition::vertical_lines(8);
  for (std::size_t k = 0; k < 8; ++k) {
    double peak = 0.0;
    for (const auto& v : t.factor_row(k)) peak = std::max(peak, std::norm(v));
    EXPECT_NEAR(avds::block_inf1_norm(avds::block_rows(t, lines, k)), peak, 1e-14);
  }
}

TEST(Density, ClosedFormLinesMatchGeneric) {
  std::mt19937_64 gen(4);
  for (const char* text : {"dft2d/tensor-db4/16", "hadamard2d/tensor-haar/16", "dft2d/identity/16"}) {
    const Operator op(parse_operator_spec(text));
    for (auto part : {BlockPartition::vertical_lines(16), BlockPartition::horizontal_lines(16)}) {
      for (int t = 0; t < 3; ++t) {
        const auto w = random_weights(op.size(), 20, gen);
        const auto closed = avds::adapted_blocks(op, part, w, BlockMethod::ClosedFormLines);
        const auto generic = avds::adapted_blocks(op, part, w, BlockMethod::Generic);
        EXPECT_NEAR(closed.normalizer, generic.normalizer, 1e-8);
        for (std::size_t k = 0; k < 16; ++k) {
          EXPECT_NEAR(closed.pi[k], generic.pi[k], 1e-8);
          const auto rows = avds::block_rows(op, part, k);
          EXPECT_NEAR(avds::block_gram_opnorm(rows, w.values), dense_gram_norm(rows, w.values), 1e-10);
        }
      }
    }
  }
}

TEST(Density, UniformWeightsOnVerticalLines) {
  const Operator op(parse_operator_spec("dft2d/identity/16"));
  // B_k D B_k* = (S/K) I for unitary phi, so the numerator is
  // max(S/K, ||phi_k||_inf^2) = max(S/K, 1/16).
  for (double s : {8.0, 128.0}) {
    const auto w = avds::normalize_weights(std::vector<double>(256, 1.0), s);
    for (auto method : {BlockMethod::ClosedFormLines, BlockMethod::Generic}) {
      const auto d = avds::adapted_blocks(op, BlockPartition::vertical_lines(16), w, method);
      EXPECT_NEAR(d.normalizer, 16 * std::max(s / 256, 1.0 / 16), 1e-12);
      for (double p : d.pi) EXPECT_NEAR(p, 1.0 / 16, 1e-14);
    }
  }
}

TEST(Density, ClosedFormNeedsLinesAndKronecker) {
  const Operator mra(parse_operator_spec("dft2d/db4-2d/16"));
  const Operator sep(parse_operator_spec("dft2d/tensor-db4/16"));
  const auto w = avds::normalize_weights(std::vector<double>(256, 1.0), 8.0);
  EXPECT_THROW(avds::adapted_blocks(mra, BlockPartition::vertical_lines(16), w,
                                    BlockMethod::ClosedFormLines),
               avds::Error);
  EXPECT_THROW(avds::adapted_blocks(sep, BlockPartition::squares(16, 4), w,
                                    BlockMethod::ClosedFormLines),
               avds::Error);
}

TEST(Density, SquaresAreNormalized) {
  std::mt19937_64 gen(5);
  const Operator op(parse_operator_spec("dft2d/db4-2d/32"));
  const auto d = avds::adapted_blocks(op, BlockPartition::squares(32, 16), random_weights(1024, 30, gen),
                                      BlockMethod::Generic);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_NEAR(sum(d.pi), 1.0, 1e-9);
  for (double p : d.pi) EXPECT_GE(p, 0.0);
  EXPECT_GT(d.normalizer, 0.0);
}

TEST(Density, Baselines) {
  const Operator f(parse_operator_spec("dft1d/identity/64"));
  const auto coherence =
      avds::baseline_density(avds::BaselineKind::Coherence, f, BlockPartition::singletons(64));
  for (double p : coherence.pi) EXPECT_NEAR(p, 1.0 / 64, 1e-15);

  const Operator g(parse_operator_spec("dft2d/identity/16"));
  const auto uniform =
      avds::baseline_density(avds::BaselineKind::Uniform, g, BlockPartition::vertical_lines(16));
  for (double p : uniform.pi) EXPECT_EQ(p, 1.0 / 16);

  const Operator small(parse_operator_spec("dft2d/identity/4"));
  const auto poly = avds::baseline_density(avds::BaselineKind::Polynomial, small,
                                           BlockPartition::singletons(16), 2.5);
  // (k1, k2) = (1, 1) at index 1 + 4, (2, 2) at 2 + 8.
  EXPECT_NEAR(poly.pi[5] / poly.pi[10], 32.0, 1e-12);
  EXPECT_NEAR(poly.pi[0], poly.pi[5], 1e-15);
  // Signed frequency: storage index 3 is frequency -1.
  EXPECT_NEAR(poly.pi[3], poly.pi[1], 1e-15);
  EXPECT_NEAR(sum(poly.pi), 1.0, 1e-12);

  const Operator h(parse_operator_spec("hadamard2d/haar2d/8"));
  EXPECT_THROW(avds::baseline_density(avds::BaselineKind::Polynomial, h,
                                      BlockPartition::singletons(64)),
               avds::Error);
}

TEST(Density, FlipEquivariance) {
  std::mt19937_64 gen(6);
  const Operator op(parse_operator_spec("dft1d/identity/128"));
  const auto w = random_weights(128, 9, gen);
  const auto flipped = WeightVector::from_values(avds::flip<double>(w.values));
  const auto a = avds::adapted_isolated(op, w);
  const auto b = avds::adapted_isolated(op, flipped);
  const auto ra = avds::flip<double>(a.pi);
  for (std::size_t k = 0; k < 128; ++k) EXPECT_NEAR(b.pi[k], ra[k], 1e-9);
}

TEST(Density, MonotoneInWeights) {
  std::mt19937_64 gen(7);
  const Operator op(parse_operator_spec("hadamard2d/haar2d/8"));
  auto w = random_weights(64, 5, gen);
  const auto before = avds::adapted_isolated(op, w);
  w.values[17] = std::min(1.0, w.values[17] + 0.3);
  const auto after = avds::adapted_isolated(op, WeightVector::from_values(w.values));
  for (std::size_t k = 0; k < 64; ++k)
    EXPECT_GE(after.pi[k] * after.normalizer, before.pi[k] * before.normalizer - 1e-15);
}

TEST(Density, LevelsSummary) {
  std::mt19937_64 gen(8);
  const std::vector<double> uniform(16, 0.25);
  const auto s = avds::levels_summary(uniform, avds::LevelsLayout::Dyadic1D);
  ASSERT_EQ(s.level_mass.size(), 4u);
  EXPECT_NEAR(s.level_mass[0], 0.5, 1e-15);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(s.level_mass[j], 0.25 * (1 << j), 1e-15);

  std::vector<double> fine(16, 0.0);
  for (std::size_t i = 8; i < 16; ++i) fine[i] = 0.5;
  const auto f = avds::levels_summary(fine, avds::LevelsLayout::Dyadic1D);
  EXPECT_EQ(f.level_mass.back(), 4.0);
  EXPECT_EQ(f.level_mass[0] + f.level_mass[1] + f.level_mass[2], 0.0);

  const auto w = random_weights(16, 5, gen);
  const auto r = avds::levels_summary(w.values, avds::LevelsLayout::Dyadic1D);
  EXPECT_NEAR(sum(r.level_mass), 5.0, 1e-12);

  const auto w2 = random_weights(64, 7, gen);
  const auto r2 = avds::levels_summary(w2.values, avds::LevelsLayout::RowwiseDyadic2D);
  for (std::size_t l = 0; l < r2.row_max.size(); ++l) EXPECT_LE(r2.row_max[l], r2.level_mass[l] + 1e-15);

  EXPECT_THROW(avds::levels_summary(std::vector<double>(12, 0.1), avds::LevelsLayout::Dyadic1D),
               avds::Error);
}

TEST(Density, InvalidWeightsAreRejected) {
  const Operator op(parse_operator_spec("dft1d/identity/8"));
  WeightVector bad;
  bad.values = {0.5, 1.5, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(avds::adapted_isolated(op, bad), avds::Error);
  bad.values = {0.5, 0.5};
  EXPECT_THROW(avds::adapted_isolated(op, bad), avds::Error);
}
