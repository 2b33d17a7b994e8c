#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "harness.hpp"
#include "io.hpp"

using avds::ComparedDensity;
using avds::cplx;
using avds::CVec;
using avds::ExperimentConfig;
using avds::parse_operator_spec;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.spec = parse_operator_spec("hadamard2d/haar2d/16");
  c.weights.source = avds::WeightSource::Uniform;
  c.weights.sparsity = 4;
  c.fraction = 0.3;
  c.trials = 3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Harness, PsnrDefinition) {
  const std::vector<double> ref{0.0, 0.0, 0.0, 0.0};
  const std::vector<double> off{1.0, -1.0, 1.0, -1.0};
  EXPECT_NEAR(avds::psnr(ref, off, 1.0), 0.0, 1e-12);
  const double d = std::sqrt(1e-3);
  const std::vector<double> close{d, -d, d, -d};
  EXPECT_NEAR(avds::psnr(ref, close, 1.0), 30.0, 1e-9);
  EXPECT_EQ(avds::psnr(off, off), avds::kPsnrInfinity);
  // Default peak is max|ref|: ref peak 2, MSE 0.04.
  const std::vector<double> r2{2.0, 1.0}, x2{1.8, 1.2};
  EXPECT_NEAR(avds::psnr(r2, x2), 10 * std::log10(4.0 / 0.04), 1e-9);
  EXPECT_NEAR(avds::psnr(r2, x2, 5.0), avds::psnr(x2, r2, 5.0), 1e-12);
  EXPECT_THROW(avds::psnr(ref, r2), avds::Error);
}

TEST(Harness, SynthCorpus) {
  std::vector<double> indicator(64, 0.0);
  for (std::size_t i : {3u, 10u, 40u}) indicator[i] = 1.0;
  const auto fixed = avds::synth_corpus(avds::WeightVector::from_values(indicator), 20, 0.2, 1);
  for (const auto& x : fixed)
    for (std::size_t i = 0; i < 64; ++i) {
      EXPECT_EQ(x[i] != 0.0, indicator[i] == 1.0);
      if (x[i] != 0.0) {
        EXPECT_GE(std::abs(x[i]), 0.2);
      }
    }

  const auto truth = avds::level_weights(parse_operator_spec("dft2d/db4-2d/16"), 20, 1.0, 1.5);
  const auto corpus = avds::synth_corpus(truth, 1000, 0.1, 2);
  const auto est = avds::estimate_weights(corpus, 0.05, avds::ThresholdMode::Absolute);
  double worst = 0.0;
  for (std::size_t i = 0; i < 256; ++i) worst = std::max(worst, std::abs(est.values[i] - truth.values[i]));
  EXPECT_LE(worst, 0.08);
}

TEST(Harness, SyntheticWeightProfiles) {
  const auto spec = parse_operator_spec("dft2d/db4-2d/32");
  const auto u = avds::uniform_weights(1024, 16);
  for (double v : u.values) EXPECT_EQ(v, 16.0 / 1024);
  const auto w = avds::level_weights(spec, 40, 1.0, 1.5);
  EXPECT_NEAR(std::accumulate(w.values.begin(), w.values.end(), 0.0), 40.0, 1e-9);
  // Coarse coefficients carry more weight than fine ones.
  EXPECT_GT(w.values[0], w.values[1023]);
  // Lower triangle (row > col) is boosted.
  EXPECT_NEAR(w.values[20 + 32 * 18] / w.values[18 + 32 * 20], 1.5, 1e-12);
  EXPECT_EQ(avds::coefficient_level(spec, 0), 0);
  EXPECT_GT(avds::coefficient_level(spec, 1023), avds::coefficient_level(spec, 0));
}

TEST(Harness, FullSamplingIsExact) {
  auto c = small_config();
  c.fraction = 1.0;
  c.trials = 1;
  c.densities = {ComparedDensity::Adapted, ComparedDensity::Uniform, ComparedDensity::Coherence};
  const auto r = avds::run_experiment(c);
  for (const auto& k : r.trials.front().kinds) EXPECT_EQ(k.psnr, avds::kPsnrInfinity);
  for (const auto& s : r.summaries) {
    EXPECT_EQ(s.mean_psnr, avds::kPsnrInfinity);
    EXPECT_EQ(s.sd_psnr, 0.0);
  }
}

TEST(Harness, ReportsAreReproducible) {
  auto c = small_config();
  const std::string a = avds::report_to_json(avds::run_experiment(c));
  const std::string b = avds::report_to_json(avds::run_experiment(c));
  EXPECT_EQ(a, b);
  c.threads = 3;
  EXPECT_EQ(avds::report_to_json(avds::run_experiment(c)), a);
  c.seed = 6;
  EXPECT_NE(avds::report_to_json(avds::run_experiment(c)), a);
}

TEST(Harness, ReportContents) {
  auto c = small_config();
  const auto r = avds::run_experiment(c);
  EXPECT_EQ(r.budget, static_cast<std::size_t>(std::llround(0.3 * 256)));
  ASSERT_EQ(r.trials.size(), 3u);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.support_size, 4u);
    ASSERT_EQ(t.kinds.size(), 3u);
    for (const auto& k : t.kinds) {
      EXPECT_EQ(k.mask.size(), r.budget);
      EXPECT_NEAR(k.measured_fraction, static_cast<double>(r.budget) / 256, 1e-15);
    }
  }
  for (const auto& s : r.summaries) {
    EXPECT_NEAR(std::accumulate(s.density.begin(), s.density.end(), 0.0), 1.0, 1e-9);
    std::vector<double> v;
    for (const auto& t : r.trials)
      for (const auto& k : t.kinds)
        if (k.kind == s.kind) v.push_back(k.psnr);
    if (std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
      EXPECT_NEAR(s.mean_psnr, std::accumulate(v.begin(), v.end(), 0.0) / v.size(), 1e-9);
    }
  }
}

TEST(Harness, BlockExperimentsCoverTheFraction) {
  auto c = small_config();
  c.spec = parse_operator_spec("dft2d/tensor-haar/16");
  c.partition = "lines-v";
  c.fraction = 0.25;
  c.densities = {ComparedDensity::Adapted, ComparedDensity::Uniform};
  const auto r = avds::run_experiment(c);
  EXPECT_EQ(r.budget, 4u);
  for (const auto& t : r.trials)
    for (const auto& k : t.kinds) EXPECT_NEAR(k.measured_fraction, 0.25, 1e-15);
}

TEST(Harness, ConfigValidation) {
  auto c = small_config();
  c.trials = 0;
  EXPECT_THROW(avds::validate(c), avds::Error);
  c = small_config();
  c.fraction = 1.5;
  EXPECT_THROW(avds::validate(c), avds::Error);
  c = small_config();
  c.densities = {ComparedDensity::Polynomial};
  EXPECT_THROW(avds::run_experiment(c), avds::Error);
}

TEST(Harness, LambdaForIdentityOperator) {
  const auto op = avds::Operator(parse_operator_spec("identity/identity/16"));
  const auto part = avds::BlockPartition::singletons(16);
  std::vector<double> pi(16, 0.0);
  const std::vector<std::size_t> j{1, 4, 5, 9, 12};
  for (std::size_t i : j) pi[i] = 1.0 / j.size();
  std::vector<CVec> columns;
  for (std::size_t i : {4u, 9u}) {
    CVec e(16);
    e[i] = 1.0;
    columns.push_back(op.forward(e));
  }
  EXPECT_NEAR(avds::lambda_support(columns, part, pi, 20), 5.0 / 20, 1e-15);

  // Reordering the blocks leaves the value unchanged.
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t i = 16; i-- > 0;) blocks.push_back({i});
  const auto reversed = avds::BlockPartition::custom(16, blocks);
  const auto rpi = avds::flip<double>(pi);
  EXPECT_NEAR(avds::lambda_support(columns, reversed, rpi, 20), 5.0 / 20, 1e-15);
}

TEST(Harness, LambdaIsInvariantToBlockOrder) {
  const avds::Operator op(parse_operator_spec("dft2d/haar2d/8"));
  const auto squares = avds::BlockPartition::squares(8, 2);
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t k = squares.count(); k-- > 0;) blocks.push_back(squares.block(k));
  const auto reversed = avds::BlockPartition::custom(64, blocks);
  std::vector<double> pi(16);
  for (std::size_t k = 0; k < 16; ++k) pi[k] = (k + 1) / 136.0;
  std::vector<CVec> columns;
  for (std::size_t i : {2u, 17u, 33u}) {
    CVec e(64);
    e[i] = 1.0;
    columns.push_back(op.forward(e));
  }
  EXPECT_NEAR(avds::lambda_support(columns, squares, pi, 10),
              avds::lambda_support(columns, reversed, avds::flip<double>(pi), 10), 1e-14);
}

TEST(Harness, DiagnosticsForFourier) {
  avds::DiagnosticsConfig d;
  d.spec = parse_operator_spec("dft1d/identity/64");
  d.pi.assign(64, 1.0 / 64);
  d.weights = avds::uniform_weights(64, 4);
  d.m_values = {8, 16, 32, 64};
  d.draws = 50;
  const auto r = avds::diagnostics(d);
  ASSERT_EQ(r.points.size(), 4u);
  for (const auto& p : r.points) {
    EXPECT_NEAR(p.mu, 1.0 / p.m, 1e-12);
    EXPECT_GE(p.lambda_mean, 0.0);
    EXPECT_LE(p.lambda_mean, p.lambda_max + 1e-15);
    EXPECT_GE(p.gram_tail, 0.0);
    EXPECT_LE(p.gram_tail, 1.0);
  }
  EXPECT_GT(r.m_threshold_coherence, 0.0);
  EXPECT_GT(r.m_threshold_gram, 0.0);
  EXPECT_EQ(avds::diagnostics(d).points.back().gram_tail, r.points.back().gram_tail);
}

TEST(Harness, PhaseTransitionEndpoints) {
  avds::PhaseTransitionConfig p;
  p.base = small_config();
  p.base.spec = parse_operator_spec("dft1d/haar1d/64");
  p.base.weights.sparsity = 4;
  p.base.densities = {ComparedDensity::Adapted, ComparedDensity::Coherence};
  p.trials = 10;
  p.m_start = 3;
  p.m_step = 61;
  p.m_stop = 64;
  p.stop_at_target = false;
  const auto t = avds::phase_transition(p);
  ASSERT_EQ(t.rows.size(), 2u);
  for (double s : t.rows.front().success) EXPECT_EQ(s, 0.0);
  for (double s : t.rows.back().success) EXPECT_EQ(s, 1.0);
  for (const auto& f : t.first_reaching_target) EXPECT_EQ(f, std::optional<std::size_t>(64));
}
