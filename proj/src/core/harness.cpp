#include "harness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rng.hpp"

namespace avds {
namespace {

constexpr std::uint64_t kCorpusStream = 0xC0de5eedULL;
constexpr double kExactRelativeError = 1e-12;

template <typename T>
double mse_and_peak(std::span<const T> ref, std::span<const T> rec, double& peak) {
  require(ref.size() == rec.size(), ErrorCode::DimensionMismatch,
          "psnr: reference has " + std::to_string(ref.size()) + " samples, reconstruction " +
              std::to_string(rec.size()));
  require(!ref.empty(), ErrorCode::InvalidArgument, "psnr: empty images");
  double sum = 0.0, ref_max = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    sum += std::norm(ref[i] - rec[i]);
    ref_max = std::max(ref_max, static_cast<double>(std::abs(ref[i])));
  }
  if (peak <= 0.0) peak = ref_max;
  require(peak > 0.0, ErrorCode::InvalidArgument, "psnr: peak must be positive");
  return sum / static_cast<double>(ref.size());
}

template <typename T>
double psnr_impl(std::span<const T> ref, std::span<const T> rec, double peak) {
  const double mse = mse_and_peak(ref, rec, peak);
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(peak * peak / mse);
}

int axis_level(std::size_t i, std::size_t coarse) {
  return i < coarse ? 0 : std::bit_width(i / coarse);
}

std::size_t block_budget(const ExperimentConfig& cfg, std::size_t blocks) {
  if (cfg.m > 0) return cfg.m;
  const auto b = static_cast<std::size_t>(std::llround(cfg.fraction * static_cast<double>(blocks)));
  return std::max<std::size_t>(1, b);
}

CVec to_complex(std::span<const double> v) { return CVec(v.begin(), v.end()); }

// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the
// first failure.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

struct TrialSignal {
  CVec coefficients;
  std::size_t support_size = 0;
};

// Synthetic signals are drawn from the unflipped truth and flipped after,
// which has the law of the flipped model.
TrialSignal make_signal(const ExperimentConfig& cfg, const Operator& op,
                        const SupportDistribution* model, bool flip_signal,
                        std::uint64_t seed) {
  TrialSignal out;
  if (cfg.test_image) {
    const RVec& img = *cfg.test_image;
    out.coefficients = op.analyze(to_complex(img));
    out.support_size = op.size();
    return out;
  }
  Rng rng(seed);
  SparseSignal sig = model->draw_signal(rng);
  for (std::size_t idx : sig.support)
    sig.values[idx] *= 1.0 + cfg.magnitude_spread * rng.exponential();
  if (flip_signal) sig.values = flip<double>(sig.values);
  out.coefficients = to_complex(sig.values);
  out.support_size = sig.support.size();
  return out;
}

WeightVector unflipped_truth(const ExperimentConfig& cfg, const ResolvedWeights& w) {
  return cfg.flip ? WeightVector::from_values(flip<double>(w.truth.values)) : w.truth;
}

double summary_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double psnr(std::span<const cplx> ref, std::span<const cplx> rec, double peak) {
  return psnr_impl(ref, rec, peak);
}

double psnr(std::span<const double> ref, std::span<const double> rec, double peak) {
  return psnr_impl(ref, rec, peak);
}

double relative_error(std::span<const cplx> ref, std::span<const cplx> rec) {
  require(ref.size() == rec.size(), ErrorCode::DimensionMismatch, "relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(ref[i] - rec[i]);
    den += std::norm(ref[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : kPsnrInfinity;
  return std::sqrt(num / den);
}

std::vector<RVec> synth_corpus(const WeightVector& truth, std::size_t count, double floor,
                               std::uint64_t seed) {
  require(floor > 0.0, ErrorCode::InvalidArgument, "magnitude floor must be positive");
  const SupportDistribution model(truth);
  Rng rng(seed);
  std::vector<RVec> corpus;
  corpus.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    SparseSignal sig = model.draw_signal(rng);
    for (std::size_t idx : sig.support) sig.values[idx] *= floor * (1.0 + rng.exponential());
    corpus.push_back(std::move(sig.values));
  }
  return corpus;
}

int coefficient_level(const OperatorSpec& spec, std::size_t index) {
  require(index < spec.size(), ErrorCode::OutOfRange, "coefficient index out of range");
  const std::size_t n = spec.side;
  std::size_t coarse = 2;
  if (spec.sparsity != SparsityBasis::Identity) coarse = std::max<std::size_t>(1, n >> spec.depth());
  if (!spec.is_2d()) return axis_level(index, coarse);
  return std::max(axis_level(index % n, coarse), axis_level(index / n, coarse));
}

WeightVector uniform_weights(std::size_t size, double sparsity) {
  require(size > 0 && sparsity > 0.0 && sparsity <= static_cast<double>(size),
          ErrorCode::InvalidArgument, "uniform weights need 0 < S <= K");
  return WeightVector::from_values(RVec(size, sparsity / static_cast<double>(size)));
}

WeightVector level_weights(const OperatorSpec& spec, double sparsity, double decay,
                           double asymmetry) {
  require(asymmetry > 0.0, ErrorCode::InvalidArgument, "asymmetry must be positive");
  const std::size_t size = spec.size();
  RVec raw(size);
  for (std::size_t i = 0; i < size; ++i) {
    raw[i] = std::exp2(-decay * coefficient_level(spec, i));
    if (spec.is_2d() && i % spec.side > i / spec.side) raw[i] *= asymmetry;
  }
  return normalize_weights(raw, sparsity);
}

std::string to_string(ComparedDensity kind) {
  switch (kind) {
    case ComparedDensity::Adapted: return "adapted";
    case ComparedDensity::Uniform: return "uniform";
    case ComparedDensity::Coherence: return "coherence";
    case ComparedDensity::Polynomial: return "polynomial";
  }
  return "unknown";
}

ComparedDensity parse_compared_density(const std::string& text) {
  if (text == "adapted") return ComparedDensity::Adapted;
  if (text == "uniform") return ComparedDensity::Uniform;
  if (text == "coherence") return ComparedDensity::Coherence;
  if (text == "polynomial") return ComparedDensity::Polynomial;
  fail(ErrorCode::Parse, "unknown density kind '" + text +
                             "' (expected adapted, uniform, coherence or polynomial)");
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.spec);
  require(cfg.trials >= 1, ErrorCode::InvalidArgument, "trials must be at least 1");
  require(cfg.m > 0 || (cfg.fraction > 0.0 && cfg.fraction <= 1.0), ErrorCode::InvalidArgument,
          "fraction must lie in (0, 1]");
  require(!cfg.densities.empty(), ErrorCode::InvalidArgument, "no density kinds to compare");
  require(cfg.magnitude_spread >= 0.0, ErrorCode::InvalidArgument,
          "magnitude spread must be nonnegative");
  if (cfg.test_image)
    require(cfg.test_image->size() == cfg.spec.size(), ErrorCode::DimensionMismatch,
            "test image has " + std::to_string(cfg.test_image->size()) + " pixels, operator " +
                std::to_string(cfg.spec.size()));
}

const KindSummary& ExperimentReport::summary(ComparedDensity kind) const {
  for (const KindSummary& s : summaries)
    if (s.kind == kind) return s;
  fail(ErrorCode::InvalidArgument, "no summary for density " + to_string(kind));
}

ResolvedWeights resolve_weights(const ExperimentConfig& cfg) {
  const WeightConfig& wc = cfg.weights;
  const std::size_t size = cfg.spec.size();
  WeightVector truth;
  switch (wc.source) {
    case WeightSource::Uniform: truth = uniform_weights(size, wc.sparsity); break;
    case WeightSource::Levels:
      truth = level_weights(cfg.spec, wc.sparsity, wc.decay, wc.asymmetry);
      break;
    case WeightSource::File: truth = WeightVector::from_values(wc.values); break;
    case WeightSource::Corpus:
      truth = estimate_weights(wc.corpus, wc.threshold, wc.threshold_mode);
      break;
  }
  require(truth.size() == size, ErrorCode::DimensionMismatch,
          "weights have length " + std::to_string(truth.size()) + ", operator " +
              std::to_string(size));

  WeightVector density = truth;
  if (cfg.estimation.size > 0) {
    const auto corpus = synth_corpus(truth, cfg.estimation.size, cfg.estimation.floor,
                                     derive_seed(cfg.seed, kCorpusStream));
    density = estimate_weights(corpus, cfg.estimation.threshold, ThresholdMode::Absolute);
  }
  if (cfg.flip) {
    truth = WeightVector::from_values(flip<double>(truth.values));
    density = WeightVector::from_values(flip<double>(density.values));
  }
  return {std::move(truth), std::move(density)};
}

Density compute_density(ComparedDensity kind, const Operator& op, const BlockPartition& partition,
                        const WeightVector& weights, double polynomial_exponent) {
  switch (kind) {
    case ComparedDensity::Adapted: {
      if (partition.kind() == PartitionKind::Singletons) return adapted_isolated(op, weights);
      const bool lines = partition.kind() == PartitionKind::VerticalLines ||
                         partition.kind() == PartitionKind::HorizontalLines;
      const auto method = lines && op.spec().is_kronecker() ? BlockMethod::ClosedFormLines
                                                            : BlockMethod::Generic;
      return adapted_blocks(op, partition, weights, method);
    }
    case ComparedDensity::Uniform:
      return baseline_density(BaselineKind::Uniform, op, partition);
    case ComparedDensity::Coherence:
      return baseline_density(BaselineKind::Coherence, op, partition);
    case ComparedDensity::Polynomial:
      return baseline_density(BaselineKind::Polynomial, op, partition, polynomial_exponent);
  }
  fail(ErrorCode::InvalidArgument, "unknown density kind");
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const Operator op(cfg.spec);
  const BlockPartition partition = BlockPartition::parse(cfg.partition, op.size(), cfg.spec.side);

  const ResolvedWeights weights = resolve_weights(cfg);
  std::optional<SupportDistribution> model;
  if (!cfg.test_image) model.emplace(unflipped_truth(cfg, weights));

  ExperimentReport report;
  report.config = cfg;
  report.partition_name = partition.name();
  report.budget = block_budget(cfg, partition.count());
  report.weight_sum = weights.density.sparsity;

  std::vector<Density> densities;
  for (ComparedDensity kind : cfg.densities)
    densities.push_back(
        compute_density(kind, op, partition, weights.density, cfg.polynomial_exponent));

  report.trials.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(report.trials.size(), cfg.threads, [&](std::size_t t) {
    TrialRecord& rec = report.trials[t];
    rec.trial = static_cast<int>(t);
    rec.signal_seed = derive_seed(cfg.seed, t, 0);
    const TrialSignal signal =
        make_signal(cfg, op, model ? &*model : nullptr, cfg.flip, rec.signal_seed);
    rec.support_size = signal.support_size;
    const CVec ref_image = op.synthesize(signal.coefficients);

    for (std::size_t d = 0; d < densities.size(); ++d) {
      KindTrial kt;
      kt.kind = cfg.densities[d];
      kt.mask_seed = derive_seed(cfg.seed, t, d + 1);
      const Mask atoms = draw_mask(densities[d].pi, report.budget, cfg.mode, kt.mask_seed);
      const Mask rows = partition.kind() == PartitionKind::Singletons
                            ? atoms
                            : expand_blocks(atoms, partition);
      kt.measured_fraction = rows.measured_fraction;
      if (rows.mode == MaskMode::IidWithReplacement)
        kt.measured_fraction = static_cast<double>(rows.count()) / static_cast<double>(op.size());
      if (cfg.include_masks) kt.mask = atoms.indices;

      const MeasurementOp a(op, rows);
      const CVec y = measure(signal.coefficients, a);
      const SolveResult solved = solve_bp(y, a, cfg.solver);
      kt.converged = solved.converged;
      kt.iterations = solved.iterations;
      kt.relative_error = relative_error(signal.coefficients, solved.x);
      if (kt.relative_error <= kExactRelativeError) {
        kt.psnr = kPsnrInfinity;
      } else {
        const CVec rec_image = op.synthesize(solved.x);
        kt.psnr = psnr(ref_image, rec_image, cfg.peak);
      }
      rec.kinds.push_back(std::move(kt));
    }
  });

  for (std::size_t d = 0; d < densities.size(); ++d) {
    KindSummary s;
    s.kind = cfg.densities[d];
    std::vector<double> values, errors;
    for (const TrialRecord& rec : report.trials) {
      values.push_back(rec.kinds[d].psnr);
      errors.push_back(rec.kinds[d].relative_error);
      if (!rec.kinds[d].converged) ++s.nonconverged;
    }
    s.mean_psnr = summary_mean(values);
    s.mean_relative_error = summary_mean(errors);
    if (std::isinf(s.mean_psnr)) {
      const bool all_inf = std::all_of(values.begin(), values.end(),
                                       [](double v) { return std::isinf(v); });
      s.sd_psnr = all_inf ? 0.0 : kPsnrInfinity;
    } else if (values.size() > 1) {
      double acc = 0.0;
      for (double v : values) acc += (v - s.mean_psnr) * (v - s.mean_psnr);
      s.sd_psnr = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    if (cfg.include_densities) s.density = densities[d].pi;
    report.summaries.push_back(std::move(s));
  }

  if (cfg.timing)
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

double lambda_support(std::span<const CVec> columns, const BlockPartition& partition,
                      std::span<const double> pi, std::size_t m) {
  require(!columns.empty(), ErrorCode::InvalidArgument, "empty support");
  require(m >= 1, ErrorCode::InvalidArgument, "m must be at least 1");
  require(pi.size() == partition.count(), ErrorCode::DimensionMismatch,
          "density has " + std::to_string(pi.size()) + " entries, partition " +
              std::to_string(partition.count()) + " blocks");
  const auto s = static_cast<Eigen::Index>(columns.size());
  double best = 0.0;
  for (std::size_t k = 0; k < partition.count(); ++k) {
    const auto& block = partition.block(k);
    Eigen::MatrixXcd sub(static_cast<Eigen::Index>(block.size()), s);
    for (std::size_t r = 0; r < block.size(); ++r)
      for (Eigen::Index c = 0; c < s; ++c)
        sub(static_cast<Eigen::Index>(r), c) = columns[static_cast<std::size_t>(c)][block[r]];
    double norm;
    if (block.size() == 1 || s == 1) {
      norm = sub.squaredNorm();
    } else {
      const Eigen::MatrixXcd g =
          block.size() < columns.size() ? Eigen::MatrixXcd(sub * sub.adjoint())
                                        : Eigen::MatrixXcd(sub.adjoint() * sub);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g, Eigen::EigenvaluesOnly);
      norm = std::max(0.0, eig.eigenvalues().maxCoeff());
    }
    if (norm <= 1e-14) continue;
    if (pi[k] <= 0.0) return kPsnrInfinity;
    best = std::max(best, norm / (pi[k] * static_cast<double>(m)));
  }
  return best;
}

Diagnostics diagnostics(const DiagnosticsConfig& cfg) {
  validate(cfg.spec);
  const Operator op(cfg.spec);
  const std::size_t size = op.size();
  require(size <= 4096, ErrorCode::Unsupported,
          "diagnostics use dense sub-Gram matrices; K must be at most 4096");
  const BlockPartition partition = BlockPartition::parse(cfg.partition, size, cfg.spec.side);
  require(cfg.pi.size() == partition.count(), ErrorCode::DimensionMismatch,
          "density has " + std::to_string(cfg.pi.size()) + " entries, partition " +
              std::to_string(partition.count()) + " blocks");
  require(cfg.weights.size() == size, ErrorCode::DimensionMismatch,
          "weights do not match operator size");
  require(cfg.draws >= 1, ErrorCode::InvalidArgument, "draws must be at least 1");
  require(cfg.epsilon > 0.0 && cfg.epsilon < 1.0, ErrorCode::InvalidArgument,
          "epsilon must lie in (0, 1)");

  Diagnostics out;
  for (std::size_t k = 0; k < partition.count(); ++k) {
    const auto rows = block_rows(op, partition, k);
    const double inf1 = block_inf1_norm(rows);
    const double gram = block_gram_opnorm(rows, cfg.weights.values);
    const double p = cfg.pi[k];
    out.coherence_ratio = std::max(out.coherence_ratio, p > 0.0 ? inf1 / p : kPsnrInfinity);
    if (gram > 0.0)
      out.gram_ratio = std::max(out.gram_ratio, p > 0.0 ? gram / p : kPsnrInfinity);
  }
  const double k_size = static_cast<double>(size);
  const double log_k = std::log(k_size / cfg.epsilon);
  const double log_168 = std::log(168.0 * k_size / cfg.epsilon);
  out.m_threshold_coherence = out.coherence_ratio * log_k * log_k * log_k;
  out.m_threshold_gram = out.gram_ratio * log_k * log_k;
  out.m_threshold_coherence_explicit = out.coherence_ratio * 128.0 *
                                       std::log(1296.0 * k_size * k_size / cfg.epsilon) *
                                       log_168 * log_168;
  out.m_threshold_gram_explicit = out.gram_ratio * log_168 * log_168;

  const SupportDistribution model(cfg.weights);
  const std::size_t s = model.support_size();
  require(s >= 1, ErrorCode::Infeasible, "weights give an empty support");
  for (std::size_t m : cfg.m_values) {
    require(m >= 1, ErrorCode::InvalidArgument, "m must be at least 1");
    DiagnosticsPoint pt;
    pt.m = m;
    pt.mu = out.coherence_ratio / static_cast<double>(m);
    out.points.push_back(pt);
  }

  const auto si = static_cast<Eigen::Index>(s);
  for (int d = 0; d < cfg.draws; ++d) {
    const auto support = model.sample(SamplingMethod::ExactSequential,
                                      derive_seed(cfg.seed, static_cast<std::uint64_t>(d), 0));
    std::vector<CVec> columns;
    CVec unit(size, cplx{});
    for (std::size_t i : support) {
      unit[i] = 1.0;
      columns.push_back(op.forward(unit));
      unit[i] = 0.0;
    }
    const double lambda_one = lambda_support(columns, partition, cfg.pi, 1);

    for (DiagnosticsPoint& pt : out.points) {
      const double lambda = lambda_one / static_cast<double>(pt.m);
      pt.lambda_mean += lambda;
      pt.lambda_max = std::max(pt.lambda_max, lambda);

      const Mask mask = draw_mask(cfg.pi, pt.m, MaskMode::IidWithReplacement,
                                  derive_seed(cfg.seed, static_cast<std::uint64_t>(d), 1));
      Eigen::MatrixXcd gram = -Eigen::MatrixXcd::Identity(si, si);
      for (std::size_t j = 0; j < mask.count(); ++j) {
        const double weight = static_cast<double>(mask.multiplicities[j]) /
                              (static_cast<double>(pt.m) * mask.atom_probability[j]);
        for (std::size_t r : partition.block(mask.indices[j])) {
          Eigen::VectorXcd row(si);
          for (Eigen::Index c = 0; c < si; ++c) row(c) = columns[static_cast<std::size_t>(c)][r];
          gram.noalias() += weight * row.conjugate() * row.transpose();
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
      const double deviation = eig.eigenvalues().cwiseAbs().maxCoeff();
      pt.gram_deviation_mean += deviation;
      if (deviation >= 0.5) pt.gram_tail += 1.0;
    }
  }
  for (DiagnosticsPoint& pt : out.points) {
    pt.lambda_mean /= cfg.draws;
    pt.gram_deviation_mean /= cfg.draws;
    pt.gram_tail /= cfg.draws;
  }
  return out;
}

PhaseTransitionTable phase_transition(const PhaseTransitionConfig& cfg) {
  const ExperimentConfig& base = cfg.base;
  validate(base);
  require(cfg.m_start >= 1 && cfg.m_step >= 1 && cfg.m_stop >= cfg.m_start,
          ErrorCode::InvalidArgument, "m grid needs 1 <= start <= stop and step >= 1");
  require(cfg.trials >= 1, ErrorCode::InvalidArgument, "trials must be at least 1");
  require(!base.test_image, ErrorCode::Unsupported,
          "phase transitions need synthetic signals with known weights");
  const Operator op(base.spec);
  const BlockPartition partition = BlockPartition::parse(base.partition, op.size(), base.spec.side);
  const ResolvedWeights weights = resolve_weights(base);
  const SupportDistribution model(unflipped_truth(base, weights));

  PhaseTransitionTable table;
  table.kinds = base.densities;
  table.first_reaching_target.assign(table.kinds.size(), std::nullopt);
  std::vector<Density> densities;
  for (ComparedDensity kind : table.kinds)
    densities.push_back(
        compute_density(kind, op, partition, weights.density, base.polynomial_exponent));

  std::vector<TrialSignal> signals;
  for (int t = 0; t < cfg.trials; ++t)
    signals.push_back(make_signal(base, op, &model, base.flip,
                                  derive_seed(base.seed, static_cast<std::uint64_t>(t), 0)));

  std::vector<bool> active(table.kinds.size(), true);
  for (std::size_t m = cfg.m_start; m <= cfg.m_stop; m += cfg.m_step) {
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
    PhaseTransitionRow row;
    row.m = m;
    row.success.assign(table.kinds.size(), std::nan(""));
    for (std::size_t d = 0; d < table.kinds.size(); ++d) {
      if (!active[d]) continue;
      std::vector<int> ok(static_cast<std::size_t>(cfg.trials), 0);
      parallel_for(ok.size(), base.threads, [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(derive_seed(base.seed, t, d + 1), m);
        const Mask atoms = draw_mask(densities[d].pi, m, base.mode, seed);
        const Mask rows = partition.kind() == PartitionKind::Singletons
                              ? atoms
                              : expand_blocks(atoms, partition);
        const MeasurementOp a(op, rows);
        const SolveResult solved = solve_bp(measure(signals[t].coefficients, a), a, base.solver);
        ok[t] = relative_error(signals[t].coefficients, solved.x) <= cfg.success_tolerance;
      });
      int hits = 0;
      for (int v : ok) hits += v;
      row.success[d] = static_cast<double>(hits) / static_cast<double>(cfg.trials);
      if (row.success[d] >= cfg.target && !table.first_reaching_target[d]) {
        table.first_reaching_target[d] = m;
        if (cfg.stop_at_target) active[d] = false;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace avds
