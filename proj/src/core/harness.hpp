#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "density.hpp"
#include "error.hpp"
#include "mask.hpp"
#include "partition.hpp"
#include "recon.hpp"
#include "support_model.hpp"
#include "transforms.hpp"

namespace avds {

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();
inline constexpr int kReportSchemaVersion = 1;

// 10 log10(peak^2 / MSE). peak <= 0 selects max|ref|. MSE = 0 gives
// kPsnrInfinity.
double psnr(std::span<const cplx> ref, std::span<const cplx> rec, double peak = 0.0);
double psnr(std::span<const double> ref, std::span<const double> rec, double peak = 0.0);

double relative_error(std::span<const cplx> ref, std::span<const cplx> rec);

// Coefficient vectors with supports drawn from the rejective model with
// weights `truth`, random signs and magnitudes floor * (1 + Exp(1)).
std::vector<RVec> synth_corpus(const WeightVector& truth, std::size_t count, double floor,
                               std::uint64_t seed);

// Scale index of coefficient `index` under the sparsity basis of `spec`:
// 0 for the coarsest band, increasing towards fine detail. For 2D bases
// the level is the larger of the row and column levels.
int coefficient_level(const OperatorSpec& spec, std::size_t index);

// S/K everywhere.
WeightVector uniform_weights(std::size_t size, double sparsity);

// Raw weight 2^(-decay * level), times `asymmetry` on the strictly lower
// triangle (row > col) of 2D layouts, then rescaled to sum `sparsity`
// with clamping at 1.
WeightVector level_weights(const OperatorSpec& spec, double sparsity, double decay,
                           double asymmetry);

enum class ComparedDensity { Adapted, Uniform, Coherence, Polynomial };
std::string to_string(ComparedDensity kind);
ComparedDensity parse_compared_density(const std::string& text);

enum class WeightSource { Uniform, Levels, File, Corpus };

struct WeightConfig {
  WeightSource source = WeightSource::Uniform;
  double sparsity = 0.0;  // S for synthetic profiles
  double decay = 1.0;
  double asymmetry = 1.0;
  RVec values;              // File: loaded weights
  std::vector<RVec> corpus;  // Corpus: coefficient vectors, already transformed
  double threshold = 0.0;
  ThresholdMode threshold_mode = ThresholdMode::Absolute;
};

// Estimate the density weights from a synthetic corpus drawn from the
// true weights instead of using them directly.
struct CorpusEstimation {
  std::size_t size = 0;  // 0 disables
  double floor = 0.1;
  double threshold = 0.05;
};

struct ExperimentConfig {
  OperatorSpec spec;
  std::string partition = "singletons";
  WeightConfig weights;
  CorpusEstimation estimation;
  std::vector<ComparedDensity> densities{ComparedDensity::Adapted, ComparedDensity::Uniform,
                                         ComparedDensity::Coherence};
  double fraction = 0.1;  // of K; converted to a block budget
  std::size_t m = 0;      // block budget; overrides fraction when > 0
  MaskMode mode = MaskMode::DistinctUntilBudget;
  int trials = 10;
  std::uint64_t seed = 1;
  SolverParams solver;
  bool flip = false;
  double polynomial_exponent = 2.5;
  double magnitude_spread = 0.0;  // signal magnitudes 1 + spread * Exp(1)
  std::optional<RVec> test_image;  // column-major side x side; replaces synthetic signals
  double peak = 0.0;               // <= 0: max|ref|
  bool include_densities = true;
  bool include_masks = true;
  bool timing = false;
  int threads = 1;
};

void validate(const ExperimentConfig& cfg);

struct KindTrial {
  ComparedDensity kind = ComparedDensity::Adapted;
  std::uint64_t mask_seed = 0;
  double psnr = 0.0;
  double relative_error = 0.0;
  bool converged = true;
  int iterations = 0;
  double measured_fraction = 0.0;
  std::vector<std::size_t> mask;  // drawn atoms (blocks or rows)
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t signal_seed = 0;
  std::size_t support_size = 0;
  std::vector<KindTrial> kinds;
};

struct KindSummary {
  ComparedDensity kind = ComparedDensity::Adapted;
  double mean_psnr = 0.0;
  double sd_psnr = 0.0;
  double mean_relative_error = 0.0;
  int nonconverged = 0;
  RVec density;  // pi over blocks
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string partition_name;
  std::size_t budget = 0;  // blocks per mask
  double weight_sum = 0.0;
  std::vector<TrialRecord> trials;
  std::vector<KindSummary> summaries;
  std::optional<double> elapsed_seconds;

  const KindSummary& summary(ComparedDensity kind) const;
};

// The weights that drive the density (after corpus estimation and flip)
// and the weights of the true signal model.
struct ResolvedWeights {
  WeightVector truth;
  WeightVector density;
};
ResolvedWeights resolve_weights(const ExperimentConfig& cfg);

Density compute_density(ComparedDensity kind, const Operator& op, const BlockPartition& partition,
                        const WeightVector& weights, double polynomial_exponent = 2.5);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct DiagnosticsConfig {
  OperatorSpec spec;
  std::string partition = "singletons";
  RVec pi;  // over blocks
  WeightVector weights;
  std::vector<std::size_t> m_values;
  int draws = 200;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
};

struct DiagnosticsPoint {
  std::size_t m = 0;
  double mu = 0.0;
  double lambda_mean = 0.0;
  double lambda_max = 0.0;
  double gram_tail = 0.0;  // P(||A_I* A_I - I|| >= 1/2)
  double gram_deviation_mean = 0.0;
};

struct Diagnostics {
  double coherence_ratio = 0.0;  // max_k ||B_k* B_k||_{inf,1} / pi_k
  double gram_ratio = 0.0;       // max_k ||B_k D B_k*|| / pi_k
  double m_threshold_coherence = 0.0;  // coherence_ratio log^3(K/eps)
  double m_threshold_gram = 0.0;       // gram_ratio log^2(K/eps)
  double m_threshold_coherence_explicit = 0.0;
  double m_threshold_gram_explicit = 0.0;
  std::vector<DiagnosticsPoint> points;
};

// Lambda_I = max_k ||R_I* B_k* B_k R_I|| / (pi_k m), given the columns
// A0 e_i for i in I. Blocks with pi_k = 0 that touch I give +inf.
double lambda_support(std::span<const CVec> columns, const BlockPartition& partition,
                      std::span<const double> pi, std::size_t m);

Diagnostics diagnostics(const DiagnosticsConfig& cfg);

struct PhaseTransitionConfig {
  ExperimentConfig base;  // spec, partition, weights, densities, mode, seed, solver
  std::size_t m_start = 0;
  std::size_t m_step = 0;
  std::size_t m_stop = 0;
  int trials = 50;
  double success_tolerance = 1e-3;
  double target = 0.95;
  bool stop_at_target = true;
};

struct PhaseTransitionRow {
  std::size_t m = 0;
  std::vector<double> success;  // per density kind; NaN once a kind stopped
};

struct PhaseTransitionTable {
  std::vector<ComparedDensity> kinds;
  std::vector<PhaseTransitionRow> rows;
  std::vector<std::optional<std::size_t>> first_reaching_target;
};

PhaseTransitionTable phase_transition(const PhaseTransitionConfig& cfg);

}  // namespace avds
