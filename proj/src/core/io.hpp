#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "harness.hpp"

namespace avds {

enum class DType : std::uint8_t { Real64 = 0, Complex128 = 1 };

inline constexpr std::uint8_t kTensorVersion = 1;

// In-memory tensor file. Exactly one of `real` / `complex` holds the
// column-major payload, matching `dtype`.
struct Tensor {
  DType dtype = DType::Real64;
  std::vector<std::uint64_t> dims;
  RVec real;
  CVec complex;

  std::size_t numel() const;
  static Tensor from_real(RVec values, std::vector<std::uint64_t> dims = {});
  static Tensor from_complex(CVec values, std::vector<std::uint64_t> dims = {});
  // Real payload as complex, complex payload as-is.
  CVec as_complex() const;
  // Real payload; complex tensors are rejected.
  const RVec& as_real() const;
};

// Layout: "AVDS", version, dtype, ndim, ndim x u64 dims, payload as
// little-endian f64 (complex interleaved re, im).
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Grey image, row-major, values in [0, 1].
struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  RVec pixels;

  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  // vec(): columns stacked, the operator convention.
  RVec column_major() const;
  static Image from_column_major(std::span<const double> values, std::size_t rows,
                                 std::size_t cols);
};

Image decode_pgm(const std::vector<std::uint8_t>& bytes);
Image read_pgm(const std::filesystem::path& path);
// 16-bit P5 when maxval > 255. Values are clamped to [0, 1].
std::vector<std::uint8_t> encode_pgm(const Image& image, int maxval = 255);
void write_pgm(const std::filesystem::path& path, const Image& image, int maxval = 255);

// Maps log10(v) linearly onto [0, 1] over [max - decades, max]; zeros and
// values below the window go to 0.
Image log_scale_image(std::span<const double> values, std::size_t rows, std::size_t cols,
                      double decades = 6.0);
// Linear min-max scaling onto [0, 1].
Image linear_scale_image(std::span<const double> values, std::size_t rows, std::size_t cols);

// Sorted *.pgm and *.avds files of a directory, each analysed with the
// sparsity basis of `spec`; returns coefficient magnitudes.
std::vector<RVec> load_corpus(const std::filesystem::path& dir, const OperatorSpec& spec);

struct DiagnosticsOptions {
  ComparedDensity density = ComparedDensity::Adapted;
  std::vector<std::size_t> m_values;
  int draws = 200;
  double epsilon = 0.1;
};

struct PhaseTransitionOptions {
  std::size_t m_start = 0;
  std::size_t m_step = 0;
  std::size_t m_stop = 0;
  int trials = 50;
  double success_tolerance = 1e-3;
  double target = 0.95;
  bool stop_at_target = true;
};

// Parsed configuration document. Unknown keys are rejected and relative
// paths resolve against the directory of the document.
struct RunConfig {
  int schema_version = 1;
  ExperimentConfig experiment;
  std::optional<DiagnosticsOptions> diagnostics;
  std::optional<PhaseTransitionOptions> phase;
  std::filesystem::path report_path;   // empty: stdout
  std::filesystem::path figures_dir;   // empty: none
  std::string source_text;             // canonical JSON of the document
};

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig read_run_config(const std::filesystem::path& path);

DiagnosticsConfig make_diagnostics_config(const RunConfig& cfg);
PhaseTransitionConfig make_phase_transition_config(const RunConfig& cfg);

// Reports as JSON text with a schema_version field. Infinite PSNR values
// are written as the string "inf". `config_json` is embedded verbatim
// (canonical form) when non-empty.
std::string report_to_json(const ExperimentReport& report, const std::string& config_json = {});
std::string diagnostics_to_json(const Diagnostics& d, const std::string& config_json = {});
std::string phase_transition_to_json(const PhaseTransitionTable& t,
                                     const std::string& config_json = {});

// Density and first-trial mask panels, one pair per density kind.
void write_report_figures(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace avds
