#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "avds/avds.h"

namespace {

struct Failure {
  avds_status status;
  std::string message;
};

void check(avds_status s) {
  if (s != AVDS_OK) throw Failure{s, avds_last_error()};
}

[[noreturn]] void usage(const std::string& message) {
  throw Failure{AVDS_ERR_INVALID_ARGUMENT, message};
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};

using OperatorPtr = std::unique_ptr<avds_operator, Deleter<avds_operator, avds_operator_destroy>>;
using PartitionPtr =
    std::unique_ptr<avds_partition, Deleter<avds_partition, avds_partition_destroy>>;
using MaskPtr = std::unique_ptr<avds_mask, Deleter<avds_mask, avds_mask_destroy>>;
using TensorPtr = std::unique_ptr<avds_tensor, Deleter<avds_tensor, avds_tensor_destroy>>;

OperatorPtr make_operator(const std::string& spec) {
  avds_operator* op = nullptr;
  check(avds_operator_create(spec.c_str(), &op));
  return OperatorPtr(op);
}

PartitionPtr make_partition(const std::string& text, const avds_operator* op) {
  avds_partition* p = nullptr;
  check(avds_partition_create(text.c_str(), op, &p));
  return PartitionPtr(p);
}

TensorPtr read_tensor(const std::string& path) {
  avds_tensor* t = nullptr;
  check(avds_tensor_read(path.c_str(), &t));
  return TensorPtr(t);
}

TensorPtr real_tensor(const std::vector<double>& v, std::vector<uint64_t> dims) {
  avds_tensor* t = nullptr;
  check(avds_tensor_create_real(v.data(), v.size(), dims.data(), dims.size(), &t));
  return TensorPtr(t);
}

TensorPtr complex_tensor(const std::vector<avds_complex>& v, std::vector<uint64_t> dims) {
  avds_tensor* t = nullptr;
  check(avds_tensor_create_complex(v.data(), v.size(), dims.data(), dims.size(), &t));
  return TensorPtr(t);
}

void write_tensor(const std::string& path, const TensorPtr& t) {
  check(avds_tensor_write(path.c_str(), t.get()));
}

std::size_t numel(const avds_tensor* t) {
  std::size_t n = 0;
  check(avds_tensor_numel(t, &n));
  return n;
}

std::vector<double> real_values(const avds_tensor* t) {
  const double* data = nullptr;
  check(avds_tensor_real_data(t, &data));
  return std::vector<double>(data, data + numel(t));
}

std::vector<avds_complex> complex_values(const avds_tensor* t) {
  avds_dtype dtype;
  check(avds_tensor_dtype(t, &dtype));
  if (dtype == AVDS_COMPLEX128) {
    const avds_complex* data = nullptr;
    check(avds_tensor_complex_data(t, &data));
    return std::vector<avds_complex>(data, data + numel(t));
  }
  std::vector<avds_complex> out;
  for (double v : real_values(t)) out.push_back({v, 0.0});
  return out;
}

std::size_t operator_size(const avds_operator* op) {
  std::size_t n = 0;
  check(avds_operator_size(op, &n));
  return n;
}

std::size_t operator_side(const avds_operator* op) {
  std::size_t n = 0;
  check(avds_operator_side(op, &n));
  return n;
}

std::vector<uint64_t> grid_dims(const avds_operator* op) {
  const std::size_t side = operator_side(op), size = operator_size(op);
  if (side * side == size && side != size) return {side, side};
  return {size};
}

std::size_t partition_count(const avds_partition* p) {
  std::size_t n = 0;
  check(avds_partition_count(p, &n));
  return n;
}

std::vector<std::size_t> partition_block(const avds_partition* p, std::size_t k) {
  std::size_t len = 0;
  check(avds_partition_block(p, k, nullptr, 0, &len));
  std::vector<std::size_t> rows(len);
  check(avds_partition_block(p, k, rows.data(), rows.size(), &len));
  return rows;
}

avds_density_kind parse_kind(const std::string& s) {
  if (s == "adapted") return AVDS_DENSITY_ADAPTED;
  if (s == "uniform") return AVDS_DENSITY_UNIFORM;
  if (s == "coherence") return AVDS_DENSITY_COHERENCE;
  if (s == "polynomial") return AVDS_DENSITY_POLYNOMIAL;
  usage("unknown density kind '" + s + "'");
}

// Mask file: (count, 3) real tensor with columns index, multiplicity, atom probability.
TensorPtr mask_to_tensor(const avds_mask* mask) {
  std::size_t n = 0;
  check(avds_mask_count(mask, &n));
  std::vector<std::size_t> idx(n), mult(n);
  std::vector<double> prob(n);
  check(avds_mask_indices(mask, idx.data(), n));
  check(avds_mask_multiplicities(mask, mult.data(), n));
  check(avds_mask_atom_probabilities(mask, prob.data(), n));
  std::vector<double> cols(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    cols[i] = static_cast<double>(idx[i]);
    cols[n + i] = static_cast<double>(mult[i]);
    cols[2 * n + i] = prob[i];
  }
  return real_tensor(cols, {n, 3});
}

MaskPtr mask_from_tensor(const avds_tensor* t, std::size_t universe) {
  std::size_t ndim = 0;
  check(avds_tensor_ndim(t, &ndim));
  std::vector<uint64_t> dims(ndim);
  check(avds_tensor_dims(t, dims.data(), ndim));
  const std::vector<double> v = real_values(t);
  const std::size_t n = ndim == 2 ? dims[0] : v.size();
  std::vector<std::size_t> idx(n), mult(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<std::size_t>(v[i]);
    if (ndim == 2 && dims[1] >= 2) mult[i] = static_cast<std::size_t>(v[n + i]);
  }
  avds_mask* m = nullptr;
  check(avds_mask_from_indices(idx.data(), mult.data(), n, universe, &m));
  return MaskPtr(m);
}

void write_png_log(const std::string& path, const std::vector<double>& grid,
                   const std::vector<uint64_t>& dims) {
  const std::vector<uint64_t> shape = dims.size() == 2 ? dims : std::vector<uint64_t>{dims[0], 1};
  auto t = real_tensor(grid, shape);
  check(avds_pgm_write(path.c_str(), t.get(), 1));
}

struct Options {
  std::string corpus, transform, out, spec, weights, kind = "adapted", partition = "singletons",
              png_log, density, mode = "distinct", mask, input, image, config, in;
  double threshold = 0.05, exponent = 2.5;
  std::optional<double> fraction;
  std::optional<std::size_t> m;
  uint64_t seed = 1;
  bool relative = false;
};

int cmd_estimate_weights(const Options& o) {
  auto op = make_operator(o.transform);
  avds_tensor* raw = nullptr;
  check(avds_weights_estimate_dir(o.corpus.c_str(), o.transform.c_str(), o.threshold,
                                  o.relative ? 1 : 0, &raw));
  TensorPtr w(raw);
  const auto values = real_values(w.get());
  double sum = 0.0;
  for (double v : values) sum += v;
  write_tensor(o.out, real_tensor(values, grid_dims(op.get())));
  std::cout << "weights=" << o.out << "\nsparsity=" << sum << "\n";
  return 0;
}

int cmd_density(const Options& o) {
  auto op = make_operator(o.spec);
  auto part = make_partition(o.partition, op.get());
  const std::size_t count = partition_count(part.get());
  std::vector<double> w;
  if (!o.weights.empty()) {
    auto wt = read_tensor(o.weights);
    w = real_values(wt.get());
  }
  std::vector<double> pi(count);
  check(avds_density(op.get(), part.get(), parse_kind(o.kind), w.empty() ? nullptr : w.data(),
                     w.size(), o.exponent, pi.data(), pi.size()));
  const auto dims = grid_dims(op.get());
  write_tensor(o.out, real_tensor(pi, count == operator_size(op.get()) ? dims
                                                                        : std::vector<uint64_t>{count}));
  if (!o.png_log.empty()) {
    std::vector<double> grid(operator_size(op.get()));
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t r : partition_block(part.get(), k)) grid[r] = pi[k];
    write_png_log(o.png_log, grid, dims);
  }
  std::cout << "density=" << o.out << "\nblocks=" << count << "\n";
  return 0;
}

int cmd_mask(const Options& o) {
  auto dt = read_tensor(o.density);
  const auto pi = real_values(dt.get());
  if (o.fraction.has_value() == o.m.has_value()) usage("give exactly one of --fraction and --m");
  std::size_t budget = 0;
  if (o.m) {
    budget = *o.m;
  } else {
    if (!(*o.fraction > 0.0 && *o.fraction <= 1.0)) usage("--fraction must lie in (0, 1]");
    budget = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(*o.fraction * pi.size())));
  }
  avds_mask_mode mode;
  if (o.mode == "distinct") mode = AVDS_MASK_DISTINCT;
  else if (o.mode == "iid") mode = AVDS_MASK_IID;
  else usage("--mode must be distinct or iid");
  avds_mask* raw = nullptr;
  check(avds_mask_draw(pi.data(), pi.size(), budget, mode, o.seed, &raw));
  MaskPtr mask(raw);
  if (o.partition != "singletons") {
    if (o.spec.empty()) usage("--partition needs --spec");
    auto op = make_operator(o.spec);
    auto part = make_partition(o.partition, op.get());
    check(avds_mask_expand(mask.get(), part.get(), &raw));
    mask.reset(raw);
  }
  double fraction = 0.0;
  std::size_t rows = 0;
  check(avds_mask_measured_fraction(mask.get(), &fraction));
  check(avds_mask_count(mask.get(), &rows));
  write_tensor(o.out, mask_to_tensor(mask.get()));
  std::cout << "mask=" << o.out << "\nrows=" << rows << "\nmeasured_fraction=" << fraction << "\n";
  return 0;
}

int cmd_reconstruct(const Options& o) {
  if (o.input.empty() == o.image.empty()) usage("give exactly one of --input and --image");
  auto op = make_operator(o.spec);
  const std::size_t n = operator_size(op.get());
  auto mt = read_tensor(o.mask);
  auto mask = mask_from_tensor(mt.get(), n);
  std::size_t m = 0;
  check(avds_mask_count(mask.get(), &m));
  std::vector<avds_complex> y, truth;
  if (!o.image.empty()) {
    avds_tensor* raw = nullptr;
    check(avds_pgm_read(o.image.c_str(), &raw));
    TensorPtr img(raw);
    const auto pixels = complex_values(img.get());
    if (pixels.size() != n) usage("image size does not match --spec");
    truth.resize(n);
    check(avds_operator_analyze(op.get(), pixels.data(), truth.data(), n));
    y.resize(m);
    check(avds_measure(op.get(), mask.get(), truth.data(), n, y.data(), m));
  } else {
    auto yt = read_tensor(o.input);
    y = complex_values(yt.get());
  }
  std::vector<avds_complex> x(n);
  avds_solve_info info{};
  check(avds_solve_bp(op.get(), mask.get(), y.data(), y.size(), nullptr, x.data(), n, &info));
  write_tensor(o.out, complex_tensor(x, grid_dims(op.get())));
  std::cout << "reconstruction=" << o.out << "\nconverged=" << info.converged
            << "\niterations=" << info.iterations << "\nrelative_residual=" << info.relative_residual
            << "\n";
  if (!truth.empty()) {
    std::vector<avds_complex> ref(n), rec(n);
    check(avds_operator_synthesize(op.get(), truth.data(), ref.data(), n));
    check(avds_operator_synthesize(op.get(), x.data(), rec.data(), n));
    double psnr = 0.0;
    check(avds_psnr(ref.data(), rec.data(), n, 0.0, &psnr));
    std::cout << "psnr=" << psnr << "\n";
  }
  return 0;
}

int cmd_run(const Options& o, const char* command) {
  char* report = nullptr;
  check(avds_run_file(o.config.c_str(), command, &report));
  std::cout << report << "\n";
  avds_string_free(report);
  return 0;
}

int cmd_flip(const Options& o) {
  auto in = read_tensor(o.in);
  avds_tensor* raw = nullptr;
  check(avds_tensor_flip(in.get(), &raw));
  TensorPtr out(raw);
  write_tensor(o.out, out);
  std::cout << "flipped=" << o.out << "\n";
  return 0;
}

int fail_with(avds_status status, const std::string& message) {
  std::cout << "error=" << avds_status_name(status) << "\n";
  std::cerr << message << "\n";
  return status == AVDS_ERR_INTERNAL ? 70 : static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adapted variable density sampling for compressed sensing"};
  app.set_version_flag("--version", std::string(avds_version()));
  app.require_subcommand(1);
  Options o;

  auto* est = app.add_subcommand("estimate-weights", "Estimate support weights from a corpus");
  est->add_option("--corpus", o.corpus, "Directory of .pgm or .avds files")->required();
  est->add_option("--transform", o.transform, "Operator spec whose sparsity basis is used")->required();
  est->add_option("--threshold", o.threshold, "Magnitude threshold")->required();
  est->add_flag("--relative", o.relative, "Threshold relative to each vector's max");
  est->add_option("--out", o.out, "Output weights tensor")->required();

  auto* den = app.add_subcommand("density", "Compute a sampling density");
  den->add_option("--spec", o.spec, "Operator spec, e.g. dft2d/db4-2d/64")->required();
  den->add_option("--weights", o.weights, "Weights tensor");
  den->add_option("--kind", o.kind, "adapted|uniform|coherence|polynomial");
  den->add_option("--partition", o.partition, "singletons|lines-v|lines-h|squares:N");
  den->add_option("--exponent", o.exponent, "Polynomial exponent");
  den->add_option("--out", o.out, "Output density tensor")->required();
  den->add_option("--png-log", o.png_log, "Log-scale density image (PGM)");

  auto* msk = app.add_subcommand("mask", "Draw a sampling mask");
  msk->add_option("--density", o.density, "Density tensor")->required();
  msk->add_option("--fraction", o.fraction, "Fraction of atoms to sample");
  msk->add_option("--m", o.m, "Number of atoms to sample");
  msk->add_option("--mode", o.mode, "distinct|iid");
  msk->add_option("--seed", o.seed, "Seed");
  msk->add_option("--spec", o.spec, "Operator spec (with --partition)");
  msk->add_option("--partition", o.partition, "Expand block draws to rows");
  msk->add_option("--out", o.out, "Output mask tensor")->required();

  auto* rec = app.add_subcommand("reconstruct", "Solve basis pursuit");
  rec->add_option("--spec", o.spec, "Operator spec")->required();
  rec->add_option("--mask", o.mask, "Mask tensor of row indices")->required();
  rec->add_option("--input", o.input, "Measurements tensor");
  rec->add_option("--image", o.image, "Image to measure (PGM)");
  rec->add_option("--out", o.out, "Output coefficient tensor")->required();

  auto* exp = app.add_subcommand("experiment", "Run a reconstruction experiment");
  exp->add_option("--config", o.config, "Run configuration (JSON)")->required();
  auto* dia = app.add_subcommand("diagnose", "Report coherence and Gram diagnostics");
  dia->add_option("--config", o.config, "Run configuration (JSON)")->required();
  auto* pha = app.add_subcommand("phase-transition", "Success rate against m");
  pha->add_option("--config", o.config, "Run configuration (JSON)")->required();

  auto* flp = app.add_subcommand("flip", "Reverse a tensor's entries");
  flp->add_option("--in", o.in, "Input tensor")->required();
  flp->add_option("--out", o.out, "Output tensor")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail_with(AVDS_ERR_INVALID_ARGUMENT, e.what());
  }

  try {
    if (est->parsed()) return cmd_estimate_weights(o);
    if (den->parsed()) return cmd_density(o);
    if (msk->parsed()) return cmd_mask(o);
    if (rec->parsed()) return cmd_reconstruct(o);
    if (exp->parsed()) return cmd_run(o, "experiment");
    if (dia->parsed()) return cmd_run(o, "diagnose");
    if (pha->parsed()) return cmd_run(o, "phase-transition");
    if (flp->parsed()) return cmd_flip(o);
  } catch (const Failure& f) {
    return fail_with(f.status, f.message);
  } catch (const std::exception& e) {
    return fail_with(AVDS_ERR_INTERNAL, e.what());
  }
  return 0;
}
