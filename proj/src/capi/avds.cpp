#include "avds/avds.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "density.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "mask.hpp"
#include "partition.hpp"
#include "recon.hpp"
#include "support_model.hpp"
#include "transforms.hpp"

struct avds_operator {
  avds::Operator op;
};

struct avds_partition {
  avds::BlockPartition partition;
};

struct avds_support_model {
  avds::SupportDistribution model;
};

struct avds_mask {
  avds::Mask mask;
};

struct avds_tensor {
  avds::Tensor tensor;
};

namespace {

thread_local std::string g_last_error;

static_assert(sizeof(avds_complex) == sizeof(avds::cplx));

avds_status to_status(avds::ErrorCode code) { return static_cast<avds_status>(code); }

template <typename Fn>
avds_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AVDS_OK;
  } catch (const avds::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AVDS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AVDS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return AVDS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  avds::require(p != nullptr, avds::ErrorCode::InvalidArgument, std::string(name) + " is NULL");
}

void need_len(std::size_t got, std::size_t want, const char* name) {
  avds::require(got == want, avds::ErrorCode::DimensionMismatch,
                std::string(name) + " has length " + std::to_string(got) + ", expected " +
                    std::to_string(want));
}

void need_capacity(std::size_t capacity, std::size_t want, const char* name) {
  avds::require(capacity >= want, avds::ErrorCode::DimensionMismatch,
                std::string(name) + " needs capacity " + std::to_string(want) + ", got " +
                    std::to_string(capacity));
}

std::span<const avds::cplx> cspan(const avds_complex* p, std::size_t n) {
  return {reinterpret_cast<const avds::cplx*>(p), n};
}

void copy_out(const avds::CVec& v, avds_complex* out) {
  std::memcpy(out, v.data(), v.size() * sizeof(avds_complex));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  avds::require(out != nullptr, avds::ErrorCode::InvalidArgument, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

avds::ComparedDensity to_compared(avds_density_kind kind) {
  switch (kind) {
    case AVDS_DENSITY_ADAPTED: return avds::ComparedDensity::Adapted;
    case AVDS_DENSITY_UNIFORM: return avds::ComparedDensity::Uniform;
    case AVDS_DENSITY_COHERENCE: return avds::ComparedDensity::Coherence;
    case AVDS_DENSITY_POLYNOMIAL: return avds::ComparedDensity::Polynomial;
  }
  avds::fail(avds::ErrorCode::InvalidArgument, "unknown density kind");
}

std::vector<std::uint64_t> dims_of(const uint64_t* dims, std::size_t ndim) {
  if (dims == nullptr || ndim == 0) return {};
  return std::vector<std::uint64_t>(dims, dims + ndim);
}

std::string run_config(const avds::RunConfig& rc, const std::string& command) {
  if (command == "experiment") {
    const avds::ExperimentReport report = avds::run_experiment(rc.experiment);
    if (!rc.figures_dir.empty()) avds::write_report_figures(report, rc.figures_dir);
    return avds::report_to_json(report, rc.source_text);
  }
  if (command == "diagnose")
    return avds::diagnostics_to_json(avds::diagnostics(avds::make_diagnostics_config(rc)),
                                     rc.source_text);
  if (command == "phase-transition")
    return avds::phase_transition_to_json(
        avds::phase_transition(avds::make_phase_transition_config(rc)), rc.source_text);
  avds::fail(avds::ErrorCode::InvalidArgument,
             "unknown command '" + command + "' (expected experiment, diagnose or phase-transition)");
}

}  // namespace

extern "C" {

const char* avds_last_error(void) { return g_last_error.c_str(); }

const char* avds_status_name(avds_status status) {
  if (status == AVDS_OK) return "ok";
  if (status == AVDS_ERR_INTERNAL) return "internal";
  if (status >= AVDS_ERR_INVALID_ARGUMENT && status <= AVDS_ERR_PARSE)
    return avds::error_class_name(static_cast<avds::ErrorCode>(status));
  return "unknown";
}

const char* avds_version(void) { return "0.1.0"; }

void avds_string_free(char* s) { std::free(s); }

avds_status avds_operator_create(const char* spec, avds_operator** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = new avds_operator{avds::Operator(avds::parse_operator_spec(spec))};
  });
}

void avds_operator_destroy(avds_operator* op) { delete op; }

avds_status avds_operator_size(const avds_operator* op, size_t* size) {
  return guarded([&] {
    need(op, "op");
    need(size, "size");
    *size = op->op.size();
  });
}

avds_status avds_operator_side(const avds_operator* op, size_t* side) {
  return guarded([&] {
    need(op, "op");
    need(side, "side");
    *side = op->op.spec().side;
  });
}

avds_status avds_operator_apply(const avds_operator* op, int adjoint, const avds_complex* in,
                                avds_complex* out, size_t n) {
  return guarded([&] {
    need(op, "op");
    need(in, "in");
    need(out, "out");
    need_len(n, op->op.size(), "input");
    copy_out(op->op.apply(adjoint ? avds::Direction::Adjoint : avds::Direction::Forward,
                          cspan(in, n)),
             out);
  });
}

avds_status avds_operator_row(const avds_operator* op, size_t k, avds_complex* out, size_t n) {
  return guarded([&] {
    need(op, "op");
    need(out, "out");
    need_len(n, op->op.size(), "row buffer");
    avds::require(k < op->op.size(), avds::ErrorCode::OutOfRange, "row index out of range");
    copy_out(op->op.row(k), out);
  });
}

avds_status avds_operator_analyze(const avds_operator* op, const avds_complex* image,
                                  avds_complex* coeffs, size_t n) {
  return guarded([&] {
    need(op, "op");
    need(image, "image");
    need(coeffs, "coeffs");
    need_len(n, op->op.size(), "image");
    copy_out(op->op.analyze(cspan(image, n)), coeffs);
  });
}

avds_status avds_operator_synthesize(const avds_operator* op, const avds_complex* coeffs,
                                     avds_complex* image, size_t n) {
  return guarded([&] {
    need(op, "op");
    need(coeffs, "coeffs");
    need(image, "image");
    need_len(n, op->op.size(), "coefficients");
    copy_out(op->op.synthesize(cspan(coeffs, n)), image);
  });
}

avds_status avds_partition_create(const char* text, const avds_operator* op, avds_partition** out) {
  return guarded([&] {
    need(text, "text");
    need(op, "op");
    need(out, "out");
    *out = new avds_partition{
        avds::BlockPartition::parse(text, op->op.size(), op->op.spec().side)};
  });
}

void avds_partition_destroy(avds_partition* p) { delete p; }

avds_status avds_partition_count(const avds_partition* p, size_t* count) {
  return guarded([&] {
    need(p, "partition");
    need(count, "count");
    *count = p->partition.count();
  });
}

avds_status avds_partition_block(const avds_partition* p, size_t k, size_t* rows, size_t capacity,
                                 size_t* length) {
  return guarded([&] {
    need(p, "partition");
    avds::require(k < p->partition.count(), avds::ErrorCode::OutOfRange, "block index out of range");
    const auto& block = p->partition.block(k);
    if (length) *length = block.size();
    if (rows) {
      need_capacity(capacity, block.size(), "rows");
      std::copy(block.begin(), block.end(), rows);
    }
  });
}

avds_status avds_weights_estimate(const double* corpus, size_t count, size_t size, double threshold,
                                  int relative, double* weights) {
  return guarded([&] {
    need(corpus, "corpus");
    need(weights, "weights");
    std::vector<avds::RVec> vecs;
    for (std::size_t n = 0; n < count; ++n)
      vecs.emplace_back(corpus + n * size, corpus + (n + 1) * size);
    const auto w = avds::estimate_weights(
        vecs, threshold,
        relative ? avds::ThresholdMode::RelativeToMax : avds::ThresholdMode::Absolute);
    std::copy(w.values.begin(), w.values.end(), weights);
  });
}

avds_status avds_weights_estimate_dir(const char* dir, const char* spec, double threshold,
                                      int relative, avds_tensor** out) {
  return guarded([&] {
    need(dir, "dir");
    need(spec, "spec");
    need(out, "out");
    const auto corpus = avds::load_corpus(dir, avds::parse_operator_spec(spec));
    auto w = avds::estimate_weights(
        corpus, threshold,
        relative ? avds::ThresholdMode::RelativeToMax : avds::ThresholdMode::Absolute);
    *out = new avds_tensor{avds::Tensor::from_real(std::move(w.values))};
  });
}

avds_status avds_weights_normalize(const double* weights, size_t n, double target, double* out) {
  return guarded([&] {
    need(weights, "weights");
    need(out, "out");
    const auto w = avds::normalize_weights(std::span<const double>(weights, n), target);
    std::copy(w.values.begin(), w.values.end(), out);
  });
}

avds_status avds_flip(const double* in, double* out, size_t n) {
  return guarded([&] {
    need(in, "in");
    need(out, "out");
    const auto f = avds::flip(std::span<const double>(in, n));
    std::copy(f.begin(), f.end(), out);
  });
}

avds_status avds_flip_complex(const avds_complex* in, avds_complex* out, size_t n) {
  return guarded([&] {
    need(in, "in");
    need(out, "out");
    copy_out(avds::flip(cspan(in, n)), out);
  });
}

avds_status avds_support_model_create(const double* weights, size_t n, size_t support_size,
                                      avds_support_model** out) {
  return guarded([&] {
    need(weights, "weights");
    need(out, "out");
    auto w = avds::WeightVector::from_values(avds::RVec(weights, weights + n));
    *out = support_size == 0 ? new avds_support_model{avds::SupportDistribution(std::move(w))}
                             : new avds_support_model{
                                   avds::SupportDistribution(std::move(w), support_size)};
  });
}

void avds_support_model_destroy(avds_support_model* model) { delete model; }

avds_status avds_support_model_size(const avds_support_model* model, size_t* support_size) {
  return guarded([&] {
    need(model, "model");
    need(support_size, "support_size");
    *support_size = model->model.support_size();
  });
}

avds_status avds_support_log_normalizer(const avds_support_model* model, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->model.log_normalizer();
  });
}

avds_status avds_support_prob(const avds_support_model* model, const size_t* support, size_t s,
                              double* prob) {
  return guarded([&] {
    need(model, "model");
    need(prob, "prob");
    avds::require(support != nullptr || s == 0, avds::ErrorCode::InvalidArgument, "support is NULL");
    *prob = model->model.probability(std::span<const std::size_t>(support, s));
  });
}

avds_status avds_support_sample(const avds_support_model* model, avds_sampling_method method,
                                uint64_t seed, size_t* support, size_t capacity) {
  return guarded([&] {
    need(model, "model");
    need(support, "support");
    need_capacity(capacity, model->model.support_size(), "support");
    const auto m = method == AVDS_SAMPLING_REJECTION ? avds::SamplingMethod::Rejection
                                                     : avds::SamplingMethod::ExactSequential;
    const auto drawn = model->model.sample(m, seed);
    std::copy(drawn.begin(), drawn.end(), support);
  });
}

avds_status avds_density(const avds_operator* op, const avds_partition* partition,
                         avds_density_kind kind, const double* weights, size_t weights_len,
                         double polynomial_exponent, double* pi, size_t capacity) {
  return guarded([&] {
    need(op, "op");
    need(pi, "pi");
    const auto part = partition ? partition->partition
                                : avds::BlockPartition::singletons(op->op.size());
    need_capacity(capacity, part.count(), "pi");
    avds::WeightVector w;
    if (weights) {
      need_len(weights_len, op->op.size(), "weights");
      w = avds::WeightVector::from_values(avds::RVec(weights, weights + weights_len));
    } else {
      avds::require(kind != AVDS_DENSITY_ADAPTED, avds::ErrorCode::InvalidArgument,
                    "adapted density needs weights");
      w.values.assign(op->op.size(), 0.0);
    }
    const auto d = avds::compute_density(to_compared(kind), op->op, part, w, polynomial_exponent);
    std::copy(d.pi.begin(), d.pi.end(), pi);
  });
}

avds_status avds_density_adapted_blocks(const avds_operator* op, const avds_partition* partition,
                                        const double* weights, size_t weights_len, int method,
                                        double* pi, size_t capacity) {
  return guarded([&] {
    need(op, "op");
    need(partition, "partition");
    need(weights, "weights");
    need(pi, "pi");
    need_len(weights_len, op->op.size(), "weights");
    need_capacity(capacity, partition->partition.count(), "pi");
    const auto w = avds::WeightVector::from_values(avds::RVec(weights, weights + weights_len));
    const auto d = avds::adapted_blocks(
        op->op, partition->partition, w,
        method == 0 ? avds::BlockMethod::ClosedFormLines : avds::BlockMethod::Generic);
    std::copy(d.pi.begin(), d.pi.end(), pi);
  });
}

avds_status avds_mask_draw(const double* pi, size_t n, size_t budget, avds_mask_mode mode,
                           uint64_t seed, avds_mask** out) {
  return guarded([&] {
    need(pi, "pi");
    need(out, "out");
    const auto m = mode == AVDS_MASK_IID ? avds::MaskMode::IidWithReplacement
                                         : avds::MaskMode::DistinctUntilBudget;
    *out = new avds_mask{avds::draw_mask(std::span<const double>(pi, n), budget, m, seed)};
  });
}

avds_status avds_mask_from_indices(const size_t* indices, const size_t* multiplicities, size_t count,
                                   size_t universe, avds_mask** out) {
  return guarded([&] {
    need(out, "out");
    avds::require(indices != nullptr || count == 0, avds::ErrorCode::InvalidArgument,
                  "indices is NULL");
    std::vector<std::size_t> idx(indices, indices + count);
    std::vector<std::size_t> mult;
    if (multiplicities) mult.assign(multiplicities, multiplicities + count);
    *out = new avds_mask{avds::mask_from_indices(std::move(idx), universe, std::move(mult))};
  });
}

avds_status avds_mask_expand(const avds_mask* mask, const avds_partition* partition,
                             avds_mask** out) {
  return guarded([&] {
    need(mask, "mask");
    need(partition, "partition");
    need(out, "out");
    *out = new avds_mask{avds::expand_blocks(mask->mask, partition->partition)};
  });
}

void avds_mask_destroy(avds_mask* mask) { delete mask; }

avds_status avds_mask_count(const avds_mask* mask, size_t* count) {
  return guarded([&] {
    need(mask, "mask");
    need(count, "count");
    *count = mask->mask.count();
  });
}

avds_status avds_mask_universe(const avds_mask* mask, size_t* universe) {
  return guarded([&] {
    need(mask, "mask");
    need(universe, "universe");
    *universe = mask->mask.universe;
  });
}

avds_status avds_mask_indices(const avds_mask* mask, size_t* indices, size_t capacity) {
  return guarded([&] {
    need(mask, "mask");
    need(indices, "indices");
    need_capacity(capacity, mask->mask.count(), "indices");
    std::copy(mask->mask.indices.begin(), mask->mask.indices.end(), indices);
  });
}

avds_status avds_mask_multiplicities(const avds_mask* mask, size_t* mult, size_t capacity) {
  return guarded([&] {
    need(mask, "mask");
    need(mult, "mult");
    need_capacity(capacity, mask->mask.count(), "mult");
    const auto& m = mask->mask.multiplicities;
    for (std::size_t i = 0; i < mask->mask.count(); ++i) mult[i] = m.empty() ? 1 : m[i];
  });
}

avds_status avds_mask_atom_probabilities(const avds_mask* mask, double* probs, size_t capacity) {
  return guarded([&] {
    need(mask, "mask");
    need(probs, "probs");
    need_capacity(capacity, mask->mask.count(), "probs");
    const auto& p = mask->mask.atom_probability;
    for (std::size_t i = 0; i < mask->mask.count(); ++i) probs[i] = p.empty() ? 0.0 : p[i];
  });
}

avds_status avds_mask_measured_fraction(const avds_mask* mask, double* fraction) {
  return guarded([&] {
    need(mask, "mask");
    need(fraction, "fraction");
    *fraction = mask->mask.measured_fraction;
  });
}

void avds_solver_params_default(avds_solver_params* params) {
  if (!params) return;
  const avds::SolverParams d;
  params->continuation_steps = d.continuation_steps;
  params->mu_final_relative = d.mu_final_relative;
  params->tolerance = d.tolerance;
  params->max_inner_iterations = d.max_inner_iterations;
}

avds_status avds_measure(const avds_operator* op, const avds_mask* mask, const avds_complex* x,
                         size_t n, avds_complex* y, size_t m) {
  return guarded([&] {
    need(op, "op");
    need(mask, "mask");
    need(x, "x");
    need(y, "y");
    const avds::MeasurementOp a(op->op, mask->mask);
    need_len(n, a.cols(), "x");
    need_len(m, a.rows(), "y");
    copy_out(avds::measure(cspan(x, n), a), y);
  });
}

avds_status avds_solve_bp(const avds_operator* op, const avds_mask* mask, const avds_complex* y,
                          size_t m, const avds_solver_params* params, avds_complex* x, size_t n,
                          avds_solve_info* info) {
  return guarded([&] {
    need(op, "op");
    need(mask, "mask");
    need(y, "y");
    need(x, "x");
    const avds::MeasurementOp a(op->op, mask->mask);
    need_len(n, a.cols(), "x");
    avds::SolverParams p;
    if (params) {
      p.continuation_steps = params->continuation_steps;
      p.mu_final_relative = params->mu_final_relative;
      p.tolerance = params->tolerance;
      p.max_inner_iterations = params->max_inner_iterations;
    }
    const avds::SolveResult r = avds::solve_bp(cspan(y, m), a, p);
    copy_out(r.x, x);
    if (info) {
      info->converged = r.converged ? 1 : 0;
      info->iterations = r.iterations;
      info->relative_residual = r.relative_residual;
    }
  });
}

avds_status avds_check_fuchs(const avds_operator* op, const avds_mask* mask, const size_t* support,
                             const avds_complex* signs, size_t s, double* value) {
  return guarded([&] {
    need(op, "op");
    need(mask, "mask");
    need(support, "support");
    need(signs, "signs");
    need(value, "value");
    *value = avds::check_fuchs(op->op, mask->mask, std::span<const std::size_t>(support, s),
                               cspan(signs, s));
  });
}

avds_status avds_psnr(const avds_complex* ref, const avds_complex* rec, size_t n, double peak,
                      double* out) {
  return guarded([&] {
    need(ref, "ref");
    need(rec, "rec");
    need(out, "out");
    *out = avds::psnr(cspan(ref, n), cspan(rec, n), peak);
  });
}

avds_status avds_run_json(const char* config_json, const char* base_dir, const char* command,
                          char** report_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(command, "command");
    need(report_json, "report_json");
    const auto rc = avds::parse_run_config(config_json, base_dir ? base_dir : ".");
    *report_json = dup_string(run_config(rc, command));
  });
}

avds_status avds_run_file(const char* config_path, const char* command, char** report_json) {
  return guarded([&] {
    need(config_path, "config_path");
    need(command, "command");
    const auto rc = avds::read_run_config(config_path);
    const std::string text = run_config(rc, command);
    if (!rc.report_path.empty()) avds::write_text_atomic(rc.report_path, text);
    if (report_json) *report_json = dup_string(text);
  });
}

avds_status avds_tensor_create_real(const double* data, size_t numel, const uint64_t* dims,
                                    size_t ndim, avds_tensor** out) {
  return guarded([&] {
    need(out, "out");
    avds::require(data != nullptr || numel == 0, avds::ErrorCode::InvalidArgument, "data is NULL");
    *out = new avds_tensor{
        avds::Tensor::from_real(avds::RVec(data, data + numel), dims_of(dims, ndim))};
  });
}

avds_status avds_tensor_create_complex(const avds_complex* data, size_t numel, const uint64_t* dims,
                                       size_t ndim, avds_tensor** out) {
  return guarded([&] {
    need(out, "out");
    avds::require(data != nullptr || numel == 0, avds::ErrorCode::InvalidArgument, "data is NULL");
    const auto s = cspan(data, numel);
    *out = new avds_tensor{
        avds::Tensor::from_complex(avds::CVec(s.begin(), s.end()), dims_of(dims, ndim))};
  });
}

void avds_tensor_destroy(avds_tensor* t) { delete t; }

avds_status avds_tensor_read(const char* path, avds_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new avds_tensor{avds::read_tensor(path)};
  });
}

avds_status avds_tensor_write(const char* path, const avds_tensor* t) {
  return guarded([&] {
    need(path, "path");
    need(t, "tensor");
    avds::write_tensor(path, t->tensor);
  });
}

avds_status avds_tensor_dtype(const avds_tensor* t, avds_dtype* dtype) {
  return guarded([&] {
    need(t, "tensor");
    need(dtype, "dtype");
    *dtype = static_cast<avds_dtype>(t->tensor.dtype);
  });
}

avds_status avds_tensor_ndim(const avds_tensor* t, size_t* ndim) {
  return guarded([&] {
    need(t, "tensor");
    need(ndim, "ndim");
    *ndim = t->tensor.dims.size();
  });
}

avds_status avds_tensor_dims(const avds_tensor* t, uint64_t* dims, size_t capacity) {
  return guarded([&] {
    need(t, "tensor");
    need(dims, "dims");
    need_capacity(capacity, t->tensor.dims.size(), "dims");
    std::copy(t->tensor.dims.begin(), t->tensor.dims.end(), dims);
  });
}

avds_status avds_tensor_numel(const avds_tensor* t, size_t* numel) {
  return guarded([&] {
    need(t, "tensor");
    need(numel, "numel");
    *numel = t->tensor.numel();
  });
}

avds_status avds_tensor_real_data(const avds_tensor* t, const double** data) {
  return guarded([&] {
    need(t, "tensor");
    need(data, "data");
    *data = t->tensor.as_real().data();
  });
}

avds_status avds_tensor_complex_data(const avds_tensor* t, const avds_complex** data) {
  return guarded([&] {
    need(t, "tensor");
    need(data, "data");
    avds::require(t->tensor.dtype == avds::DType::Complex128, avds::ErrorCode::InvalidArgument,
                  "expected a complex tensor");
    *data = reinterpret_cast<const avds_complex*>(t->tensor.complex.data());
  });
}

avds_status avds_tensor_flip(const avds_tensor* in, avds_tensor** out) {
  return guarded([&] {
    need(in, "tensor");
    need(out, "out");
    avds::Tensor t = in->tensor;
    std::reverse(t.real.begin(), t.real.end());
    std::reverse(t.complex.begin(), t.complex.end());
    *out = new avds_tensor{std::move(t)};
  });
}

avds_status avds_pgm_read(const char* path, avds_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const avds::Image img = avds::read_pgm(path);
    *out = new avds_tensor{avds::Tensor::from_real(img.column_major(), {img.rows, img.cols})};
  });
}

avds_status avds_pgm_write(const char* path, const avds_tensor* t, int log_scale) {
  return guarded([&] {
    need(path, "path");
    need(t, "tensor");
    const auto& dims = t->tensor.dims;
    avds::require(dims.size() == 2, avds::ErrorCode::DimensionMismatch,
                  "PGM output needs a (rows, cols) tensor");
    const avds::RVec& v = t->tensor.as_real();
    const avds::Image img = log_scale ? avds::log_scale_image(v, dims[0], dims[1])
                                      : avds::linear_scale_image(v, dims[0], dims[1]);
    avds::write_pgm(path, img);
  });
}

}  // extern "C"
