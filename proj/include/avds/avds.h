#ifndef AVDS_AVDS_H
#define AVDS_AVDS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AVDS_API __declspec(dllexport)
#else
#define AVDS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avds_status {
  AVDS_OK = 0,
  AVDS_ERR_INVALID_ARGUMENT = 1,
  AVDS_ERR_DIMENSION_MISMATCH = 2,
  AVDS_ERR_OUT_OF_RANGE = 3,
  AVDS_ERR_INFEASIBLE = 4,
  AVDS_ERR_SINGULAR = 5,
  AVDS_ERR_CONVERGENCE = 6,
  AVDS_ERR_UNSUPPORTED = 7,
  AVDS_ERR_IO = 8,
  AVDS_ERR_PARSE = 9,
  AVDS_ERR_INTERNAL = 100
} avds_status;

/* Message of the last failure on the calling thread; empty after success. */
AVDS_API const char* avds_last_error(void);
/* snake_case class name, e.g. "dimension_mismatch". */
AVDS_API const char* avds_status_name(avds_status status);
AVDS_API const char* avds_version(void);

/* Layout-compatible with double[2] and std::complex<double>. */
typedef struct avds_complex {
  double re;
  double im;
} avds_complex;

typedef struct avds_operator avds_operator;
typedef struct avds_partition avds_partition;
typedef struct avds_support_model avds_support_model;
typedef struct avds_mask avds_mask;
typedef struct avds_tensor avds_tensor;

/* Strings returned by the library are released with avds_string_free. */
AVDS_API void avds_string_free(char* s);

/* ---- operators: A0 = Phi Psi*, spec "meas/sparsity/side[/levels]" ---- */

AVDS_API avds_status avds_operator_create(const char* spec, avds_operator** out);
AVDS_API void avds_operator_destroy(avds_operator* op);
AVDS_API avds_status avds_operator_size(const avds_operator* op, size_t* size);
AVDS_API avds_status avds_operator_side(const avds_operator* op, size_t* side);
/* out = A0 in (adjoint = 0) or A0* in (adjoint != 0); both of length n = K. */
AVDS_API avds_status avds_operator_apply(const avds_operator* op, int adjoint,
                                         const avds_complex* in, avds_complex* out, size_t n);
AVDS_API avds_status avds_operator_row(const avds_operator* op, size_t k, avds_complex* out,
                                       size_t n);
/* Psi (image -> coefficients) and Psi* (coefficients -> image). */
AVDS_API avds_status avds_operator_analyze(const avds_operator* op, const avds_complex* image,
                                           avds_complex* coeffs, size_t n);
AVDS_API avds_status avds_operator_synthesize(const avds_operator* op, const avds_complex* coeffs,
                                              avds_complex* image, size_t n);

/* ---- block partitions: "singletons" | "lines-v" | "lines-h" | "squares:N" ---- */

AVDS_API avds_status avds_partition_create(const char* text, const avds_operator* op,
                                           avds_partition** out);
AVDS_API void avds_partition_destroy(avds_partition* p);
AVDS_API avds_status avds_partition_count(const avds_partition* p, size_t* count);
AVDS_API avds_status avds_partition_block(const avds_partition* p, size_t k, size_t* rows,
                                          size_t capacity, size_t* length);

/* ---- weights ---- */

/* corpus: `count` vectors of length `size`, stored one after another. */
AVDS_API avds_status avds_weights_estimate(const double* corpus, size_t count, size_t size,
                                           double threshold, int relative, double* weights);
/* Reads *.pgm / *.avds files in `dir` and analyses them with the sparsity
   basis of `spec` before estimating. Result is a real tensor of length K. */
AVDS_API avds_status avds_weights_estimate_dir(const char* dir, const char* spec,
                                               double threshold, int relative,
                                               avds_tensor** out);
AVDS_API avds_status avds_weights_normalize(const double* weights, size_t n, double target,
                                            double* out);
AVDS_API avds_status avds_flip(const double* in, double* out, size_t n);
AVDS_API avds_status avds_flip_complex(const avds_complex* in, avds_complex* out, size_t n);

/* ---- rejective support model ---- */

typedef enum avds_sampling_method {
  AVDS_SAMPLING_REJECTION = 0,
  AVDS_SAMPLING_EXACT_SEQUENTIAL = 1
} avds_sampling_method;

/* support_size = 0 selects round(sum of weights). */
AVDS_API avds_status avds_support_model_create(const double* weights, size_t n,
                                               size_t support_size, avds_support_model** out);
AVDS_API void avds_support_model_destroy(avds_support_model* model);
AVDS_API avds_status avds_support_model_size(const avds_support_model* model,
                                             size_t* support_size);
AVDS_API avds_status avds_support_log_normalizer(const avds_support_model* model, double* out);
AVDS_API avds_status avds_support_prob(const avds_support_model* model, const size_t* support,
                                       size_t s, double* prob);
/* Writes the sorted support (support_size entries) into `support`. */
AVDS_API avds_status avds_support_sample(const avds_support_model* model,
                                         avds_sampling_method method, uint64_t seed,
                                         size_t* support, size_t capacity);

/* ---- sampling densities ---- */

typedef enum avds_density_kind {
  AVDS_DENSITY_ADAPTED = 0,
  AVDS_DENSITY_UNIFORM = 1,
  AVDS_DENSITY_COHERENCE = 2,
  AVDS_DENSITY_POLYNOMIAL = 3
} avds_density_kind;

/* pi over the blocks of `partition` (NULL: singletons). `weights` may be
   NULL except for the adapted kind. Adapted blocks use the closed form for
   line partitions of separable operators. */
AVDS_API avds_status avds_density(const avds_operator* op, const avds_partition* partition,
                                  avds_density_kind kind, const double* weights,
                                  size_t weights_len, double polynomial_exponent, double* pi,
                                  size_t capacity);
/* Adapted block density with an explicit method: 0 closed form (lines), 1 generic. */
AVDS_API avds_status avds_density_adapted_blocks(const avds_operator* op,
                                                 const avds_partition* partition,
                                                 const double* weights, size_t weights_len,
                                                 int method, double* pi, size_t capacity);

/* ---- masks ---- */

typedef enum avds_mask_mode {
  AVDS_MASK_IID = 0,
  AVDS_MASK_DISTINCT = 1
} avds_mask_mode;

AVDS_API avds_status avds_mask_draw(const double* pi, size_t n, size_t budget,
                                    avds_mask_mode mode, uint64_t seed, avds_mask** out);
AVDS_API avds_status avds_mask_from_indices(const size_t* indices, const size_t* multiplicities,
                                            size_t count, size_t universe, avds_mask** out);
/* Block mask -> row mask. */
AVDS_API avds_status avds_mask_expand(const avds_mask* mask, const avds_partition* partition,
                                      avds_mask** out);
AVDS_API void avds_mask_destroy(avds_mask* mask);
AVDS_API avds_status avds_mask_count(const avds_mask* mask, size_t* count);
AVDS_API avds_status avds_mask_universe(const avds_mask* mask, size_t* universe);
AVDS_API avds_status avds_mask_indices(const avds_mask* mask, size_t* indices, size_t capacity);
AVDS_API avds_status avds_mask_multiplicities(const avds_mask* mask, size_t* mult,
                                              size_t capacity);
AVDS_API avds_status avds_mask_atom_probabilities(const avds_mask* mask, double* probs,
                                                  size_t capacity);
AVDS_API avds_status avds_mask_measured_fraction(const avds_mask* mask, double* fraction);

/* ---- reconstruction ---- */

typedef struct avds_solver_params {
  int continuation_steps;
  double mu_final_relative;
  double tolerance;
  int max_inner_iterations;
} avds_solver_params;

typedef struct avds_solve_info {
  int converged;
  int iterations;
  double relative_residual;
} avds_solve_info;

AVDS_API void avds_solver_params_default(avds_solver_params* params);

/* y = rows of A0 x selected by the mask (m = mask count). */
AVDS_API avds_status avds_measure(const avds_operator* op, const avds_mask* mask,
                                  const avds_complex* x, size_t n, avds_complex* y, size_t m);
/* params and info may be NULL. */
AVDS_API avds_status avds_solve_bp(const avds_operator* op, const avds_mask* mask,
                                   const avds_complex* y, size_t m,
                                   const avds_solver_params* params, avds_complex* x, size_t n,
                                   avds_solve_info* info);
AVDS_API avds_status avds_check_fuchs(const avds_operator* op, const avds_mask* mask,
                                      const size_t* support, const avds_complex* signs, size_t s,
                                      double* value);

/* ---- experiments ---- */

/* peak <= 0 selects max|ref|; an exact match gives +inf. */
AVDS_API avds_status avds_psnr(const avds_complex* ref, const avds_complex* rec, size_t n,
                               double peak, double* out);
/* command: "experiment" | "diagnose" | "phase-transition". Relative paths
   in the document resolve against base_dir. Returns the report JSON. */
AVDS_API avds_status avds_run_json(const char* config_json, const char* base_dir,
                                   const char* command, char** report_json);
/* As avds_run_json on a file; also writes the report and figures named in
   its "report" section. */
AVDS_API avds_status avds_run_file(const char* config_path, const char* command,
                                   char** report_json);

/* ---- files ---- */

typedef enum avds_dtype { AVDS_REAL64 = 0, AVDS_COMPLEX128 = 1 } avds_dtype;

/* dims may be NULL for a vector of length numel. */
AVDS_API avds_status avds_tensor_create_real(const double* data, size_t numel,
                                             const uint64_t* dims, size_t ndim, avds_tensor** out);
AVDS_API avds_status avds_tensor_create_complex(const avds_complex* data, size_t numel,
                                                const uint64_t* dims, size_t ndim,
                                                avds_tensor** out);
AVDS_API void avds_tensor_destroy(avds_tensor* t);
AVDS_API avds_status avds_tensor_read(const char* path, avds_tensor** out);
AVDS_API avds_status avds_tensor_write(const char* path, const avds_tensor* t);
AVDS_API avds_status avds_tensor_dtype(const avds_tensor* t, avds_dtype* dtype);
AVDS_API avds_status avds_tensor_ndim(const avds_tensor* t, size_t* ndim);
AVDS_API avds_status avds_tensor_dims(const avds_tensor* t, uint64_t* dims, size_t capacity);
AVDS_API avds_status avds_tensor_numel(const avds_tensor* t, size_t* numel);
/* Borrowed pointers valid until the tensor is destroyed. */
AVDS_API avds_status avds_tensor_real_data(const avds_tensor* t, const double** data);
AVDS_API avds_status avds_tensor_complex_data(const avds_tensor* t, const avds_complex** data);
/* Reverses the payload order, keeping dtype and dims. */
AVDS_API avds_status avds_tensor_flip(const avds_tensor* in, avds_tensor** out);

/* PGM image as a real (rows, cols) column-major tensor scaled to [0,1]. */
AVDS_API avds_status avds_pgm_read(const char* path, avds_tensor** out);
/* Real (rows, cols) tensor; log_scale != 0 writes log10 over 6 decades,
   otherwise min-max scaling. */
AVDS_API avds_status avds_pgm_write(const char* path, const avds_tensor* t, int log_scale);

#ifdef __cplusplus
}
#endif

#endif
