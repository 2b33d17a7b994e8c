#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "avds/avds.h"

namespace fs = std::filesystem;

namespace {

struct OperatorHandle {
  avds_operator* p = nullptr;
  ~OperatorHandle() { avds_operator_destroy(p); }
};

struct MaskHandle {
  avds_mask* p = nullptr;
  ~MaskHandle() { avds_mask_destroy(p); }
};

struct TensorHandle {
  avds_tensor* p = nullptr;
  ~TensorHandle() { avds_tensor_destroy(p); }
};

}  // namespace

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(avds_status_name(AVDS_OK), "ok");
  EXPECT_STREQ(avds_status_name(AVDS_ERR_DIMENSION_MISMATCH), "dimension_mismatch");
  EXPECT_STREQ(avds_status_name(AVDS_ERR_PARSE), "parse");
  EXPECT_GT(std::strlen(avds_version()), 0u);
}

TEST(CApi, ErrorsAreReportedThroughStatusAndMessage) {
  OperatorHandle op;
  EXPECT_EQ(avds_operator_create("dft2d/haar2d/12", &op.p), AVDS_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(op.p, nullptr);
  EXPECT_GT(std::strlen(avds_last_error()), 0u);
  EXPECT_EQ(avds_operator_create("nonsense", &op.p), AVDS_ERR_PARSE);
  EXPECT_EQ(avds_operator_create(nullptr, &op.p), AVDS_ERR_INVALID_ARGUMENT);

  ASSERT_EQ(avds_operator_create("dft2d/haar2d/8", &op.p), AVDS_OK);
  EXPECT_STREQ(avds_last_error(), "");
  std::vector<avds_complex> in(64), out(64);
  EXPECT_EQ(avds_operator_apply(op.p, 0, in.data(), out.data(), 63), AVDS_ERR_DIMENSION_MISMATCH);
  EXPECT_EQ(avds_operator_apply(nullptr, 0, in.data(), out.data(), 64), AVDS_ERR_INVALID_ARGUMENT);
  avds_operator_destroy(nullptr);
}

TEST(CApi, OperatorIsUnitary) {
  OperatorHandle op;
  ASSERT_EQ(avds_operator_create("hadamard2d/db4-2d/16", &op.p), AVDS_OK);
  size_t k = 0, side = 0;
  ASSERT_EQ(avds_operator_size(op.p, &k), AVDS_OK);
  ASSERT_EQ(avds_operator_side(op.p, &side), AVDS_OK);
  EXPECT_EQ(k, 256u);
  EXPECT_EQ(side, 16u);
  std::vector<avds_complex> x(k), y(k), z(k);
  for (size_t i = 0; i < k; ++i) x[i] = {std::sin(1.0 + i), std::cos(3.0 * i)};
  ASSERT_EQ(avds_operator_apply(op.p, 0, x.data(), y.data(), k), AVDS_OK);
  ASSERT_EQ(avds_operator_apply(op.p, 1, y.data(), z.data(), k), AVDS_OK);
  double err = 0.0;
  for (size_t i = 0; i < k; ++i) err = std::max(err, std::hypot(z[i].re - x[i].re, z[i].im - x[i].im));
  EXPECT_LE(err, 1e-12);
}

TEST(CApi, PipelineRecoversSparseSignal) {
  OperatorHandle op;
  ASSERT_EQ(avds_operator_create("dft1d/identity/64", &op.p), AVDS_OK);
  std::vector<double> w(64, 2.0 / 64), pi(64);
  ASSERT_EQ(avds_density(op.p, nullptr, AVDS_DENSITY_ADAPTED, w.data(), 64, 0.0, pi.data(), 64),
            AVDS_OK);
  for (double p : pi) EXPECT_NEAR(p, 1.0 / 64, 1e-12);
  MaskHandle mask;
  ASSERT_EQ(avds_mask_draw(pi.data(), 64, 40, AVDS_MASK_DISTINCT, 3, &mask.p), AVDS_OK);
  size_t m = 0;
  ASSERT_EQ(avds_mask_count(mask.p, &m), AVDS_OK);
  EXPECT_EQ(m, 40u);
  std::vector<avds_complex> x(64), y(m), xh(64);
  x[5] = {1.0, 0.0};
  x[40] = {-2.0, 0.0};
  ASSERT_EQ(avds_measure(op.p, mask.p, x.data(), 64, y.data(), m), AVDS_OK);
  avds_solve_info info{};
  ASSERT_EQ(avds_solve_bp(op.p, mask.p, y.data(), m, nullptr, xh.data(), 64, &info), AVDS_OK);
  double psnr = 0.0;
  ASSERT_EQ(avds_psnr(x.data(), xh.data(), 64, 0.0, &psnr), AVDS_OK);
  EXPECT_GT(psnr, 80.0);
  EXPECT_EQ(avds_solve_bp(op.p, mask.p, y.data(), m - 1, nullptr, xh.data(), 64, nullptr),
            AVDS_ERR_DIMENSION_MISMATCH);
}

TEST(CApi, InfeasibleMaskBudget) {
  const double pi[] = {0.5, 0.5, 0.0};
  MaskHandle mask;
  EXPECT_EQ(avds_mask_draw(pi, 3, 3, AVDS_MASK_DISTINCT, 1, &mask.p), AVDS_ERR_INFEASIBLE);
  EXPECT_EQ(mask.p, nullptr);
}

TEST(CApi, SupportModelMatchesSmallExample) {
  const double w[] = {0.2, 0.5, 0.8};
  avds_support_model* model = nullptr;
  ASSERT_EQ(avds_support_model_create(w, 3, 0, &model), AVDS_OK);
  size_t s = 0;
  ASSERT_EQ(avds_support_model_size(model, &s), AVDS_OK);
  EXPECT_EQ(s, 2u);
  double total = 0.0;
  for (size_t a = 0; a < 3; ++a)
    for (size_t b = a + 1; b < 3; ++b) {
      const size_t sup[] = {a, b};
      double p = 0.0;
      ASSERT_EQ(avds_support_prob(model, sup, 2, &p), AVDS_OK);
      total += p;
    }
  EXPECT_NEAR(total, 1.0, 1e-12);
  size_t out[2];
  EXPECT_EQ(avds_support_sample(model, AVDS_SAMPLING_EXACT_SEQUENTIAL, 4, out, 2), AVDS_OK);
  EXPECT_LT(out[0], out[1]);
  EXPECT_EQ(avds_support_sample(model, AVDS_SAMPLING_REJECTION, 4, out, 1),
            AVDS_ERR_DIMENSION_MISMATCH);
  avds_support_model_destroy(model);
}

TEST(CApi, TensorFilesAndFlip) {
  const fs::path p = fs::temp_directory_path() / "avds_capi_tensor.avds";
  const double data[] = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const uint64_t dims[] = {2, 3};
  TensorHandle t, back, flipped;
  ASSERT_EQ(avds_tensor_create_real(data, 6, dims, 2, &t.p), AVDS_OK);
  ASSERT_EQ(avds_tensor_write(p.c_str(), t.p), AVDS_OK);
  ASSERT_EQ(avds_tensor_read(p.c_str(), &back.p), AVDS_OK);
  uint64_t got[2];
  ASSERT_EQ(avds_tensor_dims(back.p, got, 2), AVDS_OK);
  EXPECT_EQ(got[0], 2u);
  EXPECT_EQ(got[1], 3u);
  const double* payload = nullptr;
  ASSERT_EQ(avds_tensor_real_data(back.p, &payload), AVDS_OK);
  EXPECT_EQ(std::memcmp(payload, data, sizeof data), 0);
  const avds_complex* cdata = nullptr;
  EXPECT_EQ(avds_tensor_complex_data(back.p, &cdata), AVDS_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(avds_tensor_flip(back.p, &flipped.p), AVDS_OK);
  ASSERT_EQ(avds_tensor_real_data(flipped.p, &payload), AVDS_OK);
  EXPECT_EQ(payload[0], 6.0);
  EXPECT_EQ(payload[5], 1.0);
  EXPECT_EQ(avds_tensor_create_real(data, 5, dims, 2, &t.p), AVDS_ERR_DIMENSION_MISMATCH);
  fs::remove(p);

  TensorHandle missing;
  EXPECT_EQ(avds_tensor_read("/nonexistent/x.avds", &missing.p), AVDS_ERR_IO);
}

TEST(CApi, RunJson) {
  char* report = nullptr;
  const char* cfg =
      R"({"spec": "hadamard2d/haar2d/8", "weights": {"source": "uniform", "sparsity": 2},
          "fraction": 0.5, "trials": 2, "seed": 3})";
  ASSERT_EQ(avds_run_json(cfg, ".", "experiment", &report), AVDS_OK);
  const std::string text(report);
  avds_string_free(report);
  EXPECT_NE(text.find("\"schema_version\""), std::string::npos);
  char* again = nullptr;
  ASSERT_EQ(avds_run_json(cfg, ".", "experiment", &again), AVDS_OK);
  EXPECT_EQ(text, again);
  avds_string_free(again);
  EXPECT_EQ(avds_run_json(R"({"spec": "hadamard2d/haar2d/8", "bogus": 1})", ".", "experiment",
                          &report),
            AVDS_ERR_PARSE);
  EXPECT_EQ(avds_run_json(cfg, ".", "dance", &report), AVDS_ERR_INVALID_ARGUMENT);
}
