#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "molexplain/kernels.hpp"
#include "molexplain/rng.hpp"

namespace {

using namespace molexplain;

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], tol * (1.0 + std::abs(a[i]))) << "index " << i;
  }
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (kernels::avx2_table() == nullptr) GTEST_SKIP() << "AVX2 kernels unavailable";
  }
  const kernels::KernelTable& s = kernels::scalar_table();
  const kernels::KernelTable& v = *kernels::avx2_table();
};

TEST_F(KernelEquivalence, DotAndAxpy) {
  Rng rng(1);
  for (std::size_t n : {0, 1, 3, 4, 7, 16, 33, 1024, 1031}) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);
    EXPECT_NEAR(s.dot(x.data(), y.data(), n), v.dot(x.data(), y.data(), n), 1e-12 * (1.0 + n));
    auto ys = y, yv = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    v.axpy(0.37, x.data(), yv.data(), n);
    expect_close(ys, yv, 1e-14);
  }
}

TEST_F(KernelEquivalence, GemmVariants) {
  Rng rng(2);
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {17, 9, 33}, {64, 40, 129}, {5, 130, 70}, {33, 1, 65}};
  for (const auto& sh : shapes) {
    const std::size_t m = sh[0], n = sh[1], k = sh[2];
    const auto a = random_vector(m * k, rng);
    const auto b = random_vector(n * k, rng);
    std::vector<double> cs(m * n), cv(m * n);
    s.gemm_nt(m, n, k, a.data(), b.data(), cs.data());
    v.gemm_nt(m, n, k, a.data(), b.data(), cv.data());
    expect_close(cs, cv, 1e-12);

    const auto bnn = random_vector(k * n, rng);
    auto c0 = random_vector(m * n, rng);
    auto c1 = c0;
    s.gemm_nn_acc(m, n, k, a.data(), bnn.data(), c0.data());
    v.gemm_nn_acc(m, n, k, a.data(), bnn.data(), c1.data());
    expect_close(c0, c1, 1e-12);

    const auto atn = random_vector(k * m, rng);
    auto d0 = random_vector(m * n, rng);
    auto d1 = d0;
    s.gemm_tn_acc(m, n, k, atn.data(), bnn.data(), d0.data());
    v.gemm_tn_acc(m, n, k, atn.data(), bnn.data(), d1.data());
    expect_close(d0, d1, 1e-12);
  }
}

TEST(KernelReference, GemmMatchesNaiveLoops) {
  Rng rng(3);
  const std::size_t m = 4, n = 3, k = 5;
  const auto a = random_vector(m * k, rng);
  const auto b = random_vector(n * k, rng);
  std::vector<double> c(m * n);
  kernels::scalar_table().gemm_nt(m, n, k, a.data(), b.data(), c.data());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double ref = 0.0;
      for (std::size_t p = 0; p < k; ++p) ref += a[i * k + p] * b[j * k + p];
      EXPECT_NEAR(c[i * n + j], ref, 1e-14);
    }
  }
}

TEST(KernelDispatch, ForcedScalarBackendIsHonoured) {
  const kernels::Backend before = kernels::active().backend;
  EXPECT_EQ(kernels::set_backend(kernels::Backend::Scalar), kernels::Backend::Scalar);
  EXPECT_EQ(kernels::active().backend, kernels::Backend::Scalar);
  kernels::set_backend(before);
  EXPECT_EQ(kernels::backend_name(kernels::Backend::Scalar), "scalar");
}

}  // namespace
