// Reference kernels. Summation order is plain left-to-right so results are
// reproducible and easy to reason about in tests.

#include "kernels_internal.hpp"

namespace molexplain::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = dot_scalar(ai, b + j * k, k);
  }
}

void gemm_nn_acc_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      if (ai[p] != 0.0) axpy_scalar(ai[p], b + p * n, ci, n);
    }
  }
}

void gemm_tn_acc_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      if (ap[i] != 0.0) axpy_scalar(ap[i], bp, c + i * n, n);
    }
  }
}

}  // namespace molexplain::kernels::detail
