#pragma once

#include <cstddef>

#include "molexplain/kernels.hpp"

namespace molexplain::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    const double* b, double* c);
void gemm_nn_acc_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        const double* b, double* c);
void gemm_tn_acc_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        const double* b, double* c);

#if defined(MOLEXPLAIN_HAVE_AVX2)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
void gemm_nn_acc_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c);
void gemm_tn_acc_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c);
#endif

}  // namespace molexplain::kernels::detail
