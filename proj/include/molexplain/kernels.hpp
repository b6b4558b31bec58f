#pragma once
// Dense linear-algebra kernels behind the network code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active table is picked once at first use from the
// CPU feature bits; MOLEXPLAIN_KERNELS=scalar in the environment forces the
// reference path. All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>

namespace molexplain::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // C(m x n) = A(m x k) * B(n x k)^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c);
  // C(m x n) += A(k x m)^T * B(k x n)
  void (*gemm_tn_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c);
};

const KernelTable& scalar_table();
// Null when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

bool avx2_available();

// The table used by the library. Selected on first call.
const KernelTable& active();

// Overrides the selection (tests and benchmarks). Requesting Avx2 on a
// machine without it falls back to Scalar; the return value says what won.
Backend set_backend(Backend requested);

std::string_view backend_name(Backend b);

}  // namespace molexplain::kernels
