#include <cstdlib>
#include <cstring>

#include "kernels_internal.hpp"

namespace molexplain::kernels {
namespace {

const KernelTable kScalar{Backend::Scalar,        detail::dot_scalar,         detail::axpy_scalar,
                          detail::gemm_nt_scalar, detail::gemm_nn_acc_scalar, detail::gemm_tn_acc_scalar};

#if defined(MOLEXPLAIN_HAVE_AVX2)
const KernelTable kAvx2{Backend::Avx2,        detail::dot_avx2,         detail::axpy_avx2,
                        detail::gemm_nt_avx2, detail::gemm_nn_acc_avx2, detail::gemm_tn_acc_avx2};
#endif

const KernelTable* select_default() {
  const char* env = std::getenv("MOLEXPLAIN_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
  if (const KernelTable* t = avx2_table()) return t;
  return &kScalar;
}

const KernelTable*& current() {
  static const KernelTable* table = select_default();
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

bool avx2_available() {
#if defined(MOLEXPLAIN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

const KernelTable* avx2_table() {
#if defined(MOLEXPLAIN_HAVE_AVX2)
  if (avx2_available()) return &kAvx2;
#endif
  return nullptr;
}

const KernelTable& active() { return *current(); }

Backend set_backend(Backend requested) {
  if (requested == Backend::Avx2 && avx2_table() != nullptr) {
    current() = avx2_table();
  } else {
    current() = &kScalar;
  }
  return current()->backend;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace molexplain::kernels
