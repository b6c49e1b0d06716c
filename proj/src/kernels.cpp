#include "gner/kernels.hpp"

namespace gner::kernels {

DotFn dot = dot_scalar;
AxpyFn axpy = axpy_scalar;

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

#if defined(GNER_HAVE_AVX2_TU)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
#endif
#if defined(GNER_HAVE_NEON_TU)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
#endif

namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(GNER_HAVE_AVX2_TU) && defined(__GNUC__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(GNER_HAVE_NEON_TU)
      return true;  // NEON is baseline on aarch64.
#else
      return false;
#endif
  }
  return false;
}

Backend g_backend = Backend::scalar;

void apply(Backend b) {
  switch (b) {
    case Backend::scalar:
      dot = dot_scalar;
      axpy = axpy_scalar;
      break;
#if defined(GNER_HAVE_AVX2_TU)
    case Backend::avx2:
      dot = dot_avx2;
      axpy = axpy_avx2;
      break;
#endif
#if defined(GNER_HAVE_NEON_TU)
    case Backend::neon:
      dot = dot_neon;
      axpy = axpy_neon;
      break;
#endif
    default:
      dot = dot_scalar;
      axpy = axpy_scalar;
      b = Backend::scalar;
      break;
  }
  g_backend = b;
}

Backend pick_default() {
  if (cpu_supports(Backend::avx2)) return Backend::avx2;
  if (cpu_supports(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

// dot/axpy above have constant initializers, so re-pointing them here is
// safe regardless of TU initialization order.
struct Init {
  Init() { apply(pick_default()); }
} g_init;

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "?";
}

bool backend_available(Backend b) { return cpu_supports(b); }

bool set_backend(Backend b) {
  if (!cpu_supports(b)) return false;
  apply(b);
  return true;
}

}  // namespace gner::kernels
