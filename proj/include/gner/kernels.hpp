#pragma once

#include <cstddef>
#include <string>

namespace gner::kernels {

// The two primitives every hot loop in the trainer reduces to: an inner
// product and y += alpha * x. Scalar reference implementations plus SIMD
// variants, selected once at startup from CPU capabilities. The function
// pointers may be re-pointed with set_backend (used by the equivalence
// tests and the --kernels CLI flag).

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);

extern DotFn dot;
extern AxpyFn axpy;

enum class Backend { scalar, avx2, neon };

Backend active_backend();
const char* backend_name(Backend b);

// Returns false (leaving the selection unchanged) if the requested
// backend is not compiled in or not supported by this CPU.
bool set_backend(Backend b);
bool backend_available(Backend b);

// Reference implementations, always available.
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);

}  // namespace gner::kernels
