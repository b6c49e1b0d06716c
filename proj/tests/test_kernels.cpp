#include <doctest.h>

#include <vector>

#include "gner/kernels.hpp"
#include "gner/rng.hpp"

using namespace gner;

namespace {

struct BackendGuard {
  kernels::Backend saved = kernels::active_backend();
  ~BackendGuard() { kernels::set_backend(saved); }
};

}  // namespace

TEST_CASE("scalar dot and axpy basics") {
  std::vector<double> a = {1.0, 2.0, 3.0};
  std::vector<double> b = {4.0, -5.0, 6.0};
  CHECK(kernels::dot_scalar(a.data(), b.data(), 3) == doctest::Approx(12.0));
  kernels::axpy_scalar(2.0, a.data(), b.data(), 3);
  CHECK(b[0] == doctest::Approx(6.0));
  CHECK(b[1] == doctest::Approx(-1.0));
  CHECK(b[2] == doctest::Approx(12.0));
  CHECK(kernels::dot_scalar(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("SIMD backends agree with the scalar reference") {
  BackendGuard guard;
  Rng rng(20240811);
  for (kernels::Backend backend :
       {kernels::Backend::avx2, kernels::Backend::neon}) {
    if (!kernels::backend_available(backend)) continue;
    REQUIRE(kernels::set_backend(backend));
    // Lengths around the vector width, including tails and empty input.
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 25, 100, 353}) {
      std::vector<double> a(n), b(n), y_simd(n), y_ref(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.uniform(-2.0, 2.0);
        b[i] = rng.uniform(-2.0, 2.0);
        y_simd[i] = y_ref[i] = rng.uniform(-2.0, 2.0);
      }
      double d_simd = kernels::dot(a.data(), b.data(), n);
      double d_ref = kernels::dot_scalar(a.data(), b.data(), n);
      CHECK(d_simd == doctest::Approx(d_ref).epsilon(1e-12));

      kernels::axpy(0.37, a.data(), y_simd.data(), n);
      kernels::axpy_scalar(0.37, a.data(), y_ref.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(y_simd[i] == doctest::Approx(y_ref[i]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("backend selection is sticky and reports its name") {
  BackendGuard guard;
  REQUIRE(kernels::set_backend(kernels::Backend::scalar));
  CHECK(kernels::active_backend() == kernels::Backend::scalar);
  CHECK(std::string(kernels::backend_name(kernels::active_backend())) == "scalar");
}
