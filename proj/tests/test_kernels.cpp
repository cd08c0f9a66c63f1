#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "melseq/kernels.hpp"
#include "melseq/rng.hpp"

using namespace melseq;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::fabs(a[i] - b[i]);
        double s = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0});
        CHECK(d / s < tol);
    }
}

}  // namespace

TEST_CASE("gemm identity") {
    const auto& k = kern::scalar_kernels();
    // I2 * [[1,2],[3,4]] = [[1,2],[3,4]]
    std::vector<double> I{1, 0, 0, 1}, A{1, 2, 3, 4}, C(4, 0.0);
    k.gemm(2, 2, 2, 1.0, I.data(), 2, false, A.data(), 2, false, 0.0, C.data(), 2);
    CHECK(C == A);
}

TEST_CASE("simd gemm matches scalar reference on all transpose forms") {
    const kern::Kernels* simd = kern::avx2_kernels();
    if (!simd) return;  // CPU without AVX2: dispatch falls back to scalar
    const auto& ref = kern::scalar_kernels();
    Rng rng(7);
    for (int m : {1, 3, 8}) {
        for (int n : {1, 5, 13}) {
            for (int k : {1, 4, 17}) {
                for (bool ta : {false, true}) {
                    for (bool tb : {false, true}) {
                        auto A = random_vec(static_cast<std::size_t>(m) * k, rng);
                        auto B = random_vec(static_cast<std::size_t>(k) * n, rng);
                        auto C0 = random_vec(static_cast<std::size_t>(m) * n, rng);
                        auto C1 = C0;
                        int lda = ta ? m : k;
                        int ldb = tb ? k : n;
                        ref.gemm(m, n, k, 0.7, A.data(), lda, ta, B.data(), ldb, tb, 0.3,
                                 C0.data(), n);
                        simd->gemm(m, n, k, 0.7, A.data(), lda, ta, B.data(), ldb, tb, 0.3,
                                   C1.data(), n);
                        check_close(C0, C1, 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("simd elementwise kernels match scalar reference") {
    const kern::Kernels* simd = kern::avx2_kernels();
    if (!simd) return;
    const auto& ref = kern::scalar_kernels();
    Rng rng(11);
    for (std::size_t n : {1u, 4u, 7u, 33u, 1024u}) {
        auto a = random_vec(n, rng), b = random_vec(n, rng);
        std::vector<double> o0(n), o1(n);
        ref.vadd(a.data(), b.data(), o0.data(), n);
        simd->vadd(a.data(), b.data(), o1.data(), n);
        check_close(o0, o1, 1e-15);
        ref.vmul(a.data(), b.data(), o0.data(), n);
        simd->vmul(a.data(), b.data(), o1.data(), n);
        check_close(o0, o1, 1e-15);
        ref.vsub(a.data(), b.data(), o0.data(), n);
        simd->vsub(a.data(), b.data(), o1.data(), n);
        check_close(o0, o1, 1e-15);
        o0 = b;
        o1 = b;
        ref.axpy(0.37, a.data(), o0.data(), n);
        simd->axpy(0.37, a.data(), o1.data(), n);
        check_close(o0, o1, 1e-14);
        CHECK(std::fabs(ref.dot(a.data(), b.data(), n) - simd->dot(a.data(), b.data(), n)) <
              1e-12 * n);
        CHECK(std::fabs(ref.sum(a.data(), n) - simd->sum(a.data(), n)) < 1e-12 * n);
    }
}

TEST_CASE("dispatch honors force_scalar") {
    kern::force_scalar(true);
    CHECK(std::string(kern::active().name) == "scalar");
    kern::force_scalar(false);
    if (kern::avx2_kernels()) CHECK(std::string(kern::active().name) == "avx2");
}
