// AVX2/FMA variants of the dense kernels. Built with -mavx2 -mfma; only
// referenced through the runtime dispatcher, which checks cpuid first.

#include "melseq/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define MELSEQ_X86 1
#include <immintrin.h>
#else
#define MELSEQ_X86 0
#endif

namespace melseq::kern {

#if MELSEQ_X86

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void gemm_avx2(int m, int n, int k, double alpha, const double* A, int lda,
               bool transA, const double* B, int ldb, bool transB,
               double beta, double* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        double* c = C + static_cast<std::size_t>(i) * ldc;
        if (beta == 0.0) {
            for (int j = 0; j < n; ++j) c[j] = 0.0;
        } else if (beta != 1.0) {
            for (int j = 0; j < n; ++j) c[j] *= beta;
        }
    }
    if (!transB) {
        // broadcast-FMA over rows of B; contiguous streaming along n
        for (int i = 0; i < m; ++i) {
            double* c = C + static_cast<std::size_t>(i) * ldc;
            for (int p = 0; p < k; ++p) {
                double a = transA ? A[static_cast<std::size_t>(p) * lda + i]
                                  : A[static_cast<std::size_t>(i) * lda + p];
                a *= alpha;
                if (a == 0.0) continue;
                const double* b = B + static_cast<std::size_t>(p) * ldb;
                __m256d av = _mm256_set1_pd(a);
                int j = 0;
                for (; j + 4 <= n; j += 4) {
                    __m256d cv = _mm256_loadu_pd(c + j);
                    cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
                    _mm256_storeu_pd(c + j, cv);
                }
                for (; j < n; ++j) c[j] += a * b[j];
            }
        }
    } else if (!transA) {
        // dot products along contiguous rows of A and B
        for (int i = 0; i < m; ++i) {
            const double* a = A + static_cast<std::size_t>(i) * lda;
            double* c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < n; ++j) {
                const double* b = B + static_cast<std::size_t>(j) * ldb;
                __m256d acc = _mm256_setzero_pd();
                int p = 0;
                for (; p + 4 <= k; p += 4)
                    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc);
                double s = hsum(acc);
                for (; p < k; ++p) s += a[p] * b[p];
                c[j] += alpha * s;
            }
        }
    } else {
        // TT is rare; strided scalar fallback
        for (int i = 0; i < m; ++i) {
            double* c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int p = 0; p < k; ++p)
                    s += A[static_cast<std::size_t>(p) * lda + i] *
                         B[static_cast<std::size_t>(j) * ldb + p];
                c[j] += alpha * s;
            }
        }
    }
}

void vadd_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}
void vsub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}
void vmul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}
void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}
void vscale_avx2(double a, double* x, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}
double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels k{gemm_avx2, vadd_avx2, vsub_avx2, vmul_avx2,
                           axpy_avx2, vscale_avx2, dot_avx2, sum_avx2, "avx2"};
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &k;
    return nullptr;
}

#else

const Kernels* avx2_kernels() { return nullptr; }

#endif

}  // namespace melseq::kern
