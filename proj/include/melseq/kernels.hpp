#pragma once

#include <cstddef>

// Low-level dense kernels backing the autodiff engine. A scalar reference
// implementation always exists; an AVX2/FMA variant is selected at runtime
// when the CPU supports it. All kernels operate on row-major doubles.

namespace melseq::kern {

struct Kernels {
    // C = alpha * op(A) * op(B) + beta * C, row-major.
    // A is m x k after op, B is k x n after op, C is m x n.
    // lda/ldb are the leading dimensions of the *stored* matrices.
    void (*gemm)(int m, int n, int k, double alpha, const double* A, int lda,
                 bool transA, const double* B, int ldb, bool transB,
                 double beta, double* C, int ldc);
    void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
    void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
    void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*vscale)(double a, double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    const char* name;
};

const Kernels& scalar_kernels();
// nullptr when the CPU lacks AVX2/FMA.
const Kernels* avx2_kernels();

// Active kernel set (AVX2 when available unless forced off).
const Kernels& active();
void force_scalar(bool on);

}  // namespace melseq::kern
