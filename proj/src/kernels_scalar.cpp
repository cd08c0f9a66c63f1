#include "melseq/kernels.hpp"

namespace melseq::kern {
namespace {

inline const double* rowptr(const double* M, int ld, int i) { return M + static_cast<std::size_t>(i) * ld; }

void gemm_scalar(int m, int n, int k, double alpha, const double* A, int lda,
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
        // C[i,:] += alpha * a_ip * B[p,:]  (works for both A orientations)
        for (int i = 0; i < m; ++i) {
            double* c = C + static_cast<std::size_t>(i) * ldc;
            for (int p = 0; p < k; ++p) {
                double a = transA ? A[static_cast<std::size_t>(p) * lda + i]
                                  : A[static_cast<std::size_t>(i) * lda + p];
                a *= alpha;
                const double* b = rowptr(B, ldb, p);
                for (int j = 0; j < n; ++j) c[j] += a * b[j];
            }
        }
    } else {
        // B transposed: C[i,j] += alpha * dot(opA row i, B row j)
        for (int i = 0; i < m; ++i) {
            double* c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < n; ++j) {
                const double* b = rowptr(B, ldb, j);
                double acc = 0.0;
                for (int p = 0; p < k; ++p) {
                    double a = transA ? A[static_cast<std::size_t>(p) * lda + i]
                                      : A[static_cast<std::size_t>(i) * lda + p];
                    acc += a * b[p];
                }
                c[j] += alpha * acc;
            }
        }
    }
}

void vadd_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void vsub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void vmul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
void vscale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}
double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}
double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{gemm_scalar, vadd_scalar, vsub_scalar, vmul_scalar,
                           axpy_scalar, vscale_scalar, dot_scalar, sum_scalar,
                           "scalar"};
    return k;
}

}  // namespace melseq::kern
