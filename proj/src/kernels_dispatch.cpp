#include "melseq/kernels.hpp"

#include <atomic>

namespace melseq::kern {

namespace {
std::atomic<bool> g_force_scalar{false};
}

void force_scalar(bool on) { g_force_scalar.store(on); }

const Kernels& active() {
    if (g_force_scalar.load()) return scalar_kernels();
    if (const Kernels* k = avx2_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace melseq::kern
