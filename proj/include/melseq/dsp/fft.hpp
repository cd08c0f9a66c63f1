#pragma once

#include <complex>
#include <vector>

namespace melseq::dsp {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace melseq::dsp
