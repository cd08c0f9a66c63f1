#pragma once

#include <string>

#include "melseq/ad/tensor.hpp"

namespace melseq::dsp {

// Spectrogram cache file: header {magic "MSPC", version u32, rows u32,
// cols u32} followed by row-major float32, all little-endian.
void mspc_write(const std::string& path, const ad::Mat& m);
ad::Mat mspc_read(const std::string& path);

}  // namespace melseq::dsp
