#pragma once

#include <string>

#include "melseq/ad/tensor.hpp"

namespace melseq::eval {

// Binary PGM (P5), pixel = round(255 * a[i,j] / max(a)). Rows map to image
// rows (characters vertical, decode steps horizontal); an all-zero matrix
// renders black. Monotone: a larger weight never maps to a darker pixel.
void write_pgm(const std::string& path, const ad::Mat& a);

// Raw pixel values without the file I/O; exposed for tests.
std::vector<unsigned char> pgm_pixels(const ad::Mat& a);

}  // namespace melseq::eval
