#include "melseq/eval/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace melseq::eval {

std::vector<unsigned char> pgm_pixels(const ad::Mat& a) {
    if (a.rows < 1 || a.cols < 1) throw std::invalid_argument("pgm: empty matrix");
    double mx = *std::max_element(a.v.begin(), a.v.end());
    std::vector<unsigned char> px(a.size(), 0);
    if (mx <= 0.0) return px;
    for (std::size_t i = 0; i < a.size(); ++i)
        px[i] = static_cast<unsigned char>(
            std::clamp(std::lround(255.0 * a.v[i] / mx), 0l, 255l));
    return px;
}

void write_pgm(const std::string& path, const ad::Mat& a) {
    auto px = pgm_pixels(a);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << a.cols << " " << a.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw std::runtime_error("pgm: short write to " + path);
}

}  // namespace melseq::eval
