#include "melseq/dsp/mspc.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace melseq::dsp {

namespace {
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace

void mspc_write(const std::string& path, const ad::Mat& m) {
    std::vector<unsigned char> out;
    out.reserve(16 + m.size() * 4);
    out.insert(out.end(), {'M', 'S', 'P', 'C'});
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double d : m.v) {
        float f = static_cast<float>(d);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("mspc: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("mspc: write failed: " + path);
}

ad::Mat mspc_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("mspc: cannot open: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 16 || std::memcmp(buf.data(), "MSPC", 4) != 0)
        throw std::runtime_error("mspc: bad magic in " + path);
    std::uint32_t version = get_u32(buf.data() + 4);
    if (version != kVersion)
        throw std::runtime_error("mspc: unsupported version " + std::to_string(version) + " in " +
                                 path);
    std::uint32_t rows = get_u32(buf.data() + 8);
    std::uint32_t cols = get_u32(buf.data() + 12);
    std::size_t need = 16 + static_cast<std::size_t>(rows) * cols * 4;
    if (buf.size() != need) throw std::runtime_error("mspc: truncated file " + path);
    ad::Mat m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::uint32_t u = get_u32(buf.data() + 16 + 4 * i);
        float fl;
        std::memcpy(&fl, &u, 4);
        m.v[i] = static_cast<double>(fl);
    }
    return m;
}

}  // namespace melseq::dsp
