#include "melseq/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace melseq::dsp {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("wav: " + path + ": " + what);
}

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
void wr_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

Waveform wav_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open file");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44) fail(path, "file too small for a RIFF header");
    if (std::memcmp(buf.data(), "RIFF", 4) != 0) fail(path, "missing RIFF tag");
    if (std::memcmp(buf.data() + 8, "WAVE", 4) != 0) fail(path, "missing WAVE tag");

    Waveform w;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const unsigned char* chunk = buf.data() + pos;
        std::uint32_t size = rd_u32(chunk + 4);
        const unsigned char* body = chunk + 8;
        if (pos + 8 + size > buf.size()) fail(path, "chunk size exceeds file length");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) fail(path, "fmt chunk truncated");
            std::uint16_t format = rd_u16(body);
            std::uint16_t channels = rd_u16(body + 2);
            std::uint32_t sr = rd_u32(body + 4);
            std::uint16_t bits = rd_u16(body + 14);
            if (format != 1) fail(path, "unsupported audio format " + std::to_string(format) +
                                            " (PCM required)");
            if (channels != 1)
                fail(path, "unsupported channel count " + std::to_string(channels) +
                               " (mono required)");
            if (bits != 16)
                fail(path, "unsupported bits per sample " + std::to_string(bits) +
                               " (16 required)");
            w.sample_rate = static_cast<int>(sr);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) fail(path, "data chunk before fmt chunk");
            const std::size_t n = size / 2;
            w.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::int16_t s = static_cast<std::int16_t>(rd_u16(body + 2 * i));
                w.samples[i] = static_cast<double>(s) / 32768.0;
            }
            return w;
        }
        pos += 8 + size + (size & 1);
    }
    fail(path, "no data chunk found");
}

void wav_write(const std::string& path, const Waveform& w) {
    std::vector<unsigned char> out;
    out.reserve(44 + w.samples.size() * 2);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    wr_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    wr_u32(out, 16);
    wr_u16(out, 1);  // PCM
    wr_u16(out, 1);  // mono
    wr_u32(out, static_cast<std::uint32_t>(w.sample_rate));
    wr_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
    wr_u16(out, 2);
    wr_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    wr_u32(out, data_bytes);
    for (double s : w.samples) {
        long q = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) fail(path, "write failed");
}

}  // namespace melseq::dsp
