#include "melseq/train/checkpoint.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace melseq::train {

using ad::Mat;

const Mat& Checkpoint::tensor(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return tensors[i];
    throw std::out_of_range("checkpoint: no tensor named " + name);
}

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xffffffffu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xff] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

namespace {

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64s(std::string& out, const std::vector<ad::real>& v) {
    static_assert(sizeof(ad::real) == 8);
    std::size_t off = out.size();
    out.resize(off + v.size() * 8);
    std::memcpy(out.data() + off, v.data(), v.size() * 8);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return x;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i)
            x |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return x;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    std::vector<ad::real> f64s(std::size_t n) {
        need(n * 8);
        std::vector<ad::real> v(n);
        std::memcpy(v.data(), buf.data() + pos, n * 8);
        pos += n * 8;
        return v;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    if (ckpt.names.size() != ckpt.tensors.size() || ckpt.names.size() != ckpt.adam_m.size() ||
        ckpt.names.size() != ckpt.adam_v.size())
        throw std::invalid_argument("checkpoint: tensor/moment table size mismatch");

    std::string buf;
    buf += "MSQK";
    put_u32(buf, Checkpoint::kVersion);
    put_u32(buf, static_cast<std::uint32_t>(ckpt.config_text.size()));
    buf += ckpt.config_text;
    put_u64(buf, ckpt.seed);
    put_u64(buf, ckpt.epoch);
    put_u64(buf, ckpt.step);
    put_u64(buf, ckpt.adam_t);
    put_u64(buf, ckpt.adam_skipped);
    put_u32(buf, static_cast<std::uint32_t>(ckpt.names.size()));
    for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
        const Mat& m = ckpt.tensors[i];
        if (ckpt.adam_m[i].size() != m.size() || ckpt.adam_v[i].size() != m.size())
            throw std::invalid_argument("checkpoint: moment shape mismatch for " + ckpt.names[i]);
        put_u32(buf, static_cast<std::uint32_t>(ckpt.names[i].size()));
        buf += ckpt.names[i];
        put_u32(buf, static_cast<std::uint32_t>(m.rows));
        put_u32(buf, static_cast<std::uint32_t>(m.cols));
        put_f64s(buf, m.v);
        put_f64s(buf, ckpt.adam_m[i].v);
        put_f64s(buf, ckpt.adam_v[i].v);
    }
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw std::runtime_error("checkpoint: short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("checkpoint: cannot rename " + tmp + " to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 || buf.compare(0, 4, "MSQK") != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4 + i]))
                  << (8 * i);
    if (crc32(buf.data(), buf.size() - 4) != stored)
        throw std::runtime_error("checkpoint: checksum mismatch in " + path);

    Reader r{buf, 4};
    std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.config_text = r.str();
    ckpt.seed = r.u64();
    ckpt.epoch = r.u64();
    ckpt.step = r.u64();
    ckpt.adam_t = r.u64();
    ckpt.adam_skipped = r.u64();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        int rows = static_cast<int>(r.u32());
        int cols = static_cast<int>(r.u32());
        std::size_t count = static_cast<std::size_t>(rows) * cols;
        ckpt.names.push_back(std::move(name));
        ckpt.tensors.emplace_back(rows, cols, r.f64s(count));
        ckpt.adam_m.emplace_back(rows, cols, r.f64s(count));
        ckpt.adam_v.emplace_back(rows, cols, r.f64s(count));
    }
    return ckpt;
}

}  // namespace melseq::train
