#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "melseq/ad/tensor.hpp"

namespace melseq::train {

// Little-endian flat binary, magic "MSQK", CRC32 trailer. Tensors are
// name-indexed; Adam moments ride along with each tensor so resuming
// training reproduces the uninterrupted run bit for bit.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::string config_text;  // `key = value` snapshot
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;
    std::uint64_t adam_t = 0;
    std::uint64_t adam_skipped = 0;

    std::vector<std::string> names;
    std::vector<ad::Mat> tensors;
    std::vector<ad::Mat> adam_m;
    std::vector<ad::Mat> adam_v;

    const ad::Mat& tensor(const std::string& name) const;
};

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

// Writes to a temp file in the same directory, then renames into place.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws on bad magic, version mismatch, or checksum failure; never
// returns a partially filled checkpoint.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace melseq::train
