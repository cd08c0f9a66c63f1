#pragma once

#include <cstdint>
#include <string>

namespace melseq::data {

// Writes an LJSpeech-layout corpus (metadata.csv + wavs/) of synthetic
// utterances. Each character maps to a fixed tone so the text-to-audio
// alignment is monotonic and learnable at desk scale.
void generate_synthetic_corpus(const std::string& dir, int count, std::uint64_t seed,
                               int sample_rate = 22050);

}  // namespace melseq::data
