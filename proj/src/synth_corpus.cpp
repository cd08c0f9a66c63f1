#include "melseq/data/synth_corpus.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "melseq/dsp/wav.hpp"
#include "melseq/rng.hpp"

namespace melseq::data {

namespace {

// small inventory keeps the mapping easy to learn
constexpr const char* kWords[] = {"sun",  "moon", "rain", "hill", "bird", "song",
                                  "calm", "wind", "leaf", "star", "pond", "dusk"};

double char_freq(char c) {
    // one semitone-ish step per letter, spanning roughly 220-1760 Hz
    int idx = c - 'a';
    return 220.0 * std::pow(2.0, idx / 12.0);
}

}  // namespace

void generate_synthetic_corpus(const std::string& dir, int count, std::uint64_t seed,
                               int sample_rate) {
    namespace fs = std::filesystem;
    fs::create_directories(dir + "/wavs");
    std::ofstream meta(dir + "/metadata.csv");
    if (!meta) throw std::runtime_error("generate_synthetic_corpus: cannot write metadata in " + dir);

    Rng rng(seed);
    const int seg = 1024;  // samples per character (4 hops at the default framing)
    const int n_words = static_cast<int>(std::size(kWords));

    for (int n = 0; n < count; ++n) {
        int words = 2 + static_cast<int>(rng.below(3));
        std::string text;
        for (int w = 0; w < words; ++w) {
            if (w) text.push_back(' ');
            text += kWords[rng.below(n_words)];
        }

        dsp::Waveform wav;
        wav.sample_rate = sample_rate;
        wav.samples.reserve(text.size() * seg + 2 * seg);
        double phase = 0.0;
        for (char c : text) {
            if (c == ' ') {
                wav.samples.insert(wav.samples.end(), seg, 0.0);
                phase = 0.0;
                continue;
            }
            double f = char_freq(c);
            for (int i = 0; i < seg; ++i) {
                double env = std::min({1.0, i / 128.0, (seg - 1 - i) / 128.0});
                phase += 2.0 * std::numbers::pi * f / sample_rate;
                // fundamental plus one harmonic for some spectral spread
                wav.samples.push_back(env * (0.45 * std::sin(phase) + 0.15 * std::sin(2 * phase)));
            }
        }
        wav.samples.insert(wav.samples.end(), seg / 2, 0.0);  // trailing silence

        char id[32];
        std::snprintf(id, sizeof(id), "SYN-%05d", n);
        dsp::wav_write(dir + "/wavs/" + id + ".wav", wav);
        meta << id << "|" << text << "|" << text << "\n";
    }
}

}  // namespace melseq::data
