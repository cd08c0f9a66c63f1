#pragma once

#include <string>
#include <vector>

#include "melseq/data/vocab.hpp"
#include "melseq/dsp/audio.hpp"
#include "melseq/model/decoder.hpp"
#include "melseq/model/encoder.hpp"
#include "melseq/train/checkpoint.hpp"

namespace melseq::infer {

struct SynthOptions {
    bool forced_incremental = true;  // repair off-diagonal attention jumps
    bool strict_band = false;
    int max_steps = 200;  // decode steps; * r gives the frame cap
    std::uint64_t seed = 0;
    int griffin_lim_iters = 60;
    bool render_audio = true;  // Griffin-Lim is the slow part; tests skip it
};

struct SynthesisResult {
    ad::Mat mel;        // n_mels x (steps * r), normalized units
    ad::Mat linear;     // n_bins x (steps * r), normalized units
    ad::Mat alignment;  // N x steps, columns sum to 1
    int stop_step = -1;  // decode step where stop fired; -1 when capped
    bool hit_max = false;
    std::vector<double> waveform;  // empty unless render_audio
};

// Read-only model handle rebuilt from a checkpoint; safe to share across
// threads for concurrent synthesis.
class Synthesizer {
public:
    explicit Synthesizer(const train::Checkpoint& ckpt, dsp::DspConfig dsp = {});

    SynthesisResult synthesize(const std::string& text, const SynthOptions& opt = {}) const;

    const model::ModelConfig& model_config() const { return mcfg_; }
    const data::CharVocab& vocab() const { return vocab_; }

private:
    model::ModelConfig mcfg_;
    dsp::DspConfig dsp_;
    data::CharVocab vocab_;
    model::ParamSet params_;
    model::EncoderParams enc_;
    model::DecoderParams dec_;
};

struct BatchSynthItem {
    std::string text;
    bool ok = false;
    SynthesisResult result;
    std::string error;  // set when !ok
};

// Sequential synthesize over texts; per-item failures are collected, not
// fail-fast. Each item draws from its own (seed, text)-derived RNG stream,
// so results match the equivalent single calls element-wise.
std::vector<BatchSynthItem> batch_synthesize(const Synthesizer& synth,
                                             const std::vector<std::string>& texts,
                                             const SynthOptions& opt = {});

}  // namespace melseq::infer
