#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "melseq/ad/tensor.hpp"
#include "melseq/data/vocab.hpp"
#include "melseq/dsp/audio.hpp"

namespace melseq::data {

struct Utterance {
    std::string id;
    std::string text;           // normalized
    std::vector<int> char_ids;  // ends with eos
    ad::Mat mel;                // n_mels x T, in [0,1]
    ad::Mat linear;             // n_bins x T, normalized like mel
    int frames() const { return mel.cols; }
};

// One padded training batch with reduction-factor-aligned targets.
// Step-grouped views are precomputed: step s covers frames [s*r, (s+1)*r).
struct Batch {
    int size = 0;    // B
    int n_max = 0;   // padded char length
    int t_max = 0;   // padded frame count, divisible by r
    int r = 5;
    int steps = 0;   // t_max / r

    std::vector<std::vector<int>> char_ids;  // B rows, each n_max long, 0-padded
    std::vector<int> char_lengths;
    std::vector<int> frame_lengths;
    std::vector<int> step_counts;  // ceil(T_i / r)

    std::vector<ad::Mat> mel_targets;     // per item, n_mels x t_max, zero-padded
    std::vector<ad::Mat> linear_targets;  // per item, n_bins x t_max

    // step-grouped forms used directly by the decoder loop:
    std::vector<ad::Mat> mel_groups;       // per step, (n_mels*r) x B
    std::vector<ad::Mat> mel_group_mask;   // 1 where the frame is real
    std::vector<ad::Mat> lin_groups;       // per step, (n_bins*r) x B
    std::vector<ad::Mat> lin_group_mask;
    std::vector<ad::Mat> stop_targets;     // per step, 1 x B (1 at last real step onward)
    std::vector<ad::Mat> stop_mask;        // per step, 1 x B (1 while step < step_count)
};

// Pipe-delimited `id|raw|normalized` rows; returns (id, normalized text).
// Malformed lines are skipped with a warning count; missing file throws.
std::vector<std::pair<std::string, std::string>> load_metadata(const std::string& corpus_dir);

Batch make_batch(const std::vector<const Utterance*>& utts, int r = 5);

struct LoadOptions {
    std::string cache_dir;  // empty: <corpus_dir>/cache
    int max_utts = 0;       // 0 = all; otherwise the K shortest by audio length
    bool verbose = false;
};

// LJSpeech layout: <dir>/metadata.csv + <dir>/wavs/<id>.wav. Features are
// cached to MSPC files keyed by a content hash of the WAV plus the DSP
// config hash.
std::vector<Utterance> load_corpus(const std::string& corpus_dir, const dsp::DspConfig& cfg,
                                   const CharVocab& vocab, const LoadOptions& opt = {});

}  // namespace melseq::data
