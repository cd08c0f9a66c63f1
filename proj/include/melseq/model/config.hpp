#pragma once

namespace melseq::model {

struct ModelConfig {
    int d = 256;        // shared hidden dimension
    int r = 5;          // mel frames per decode step
    int n_mels = 80;
    int n_bins = 513;
    int vocab_size = 50;
    double prenet_dropout = 0.5;
    // Ablation: feed both decoder RNNs the previous query vector instead of
    // the attention context (which then feeds nothing).
    bool query_feedback = false;

    int mel_group() const { return n_mels * r; }
    int lin_group() const { return n_bins * r; }
};

}  // namespace melseq::model
