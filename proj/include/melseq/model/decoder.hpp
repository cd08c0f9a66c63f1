#pragma once

#include <vector>

#include "melseq/ad/ops.hpp"
#include "melseq/data/corpus.hpp"
#include "melseq/model/config.hpp"
#include "melseq/model/encoder.hpp"

namespace melseq::model {

struct DecoderParams {
    ad::Var prenet_w1, prenet_b1;  // d x (n_mels*r)
    ad::Var prenet_w2, prenet_b2;  // d x d
    ad::GruParams att_rnn;         // input: [prenet_out; context], 2d
    ad::GruParams dec_rnn;         // input: [context; ah], 2d
    ad::Var query_w, query_b;      // d x 2d
    ad::Var mel_w, mel_b;          // mel_group x d
    ad::Var post_w1, post_b1;      // d x d
    ad::Var post_w2, post_b2;      // mel_group x d, tanh head
    ad::Var lin_w, lin_b;          // lin_group x d
    ad::Var stop_w, stop_b;        // 1 x d

    static DecoderParams create(ParamSet& ps, const ModelConfig& cfg);
};

// Batched recurrent state: columns are batch items.
struct DecoderState {
    ad::Var ah, dh;       // d x B
    ad::Var context;      // d x B
    ad::Var prev_query;   // d x B, consumed only under query_feedback
    std::vector<int> n_prev;  // last attended char position per item
    int step = 0;
};

DecoderState init_decoder_state(ad::Tape& t, const ModelConfig& cfg, int batch = 1);

// Two dense layers with ReLU; dropout stays active at inference too.
ad::Var prenet(ad::Tape& t, const ad::Var& mel_group, const DecoderParams& p,
               const ModelConfig& cfg, Rng& rng);

struct StepOut {
    ad::Var mel;         // mel_group x B (projection + residual postnet)
    ad::Var linear;      // lin_group x B
    ad::Var stop_logit;  // 1 x B
    std::vector<ad::Var> weights;  // per item, N_i x 1
};

// One autoregressive step. With force_attn the attention column is replaced
// by a one-hot at n_prev+1 whenever the argmax leaves the allowed band, and
// the context is recomputed from the repaired column.
StepOut decode_step(ad::Tape& t, DecoderState& st, const ad::Var& prev_group,
                    const EncoderOutput& enc, const DecoderParams& p, const ModelConfig& cfg,
                    Rng& rng, bool force_attn = false, bool strict_band = false);

struct SequenceOut {
    std::vector<ad::Var> mel;         // per step, mel_group x B
    std::vector<ad::Var> linear;      // per step, lin_group x B
    std::vector<ad::Var> stop_logits; // per step, 1 x B
    std::vector<ad::Var> alignment;   // per item, N_i x step_count_i (real steps only)
};

// At each step, each item independently feeds either the ground-truth
// previous group (probability tf_ratio) or its own previous prediction.
// Step 0 always starts from the zero "go" group.
SequenceOut decode_sequence_teacher_forced(ad::Tape& t, const data::Batch& batch,
                                           const EncoderOutput& enc, const DecoderParams& p,
                                           const ModelConfig& cfg, double tf_ratio, Rng& rng);

}  // namespace melseq::model
