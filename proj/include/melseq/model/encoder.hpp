#pragma once

#include <span>
#include <vector>

#include "melseq/ad/ops.hpp"
#include "melseq/model/config.hpp"
#include "melseq/model/params.hpp"

namespace melseq::model {

struct EncoderParams {
    ad::Var embedding;  // vocab x d
    ad::GruParams fwd, bwd;
    ad::Var key_w, key_b;  // d x 2d, d x 1
    ad::Var val_w, val_b;

    static EncoderParams create(ParamSet& ps, const ModelConfig& cfg);
};

// Per-item key/value matrices; column count equals the item's real length.
struct EncoderOutput {
    std::vector<ad::Var> K;  // d x N_i
    std::vector<ad::Var> V;
    std::vector<int> lengths;
    int items() const { return static_cast<int>(K.size()); }
};

// Per-position concatenated (forward, backward) hidden states of the
// bidirectional GRU, each 2d x B. Exposed for the direction-symmetry check.
std::vector<ad::Var> bi_gru_states(ad::Tape& t, const std::vector<std::vector<int>>& char_ids,
                                   const std::vector<int>& lengths, const EncoderParams& p,
                                   const ModelConfig& cfg);

EncoderOutput encode_batch(ad::Tape& t, const std::vector<std::vector<int>>& char_ids,
                           const std::vector<int>& lengths, const EncoderParams& p,
                           const ModelConfig& cfg);

EncoderOutput encode(ad::Tape& t, std::span<const int> char_ids, const EncoderParams& p,
                     const ModelConfig& cfg);

}  // namespace melseq::model
