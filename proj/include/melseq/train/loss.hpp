#pragma once

#include "melseq/data/corpus.hpp"
#include "melseq/model/decoder.hpp"

namespace melseq::train {

// Total objective plus the per-component values for logging. Each term is
// averaged over its unmasked elements so the scales stay comparable across
// batch shapes; the guided term is averaged per item, then across the batch.
struct LossBreakdown {
    ad::Var total;
    double mel = 0.0;
    double lin = 0.0;
    double stop = 0.0;
    double attn = 0.0;  // guided term before weighting
    double value() const { return total->scalar(); }
};

LossBreakdown total_loss(ad::Tape& t, const model::SequenceOut& out, const data::Batch& batch,
                         double lambda, double g = 0.2, double stop_pos_weight = 5.0);

// Linear anneal: max(tf_end, tf_start - (tf_start - tf_end) * epoch / anneal).
double teacher_forcing_ratio(int epoch, double tf_start, double tf_end, int anneal_epochs);

}  // namespace melseq::train
