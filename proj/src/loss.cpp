#include "melseq/train/loss.hpp"

#include <numeric>
#include <stdexcept>

#include "melseq/model/attention.hpp"

namespace melseq::train {

using namespace melseq::ad;

namespace {

double mask_count(const std::vector<Mat>& masks) {
    double n = 0.0;
    for (const Mat& m : masks) n = std::accumulate(m.v.begin(), m.v.end(), n);
    return n;
}

}  // namespace

LossBreakdown total_loss(Tape& t, const model::SequenceOut& out, const data::Batch& batch,
                         double lambda, double g, double stop_pos_weight) {
    if (static_cast<int>(out.mel.size()) != batch.steps)
        throw std::invalid_argument("total_loss: step count mismatch");

    Var mel_sum, lin_sum, stop_sum;
    for (int s = 0; s < batch.steps; ++s) {
        Var m = masked_sq_err_sum(t, out.mel[s], batch.mel_groups[s], batch.mel_group_mask[s]);
        Var l = masked_sq_err_sum(t, out.linear[s], batch.lin_groups[s], batch.lin_group_mask[s]);
        Var b = bce_logits_sum(t, out.stop_logits[s], batch.stop_targets[s], batch.stop_mask[s],
                               stop_pos_weight);
        mel_sum = s == 0 ? m : add(t, mel_sum, m);
        lin_sum = s == 0 ? l : add(t, lin_sum, l);
        stop_sum = s == 0 ? b : add(t, stop_sum, b);
    }
    Var mel_mse = scale(t, mel_sum, 1.0 / mask_count(batch.mel_group_mask));
    Var lin_mse = scale(t, lin_sum, 1.0 / mask_count(batch.lin_group_mask));
    Var stop_bce = scale(t, stop_sum, 1.0 / mask_count(batch.stop_mask));

    Var attn;
    for (int i = 0; i < batch.size; ++i) {
        const Var& a = out.alignment[i];
        Mat w = model::guided_mask(a->rows, a->cols, g);
        Var li = model::guided_attention_loss(t, a, w);
        attn = i == 0 ? li : add(t, attn, li);
    }
    attn = scale(t, attn, 1.0 / batch.size);

    LossBreakdown lb;
    lb.mel = mel_mse->scalar();
    lb.lin = lin_mse->scalar();
    lb.stop = stop_bce->scalar();
    lb.attn = attn->scalar();
    lb.total = add(t, add(t, mel_mse, lin_mse), add(t, stop_bce, scale(t, attn, lambda)));
    return lb;
}

double teacher_forcing_ratio(int epoch, double tf_start, double tf_end, int anneal_epochs) {
    if (epoch < 0) throw std::invalid_argument("teacher_forcing_ratio: negative epoch");
    if (anneal_epochs <= 0) return tf_end;
    double r = tf_start - (tf_start - tf_end) * static_cast<double>(epoch) / anneal_epochs;
    return std::max(tf_end, r);
}

}  // namespace melseq::train
