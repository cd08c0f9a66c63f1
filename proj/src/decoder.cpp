#include "melseq/model/decoder.hpp"

#include <algorithm>
#include <stdexcept>

#include "melseq/model/attention.hpp"

namespace melseq::model {

using namespace melseq::ad;

DecoderParams DecoderParams::create(ParamSet& ps, const ModelConfig& cfg) {
    const int d = cfg.d;
    DecoderParams p;
    p.prenet_w1 = ps.add("decoder.prenet.w1", d, cfg.mel_group());
    p.prenet_b1 = ps.add("decoder.prenet.b1", d, 1, ParamSet::Init::bias);
    p.prenet_w2 = ps.add("decoder.prenet.w2", d, d);
    p.prenet_b2 = ps.add("decoder.prenet.b2", d, 1, ParamSet::Init::bias);
    auto gru = [&ps, d](const std::string& prefix, int d_in) {
        GruParams g;
        g.w_zr = ps.add(prefix + ".w_zr", 2 * d, d_in + d);
        g.b_zr = ps.add(prefix + ".b_zr", 2 * d, 1, ParamSet::Init::bias);
        g.w_h = ps.add(prefix + ".w_h", d, d_in + d);
        g.b_h = ps.add(prefix + ".b_h", d, 1, ParamSet::Init::bias);
        return g;
    };
    p.att_rnn = gru("decoder.att_rnn", 2 * d);
    p.dec_rnn = gru("decoder.dec_rnn", 2 * d);
    p.query_w = ps.add("decoder.query.w", d, 2 * d);
    p.query_b = ps.add("decoder.query.b", d, 1, ParamSet::Init::bias);
    p.mel_w = ps.add("decoder.mel_head.w", cfg.mel_group(), d);
    p.mel_b = ps.add("decoder.mel_head.b", cfg.mel_group(), 1, ParamSet::Init::bias);
    p.post_w1 = ps.add("decoder.postnet.w1", d, d);
    p.post_b1 = ps.add("decoder.postnet.b1", d, 1, ParamSet::Init::bias);
    p.post_w2 = ps.add("decoder.postnet.w2", cfg.mel_group(), d);
    p.post_b2 = ps.add("decoder.postnet.b2", cfg.mel_group(), 1, ParamSet::Init::bias);
    p.lin_w = ps.add("decoder.linear_head.w", cfg.lin_group(), d);
    p.lin_b = ps.add("decoder.linear_head.b", cfg.lin_group(), 1, ParamSet::Init::bias);
    p.stop_w = ps.add("decoder.stop_head.w", 1, d);
    p.stop_b = ps.add("decoder.stop_head.b", 1, 1, ParamSet::Init::bias);
    return p;
}

DecoderState init_decoder_state(Tape&, const ModelConfig& cfg, int batch) {
    DecoderState st;
    st.ah = make_const(Mat(cfg.d, batch));
    st.dh = make_const(Mat(cfg.d, batch));
    st.context = make_const(Mat(cfg.d, batch));
    st.prev_query = make_const(Mat(cfg.d, batch));
    st.n_prev.assign(batch, 0);
    st.step = 0;
    return st;
}

Var prenet(Tape& t, const Var& mel_group, const DecoderParams& p, const ModelConfig& cfg,
           Rng& rng) {
    Var h = relu(t, affine(t, p.prenet_w1, mel_group, p.prenet_b1));
    h = dropout(t, h, cfg.prenet_dropout, rng);
    h = relu(t, affine(t, p.prenet_w2, h, p.prenet_b2));
    return dropout(t, h, cfg.prenet_dropout, rng);
}

StepOut decode_step(Tape& t, DecoderState& st, const Var& prev_group, const EncoderOutput& enc,
                    const DecoderParams& p, const ModelConfig& cfg, Rng& rng, bool force_attn,
                    bool strict_band) {
    const int B = st.ah->cols;
    if (enc.items() != B)
        throw std::invalid_argument("decode_step: state batch " + std::to_string(B) +
                                    " vs encoder items " + std::to_string(enc.items()));

    Var pre = prenet(t, prev_group, p, cfg, rng);
    const Var& att_extra = cfg.query_feedback ? st.prev_query : st.context;
    Var ah = gru_cell(t, concat_rows(t, pre, att_extra), st.ah, p.att_rnn);

    Var q_all = affine(t, p.query_w, concat_rows(t, st.dh, ah), p.query_b);  // d x B

    StepOut out;
    std::vector<Var> contexts(B);
    for (int i = 0; i < B; ++i) {
        Var q = B == 1 ? q_all : col(t, q_all, i);
        AttendOut a = attend(t, q, enc.K[i], enc.V[i]);
        const int n = a.weights->rows;
        int n_raw = static_cast<int>(std::max_element(a.weights->v.begin(), a.weights->v.end()) -
                                     a.weights->v.begin());
        if (force_attn) {
            auto [w, n_t] = force_incremental(a.weights->v, st.n_prev[i], strict_band);
            if (n_t != n_raw) {
                Mat onehot(n, 1);
                onehot.v = w;
                Var wv = make_const(onehot);
                a.weights = wv;
                a.context = matmul(t, enc.V[i], wv);
            }
            st.n_prev[i] = n_t;
        } else {
            st.n_prev[i] = n_raw;
        }
        contexts[i] = a.context;
        out.weights.push_back(a.weights);
    }
    Var context = B == 1 ? contexts[0] : concat_cols(t, contexts);

    const Var& dec_extra = cfg.query_feedback ? st.prev_query : context;
    Var dh = gru_cell(t, concat_rows(t, dec_extra, ah), st.dh, p.dec_rnn);

    Var residual = tanh_op(t, affine(t, p.post_w2, relu(t, affine(t, p.post_w1, dh, p.post_b1)),
                                     p.post_b2));
    out.mel = add(t, affine(t, p.mel_w, dh, p.mel_b), residual);
    out.linear = affine(t, p.lin_w, dh, p.lin_b);
    out.stop_logit = affine(t, p.stop_w, dh, p.stop_b);

    st.ah = ah;
    st.dh = dh;
    st.context = context;
    st.prev_query = q_all;
    ++st.step;
    return out;
}

SequenceOut decode_sequence_teacher_forced(Tape& t, const data::Batch& batch,
                                           const EncoderOutput& enc, const DecoderParams& p,
                                           const ModelConfig& cfg, double tf_ratio, Rng& rng) {
    if (tf_ratio < 0.0 || tf_ratio > 1.0)
        throw std::invalid_argument("teacher forcing ratio must lie in [0, 1]");
    const int B = batch.size;
    const int G = cfg.mel_group();

    DecoderState st = init_decoder_state(t, cfg, B);
    SequenceOut out;
    out.mel.reserve(batch.steps);

    std::vector<std::vector<Var>> item_weights(B);
    Var prev = make_const(Mat(G, B));  // zero "go" group
    for (int s = 0; s < batch.steps; ++s) {
        if (s > 0) {
            Mat keep_model(G, B);
            Mat teacher(G, B);
            const Mat& gt = batch.mel_groups[s - 1];
            for (int i = 0; i < B; ++i) {
                bool use_teacher = rng.bernoulli(tf_ratio);
                for (int k = 0; k < G; ++k) {
                    if (use_teacher)
                        teacher.at(k, i) = gt.at(k, i);
                    else
                        keep_model.at(k, i) = 1.0;
                }
            }
            prev = add_const(t, mul_const(t, out.mel[s - 1], keep_model), teacher);
        }
        StepOut so = decode_step(t, st, prev, enc, p, cfg, rng);
        out.mel.push_back(so.mel);
        out.linear.push_back(so.linear);
        out.stop_logits.push_back(so.stop_logit);
        for (int i = 0; i < B; ++i)
            if (s < batch.step_counts[i]) item_weights[i].push_back(so.weights[i]);
    }
    for (int i = 0; i < B; ++i) out.alignment.push_back(concat_cols(t, item_weights[i]));
    return out;
}

}  // namespace melseq::model
