#include "melseq/model/encoder.hpp"

#include <stdexcept>

namespace melseq::model {

using namespace melseq::ad;

EncoderParams EncoderParams::create(ParamSet& ps, const ModelConfig& cfg) {
    const int d = cfg.d;
    EncoderParams p;
    p.embedding = ps.add("encoder.embedding", cfg.vocab_size, d);
    auto gru = [&ps, d](const std::string& prefix, int d_in) {
        GruParams g;
        g.w_zr = ps.add(prefix + ".w_zr", 2 * d, d_in + d);
        g.b_zr = ps.add(prefix + ".b_zr", 2 * d, 1, ParamSet::Init::bias);
        g.w_h = ps.add(prefix + ".w_h", d, d_in + d);
        g.b_h = ps.add(prefix + ".b_h", d, 1, ParamSet::Init::bias);
        return g;
    };
    p.fwd = gru("encoder.gru_fwd", d);
    p.bwd = gru("encoder.gru_bwd", d);
    p.key_w = ps.add("encoder.key_proj.w", d, 2 * d);
    p.key_b = ps.add("encoder.key_proj.b", d, 1, ParamSet::Init::bias);
    p.val_w = ps.add("encoder.value_proj.w", d, 2 * d);
    p.val_b = ps.add("encoder.value_proj.b", d, 1, ParamSet::Init::bias);
    return p;
}

namespace {

// mask-carried GRU scan: padded steps keep the previous hidden state, so an
// item's states over its real length do not depend on the batch padding
std::vector<Var> masked_gru_scan(Tape& t, const std::vector<Var>& xs,
                                 const std::vector<Mat>& keep_new, const GruParams& cell,
                                 int d, int B) {
    std::vector<Var> hs;
    hs.reserve(xs.size());
    Var h = make_const(Mat(d, B));
    for (std::size_t s = 0; s < xs.size(); ++s) {
        Var h_new = gru_cell(t, xs[s], h, cell);
        const Mat& m = keep_new[s];
        Mat inv(m.rows, m.cols);
        for (std::size_t i = 0; i < m.size(); ++i) inv.v[i] = 1.0 - m.v[i];
        h = add(t, mul_const(t, h_new, m), mul_const(t, h, inv));
        hs.push_back(h);
    }
    return hs;
}

}  // namespace

std::vector<Var> bi_gru_states(Tape& t, const std::vector<std::vector<int>>& char_ids,
                               const std::vector<int>& lengths, const EncoderParams& p,
                               const ModelConfig& cfg) {
    const int B = static_cast<int>(char_ids.size());
    if (B == 0) throw std::invalid_argument("encode: empty batch");
    const int n_max = static_cast<int>(char_ids[0].size());
    for (const auto& row : char_ids)
        if (static_cast<int>(row.size()) != n_max)
            throw std::invalid_argument("encode: ragged char_ids rows");
    for (int i = 0; i < B; ++i)
        if (lengths[i] < 1 || lengths[i] > n_max)
            throw std::invalid_argument("encode: bad length " + std::to_string(lengths[i]));

    std::vector<Var> embedded(n_max);
    std::vector<Mat> valid(n_max, Mat(cfg.d, B));
    std::vector<int> ids_col(B);
    for (int s = 0; s < n_max; ++s) {
        for (int i = 0; i < B; ++i) ids_col[i] = char_ids[i][s];
        embedded[s] = embedding_cols(t, p.embedding, ids_col);
        for (int i = 0; i < B; ++i)
            if (s < lengths[i])
                for (int k = 0; k < cfg.d; ++k) valid[s].at(k, i) = 1.0;
    }

    std::vector<Var> fwd = masked_gru_scan(t, embedded, valid, p.fwd, cfg.d, B);

    std::vector<Var> rev_x(embedded.rbegin(), embedded.rend());
    std::vector<Mat> rev_m(valid.rbegin(), valid.rend());
    std::vector<Var> bwd_rev = masked_gru_scan(t, rev_x, rev_m, p.bwd, cfg.d, B);

    std::vector<Var> out(n_max);
    for (int s = 0; s < n_max; ++s)
        out[s] = concat_rows(t, fwd[s], bwd_rev[n_max - 1 - s]);
    return out;
}

EncoderOutput encode_batch(Tape& t, const std::vector<std::vector<int>>& char_ids,
                           const std::vector<int>& lengths, const EncoderParams& p,
                           const ModelConfig& cfg) {
    auto states = bi_gru_states(t, char_ids, lengths, p, cfg);
    const int B = static_cast<int>(char_ids.size());
    const int n_max = static_cast<int>(states.size());

    std::vector<Var> k_cols(n_max), v_cols(n_max);
    for (int s = 0; s < n_max; ++s) {
        k_cols[s] = affine(t, p.key_w, states[s], p.key_b);
        v_cols[s] = affine(t, p.val_w, states[s], p.val_b);
    }

    EncoderOutput out;
    out.lengths = lengths;
    for (int i = 0; i < B; ++i) {
        std::vector<Var> ks, vs;
        ks.reserve(lengths[i]);
        vs.reserve(lengths[i]);
        for (int s = 0; s < lengths[i]; ++s) {
            ks.push_back(col(t, k_cols[s], i));
            vs.push_back(col(t, v_cols[s], i));
        }
        out.K.push_back(concat_cols(t, ks));
        out.V.push_back(concat_cols(t, vs));
    }
    return out;
}

EncoderOutput encode(Tape& t, std::span<const int> char_ids, const EncoderParams& p,
                     const ModelConfig& cfg) {
    if (char_ids.empty()) throw std::invalid_argument("encode: empty input sequence");
    std::vector<std::vector<int>> rows{std::vector<int>(char_ids.begin(), char_ids.end())};
    return encode_batch(t, rows, {static_cast<int>(char_ids.size())}, p, cfg);
}

}  // namespace melseq::model
