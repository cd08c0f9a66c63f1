#include "melseq/infer/synthesize.hpp"

#include <cmath>
#include <stdexcept>

#include "melseq/model/attention.hpp"
#include "melseq/train/config.hpp"

namespace melseq::infer {

using namespace melseq::ad;
using namespace melseq::model;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Synthesizer::Synthesizer(const train::Checkpoint& ckpt, dsp::DspConfig dsp) : dsp_(dsp) {
    train::TrainConfig tcfg = train::parse_train_config(ckpt.config_text);
    mcfg_.d = tcfg.d;
    mcfg_.r = tcfg.r;
    const Mat& mel_w = ckpt.tensor("decoder.mel_head.w");
    const Mat& lin_w = ckpt.tensor("decoder.linear_head.w");
    const Mat& emb = ckpt.tensor("encoder.embedding");
    if (mel_w.rows % mcfg_.r != 0 || lin_w.rows % mcfg_.r != 0)
        throw std::runtime_error("checkpoint: head shapes inconsistent with r=" +
                                 std::to_string(mcfg_.r));
    mcfg_.n_mels = mel_w.rows / mcfg_.r;
    mcfg_.n_bins = lin_w.rows / mcfg_.r;
    if (emb.rows != vocab_.size())
        throw std::runtime_error("checkpoint: embedding vocab " + std::to_string(emb.rows) +
                                 " does not match this build's charset of " +
                                 std::to_string(vocab_.size()));
    mcfg_.vocab_size = emb.rows;

    enc_ = EncoderParams::create(params_, mcfg_);
    dec_ = DecoderParams::create(params_, mcfg_);
    for (const auto& [name, p] : params_.items()) {
        const Mat& m = ckpt.tensor(name);
        if (m.rows != p->rows || m.cols != p->cols)
            throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file has " +
                                     m.shape_str() + ", model expects " + p->shape_str());
        p->v = m.v;
    }
}

SynthesisResult Synthesizer::synthesize(const std::string& text, const SynthOptions& opt) const {
    std::string norm = data::normalize_text(text, vocab_);  // throws when nothing survives
    std::vector<int> ids = vocab_.encode(norm);

    Tape t;
    Rng rng = Rng::derive(opt.seed, fnv1a(norm));
    EncoderOutput enc = encode(t, ids, enc_, mcfg_);
    DecoderState st = init_decoder_state(t, mcfg_);

    SynthesisResult res;
    const int G = mcfg_.mel_group();
    std::vector<std::vector<real>> mel_cols, lin_cols, align_cols;
    Var prev = make_const(Mat(G, 1));
    for (int s = 0; s < opt.max_steps; ++s) {
        StepOut so = decode_step(t, st, prev, enc, dec_, mcfg_, rng, opt.forced_incremental,
                                 opt.strict_band);
        mel_cols.push_back(so.mel->v);
        lin_cols.push_back(so.linear->v);
        align_cols.push_back(so.weights[0]->v);
        prev = so.mel;
        double stop = 1.0 / (1.0 + std::exp(-so.stop_logit->scalar()));
        if (stop > 0.5) {
            res.stop_step = s;
            break;
        }
    }
    const int steps = static_cast<int>(mel_cols.size());
    res.hit_max = res.stop_step < 0;
    const int n = static_cast<int>(ids.size());
    const int frames = steps * mcfg_.r;
    res.mel = Mat(mcfg_.n_mels, frames);
    res.linear = Mat(mcfg_.n_bins, frames);
    res.alignment = Mat(n, steps);
    for (int s = 0; s < steps; ++s) {
        // each step's column holds r frames stacked feature-major
        for (int f = 0; f < mcfg_.r; ++f)
            for (int k = 0; k < mcfg_.n_mels; ++k)
                res.mel.at(k, s * mcfg_.r + f) = mel_cols[s][f * mcfg_.n_mels + k];
        for (int f = 0; f < mcfg_.r; ++f)
            for (int k = 0; k < mcfg_.n_bins; ++k)
                res.linear.at(k, s * mcfg_.r + f) = lin_cols[s][f * mcfg_.n_bins + k];
        for (int k = 0; k < n; ++k) res.alignment.at(k, s) = align_cols[s][k];
    }

    if (opt.render_audio) {
        if (mcfg_.n_bins != dsp_.frames.n_bins())
            throw std::runtime_error("synthesize: model emits " + std::to_string(mcfg_.n_bins) +
                                     " linear bins but the DSP config expects " +
                                     std::to_string(dsp_.frames.n_bins()));
        dsp::LinearSpectrogram spec;
        spec.mags = dsp::denormalize_linear(res.linear, dsp_);
        spec.frame_params = dsp_.frames;
        dsp::Waveform w = dsp::griffin_lim(spec, opt.griffin_lim_iters, dsp_.sample_rate);
        res.waveform = std::move(w.samples);
    }
    return res;
}

std::vector<BatchSynthItem> batch_synthesize(const Synthesizer& synth,
                                             const std::vector<std::string>& texts,
                                             const SynthOptions& opt) {
    std::vector<BatchSynthItem> items;
    items.reserve(texts.size());
    for (const std::string& text : texts) {
        BatchSynthItem item;
        item.text = text;
        try {
            item.result = synth.synthesize(text, opt);
            item.ok = true;
        } catch (const std::exception& e) {
            item.error = e.what();
        }
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace melseq::infer
