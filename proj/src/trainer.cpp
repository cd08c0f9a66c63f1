#include "melseq/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "melseq/model/attention.hpp"

namespace melseq::train {

using namespace melseq::ad;
using namespace melseq::model;

namespace {

// stream tags for Rng::derive
constexpr std::uint64_t kInitTag = 0x01;
constexpr std::uint64_t kShuffleBase = 0x100000;
constexpr std::uint64_t kForwardBase = 0x200000;

}  // namespace

std::string format_log_line(const LogRecord& rec) {
    std::ostringstream out;
    out.precision(6);
    out << "step=" << rec.step << " mel=" << rec.mel << " lin=" << rec.lin
        << " stop=" << rec.stop << " attn=" << rec.attn << " diag=" << rec.diag
        << " tf=" << rec.tf;
    return out.str();
}

Trainer::Trainer(const TrainConfig& cfg, const std::vector<data::Utterance>& corpus)
    : cfg_(cfg), corpus_(corpus) {
    cfg_.validate();
    if (corpus_.empty()) throw std::invalid_argument("trainer: empty corpus");
    mcfg_.d = cfg_.d;
    mcfg_.r = cfg_.r;
    mcfg_.n_mels = corpus_[0].mel.rows;
    mcfg_.n_bins = corpus_[0].linear.rows;
    enc_ = EncoderParams::create(params_, mcfg_);
    dec_ = DecoderParams::create(params_, mcfg_);
    Rng init = Rng::derive(cfg_.seed, kInitTag);
    params_.init_uniform(init);
    param_vars_ = params_.vars();
    adam_.init(param_vars_);
}

int Trainer::steps_per_epoch() const {
    int n = static_cast<int>(corpus_.size());
    return (n + cfg_.batch_size - 1) / cfg_.batch_size;
}

int Trainer::epoch() const { return static_cast<int>(step_) / steps_per_epoch(); }

data::Batch Trainer::next_batch(std::string* batch_id) {
    const int spe = steps_per_epoch();
    const int ep = static_cast<int>(step_) / spe;
    const int slot = static_cast<int>(step_) % spe;
    if (ep != order_epoch_) {
        order_.resize(corpus_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        Rng shuffle = Rng::derive(cfg_.seed, kShuffleBase + static_cast<std::uint64_t>(ep));
        for (std::size_t i = order_.size(); i > 1; --i)
            std::swap(order_[i - 1], order_[shuffle.below(i)]);
        order_epoch_ = ep;
    }
    std::vector<const data::Utterance*> utts;
    std::ostringstream ids;
    for (int i = slot * cfg_.batch_size;
         i < std::min<int>((slot + 1) * cfg_.batch_size, static_cast<int>(corpus_.size())); ++i) {
        utts.push_back(&corpus_[order_[i]]);
        if (!ids.str().empty()) ids << ",";
        ids << corpus_[order_[i]].id;
    }
    if (batch_id) *batch_id = ids.str();
    return data::make_batch(utts, cfg_.r);
}

std::vector<LogRecord> Trainer::run_steps(int n, std::ostream* log) {
    std::vector<LogRecord> records;
    records.reserve(n);
    for (int k = 0; k < n; ++k) {
        std::string batch_id;
        data::Batch batch = next_batch(&batch_id);
        double tf = teacher_forcing_ratio(epoch(), cfg_.tf_start, cfg_.tf_end,
                                          cfg_.tf_anneal_epochs);

        Tape t;
        Rng fwd = Rng::derive(cfg_.seed, kForwardBase + step_);
        EncoderOutput enc = encode_batch(t, batch.char_ids, batch.char_lengths, enc_, mcfg_);
        SequenceOut out = decode_sequence_teacher_forced(t, batch, enc, dec_, mcfg_, tf, fwd);
        LossBreakdown lb = total_loss(t, out, batch, cfg_.guided_weight, cfg_.guided_g);
        if (!std::isfinite(lb.value()))
            throw std::runtime_error("trainer: non-finite loss at step " +
                                     std::to_string(step_ + 1) + " on batch [" + batch_id + "]");

        params_.zero_grads();
        t.backward(lb.total);
        adam_step(param_vars_, adam_, cfg_.lr, cfg_.grad_clip);
        ++step_;

        double diag = 0.0;
        for (const Var& a : out.alignment) {
            Mat am(a->rows, a->cols, a->v);
            diag += diagonal_mass(am);
        }
        diag /= batch.size;

        LogRecord rec{step_, lb.mel, lb.lin, lb.stop, lb.attn, diag, tf};
        if (log) *log << format_log_line(rec) << "\n";
        records.push_back(rec);
    }
    return records;
}

Checkpoint Trainer::snapshot() const {
    Checkpoint ckpt;
    ckpt.config_text = format_train_config(cfg_);
    ckpt.seed = cfg_.seed;
    ckpt.epoch = static_cast<std::uint64_t>(epoch());
    ckpt.step = step_;
    ckpt.adam_t = adam_.t;
    ckpt.adam_skipped = adam_.skipped;
    for (std::size_t i = 0; i < params_.items().size(); ++i) {
        const auto& [name, p] = params_.items()[i];
        ckpt.names.push_back(name);
        ckpt.tensors.emplace_back(p->rows, p->cols, p->v);
        ckpt.adam_m.emplace_back(p->rows, p->cols, adam_.m[i]);
        ckpt.adam_v.emplace_back(p->rows, p->cols, adam_.v[i]);
    }
    return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
    if (ckpt.names.size() != params_.items().size())
        throw std::runtime_error("restore: checkpoint has " + std::to_string(ckpt.names.size()) +
                                 " tensors, model expects " +
                                 std::to_string(params_.items().size()));
    for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
        const auto& [name, p] = params_.items()[i];
        if (ckpt.names[i] != name)
            throw std::runtime_error("restore: tensor order mismatch at " + ckpt.names[i] +
                                     " (expected " + name + ")");
        if (ckpt.tensors[i].rows != p->rows || ckpt.tensors[i].cols != p->cols)
            throw std::runtime_error("restore: shape mismatch for " + name + ": checkpoint " +
                                     ckpt.tensors[i].shape_str() + " vs model " + p->shape_str());
        p->v = ckpt.tensors[i].v;
        adam_.m[i] = ckpt.adam_m[i].v;
        adam_.v[i] = ckpt.adam_v[i].v;
    }
    adam_.t = ckpt.adam_t;
    adam_.skipped = ckpt.adam_skipped;
    step_ = ckpt.step;
    order_epoch_ = -1;  // force a reshuffle for the (deterministic) current epoch
}

}  // namespace melseq::train
