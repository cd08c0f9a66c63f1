#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "melseq/data/corpus.hpp"
#include "melseq/model/decoder.hpp"
#include "melseq/model/encoder.hpp"
#include "melseq/train/adam.hpp"
#include "melseq/train/checkpoint.hpp"
#include "melseq/train/config.hpp"
#include "melseq/train/loss.hpp"

namespace melseq::train {

struct LogRecord {
    std::uint64_t step = 0;
    double mel = 0, lin = 0, stop = 0, attn = 0, diag = 0, tf = 0;
};

// `step=<n> mel=<f> lin=<f> stop=<f> attn=<f> diag=<f> tf=<f>`
std::string format_log_line(const LogRecord& rec);

// One model + optimizer over a fixed corpus. All randomness (init, epoch
// shuffles, dropout, teacher forcing coins) comes from streams derived from
// (seed, purpose, counter), so a restored checkpoint continues exactly as
// the uninterrupted run would.
class Trainer {
public:
    Trainer(const TrainConfig& cfg, const std::vector<data::Utterance>& corpus);

    // Runs n optimizer steps; appends a record per step and mirrors it to
    // `log` when given. Throws on a non-finite loss, naming the batch.
    std::vector<LogRecord> run_steps(int n, std::ostream* log = nullptr);

    Checkpoint snapshot() const;
    void restore(const Checkpoint& ckpt);

    std::uint64_t step() const { return step_; }
    int epoch() const;
    int steps_per_epoch() const;
    const model::ParamSet& params() const { return params_; }
    const model::ModelConfig& model_config() const { return mcfg_; }
    const TrainConfig& config() const { return cfg_; }

private:
    data::Batch next_batch(std::string* batch_id);

    TrainConfig cfg_;
    model::ModelConfig mcfg_;
    const std::vector<data::Utterance>& corpus_;
    model::ParamSet params_;
    model::EncoderParams enc_;
    model::DecoderParams dec_;
    std::vector<ad::Var> param_vars_;
    AdamState adam_;
    std::uint64_t step_ = 0;
    std::vector<int> order_;  // shuffled utterance indices for current epoch
    int order_epoch_ = -1;
};

}  // namespace melseq::train
