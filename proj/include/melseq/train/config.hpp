#pragma once

#include <string>

namespace melseq::train {

struct TrainConfig {
    double lr = 1e-4;
    int batch_size = 8;  // desk-scale default; 32 for a full corpus run
    int epochs = 300;
    double tf_start = 1.0;
    double tf_end = 0.2;
    int tf_anneal_epochs = 300;
    double guided_weight = 1.0;  // lambda; 0 disables the guided term
    double guided_g = 0.2;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    int d = 256;
    int r = 5;
    int checkpoint_interval = 1000;  // steps between checkpoints; 0 = only final

    void validate() const;
};

// Line-oriented `key = value` text; '#' starts a comment. Unknown keys and
// malformed lines are errors that name the offending line.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string format_train_config(const TrainConfig& cfg);

}  // namespace melseq::train
