#pragma once

#include <span>
#include <vector>

#include "melseq/ad/tensor.hpp"

namespace melseq::train {

struct AdamState {
    std::vector<std::vector<ad::real>> m, v;  // first/second moments, per param
    std::uint64_t t = 0;                      // completed steps
    std::uint64_t skipped = 0;                // steps dropped for non-finite grads

    void init(std::span<const ad::Var> params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p->size(), 0.0);
            v.emplace_back(p->size(), 0.0);
        }
        t = 0;
        skipped = 0;
    }
};

// Global-norm clip then bias-corrected Adam. A non-finite gradient anywhere
// aborts the step (moments and params untouched) and bumps `skipped`;
// returns whether the update was applied.
bool adam_step(std::span<const ad::Var> params, AdamState& st, double lr, double clip = 1.0,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace melseq::train
