#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "melseq/ad/ops.hpp"

namespace melseq::model {

struct AttendOut {
    ad::Var context;  // d x 1
    ad::Var weights;  // N x 1, a valid distribution over characters
};

// Scaled dot-product attention: softmax(q^T K / sqrt(d)) over the key
// columns, context = V * weights. key_mask (when non-empty) marks usable
// positions; throws when every position is masked.
AttendOut attend(ad::Tape& t, const ad::Var& q, const ad::Var& K, const ad::Var& V,
                 std::span<const std::uint8_t> key_mask = {});

// Q = Linear([dh_prev, ah]), the decoder's query head.
ad::Var compute_query(ad::Tape& t, const ad::Var& dh_prev, const ad::Var& ah,
                      const ad::Var& w, const ad::Var& b);

// W[n,t] = 1 - exp(-(n/N - t/T)^2 / (2 g^2)), zero-based indices.
ad::Mat guided_mask(int n_chars, int n_steps, double g = 0.2);

// mean over all cells of A ⊙ W
ad::Var guided_attention_loss(ad::Tape& t, const ad::Var& A, const ad::Mat& W);

// Inference-time monotonicity repair: when argmax strays outside the allowed
// band relative to n_prev, replace the column by a one-hot at n_prev + 1.
// strict_band treats a stall (delta 0) as out of band too.
std::pair<std::vector<double>, int> force_incremental(std::span<const double> weights, int n_prev,
                                                      bool strict_band = false);

// Fraction of attention mass within |n/N - t/T| <= band.
double diagonal_mass(const ad::Mat& A, double band = 0.1);

}  // namespace melseq::model
