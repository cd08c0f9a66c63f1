#pragma once

#include <span>
#include <vector>

#include "melseq/ad/tensor.hpp"
#include "melseq/rng.hpp"

namespace melseq::ad {

// op(a) * op(b); trans flags mean "use the stored matrix transposed".
Var matmul(Tape& t, const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);

// W*x + b, bias broadcast across columns. b must be rows(W) x 1.
Var affine(Tape& t, const Var& W, const Var& x, const Var& b);

Var add(Tape& t, const Var& a, const Var& b);
Var sub(Tape& t, const Var& a, const Var& b);
Var mul(Tape& t, const Var& a, const Var& b);
Var add_const(Tape& t, const Var& a, const Mat& c);
Var mul_const(Tape& t, const Var& a, const Mat& c);
Var scale(Tape& t, const Var& a, real s);
Var add_scalar(Tape& t, const Var& a, real s);

Var tanh_op(Tape& t, const Var& a);
Var sigmoid(Tape& t, const Var& a);
Var relu(Tape& t, const Var& a);
Var exp_op(Tape& t, const Var& a);

Var transpose(Tape& t, const Var& a);
Var concat_rows(Tape& t, const Var& a, const Var& b);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var col(Tape& t, const Var& a, int j);
Var slice_rows(Tape& t, const Var& a, int r0, int r1);

// Row-wise softmax of x/scale, stabilized by per-row max subtraction.
Var softmax_rows(Tape& t, const Var& x, real scale);

// Inverted dropout; active whenever rate > 0 (the prenet keeps it on at
// inference too). Identity when rate == 0.
Var dropout(Tape& t, const Var& a, real rate, Rng& rng);

// out[:,j] = table.row(ids[j]) transposed; table is vocab x d, out is d x |ids|.
Var embedding_cols(Tape& t, const Var& table, std::span<const int> ids);

Var sum_all(Tape& t, const Var& a);

// sum over mask of (pred - target)^2
Var masked_sq_err_sum(Tape& t, const Var& pred, const Mat& target, const Mat& mask);

// Weighted binary cross entropy on logits, summed over mask.
Var bce_logits_sum(Tape& t, const Var& logits, const Mat& targets, const Mat& mask,
                   real pos_weight);

// sum(a ⊙ w) for constant w
Var dot_const_sum(Tape& t, const Var& a, const Mat& w);

struct GruParams {
    Var w_zr;  // 2d x (d_in + d)
    Var b_zr;  // 2d x 1
    Var w_h;   // d x (d_in + d)
    Var b_h;   // d x 1
};

// h = (1 - z) ⊙ h_prev + z ⊙ h_cand. Batched: x is d_in x B, h_prev d x B.
Var gru_cell(Tape& t, const Var& x, const Var& h_prev, const GruParams& p);

}  // namespace melseq::ad
