#include "melseq/model/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace melseq::model {

using namespace melseq::ad;

AttendOut attend(Tape& t, const Var& q, const Var& K, const Var& V,
                 std::span<const std::uint8_t> key_mask) {
    if (q->rows != K->rows)
        throw std::invalid_argument("attend: query/key dim mismatch (" + q->shape_str() +
                                    " vs " + K->shape_str() + ")");
    if (K->cols != V->cols || K->rows != V->rows)
        throw std::invalid_argument("attend: key/value shape mismatch (" + K->shape_str() +
                                    " vs " + V->shape_str() + ")");
    const int n = K->cols;
    Var scores = matmul(t, q, K, /*trans_a=*/true);  // 1 x N
    if (!key_mask.empty()) {
        if (static_cast<int>(key_mask.size()) != n)
            throw std::invalid_argument("attend: mask length " + std::to_string(key_mask.size()) +
                                        " does not cover " + std::to_string(n) + " keys");
        bool any = false;
        Mat penalty(1, n);
        for (int j = 0; j < n; ++j) {
            if (key_mask[j])
                any = true;
            else
                penalty.v[j] = -1e30;
        }
        if (!any) throw std::invalid_argument("attend: all key positions masked");
        scores = add_const(t, scores, penalty);
    }
    Var w_row = softmax_rows(t, scores, std::sqrt(static_cast<double>(q->rows)));
    AttendOut out;
    out.context = matmul(t, V, w_row, false, /*trans_b=*/true);  // d x 1
    out.weights = transpose(t, w_row);
    return out;
}

Var compute_query(Tape& t, const Var& dh_prev, const Var& ah, const Var& w, const Var& b) {
    return affine(t, w, concat_rows(t, dh_prev, ah), b);
}

Mat guided_mask(int n_chars, int n_steps, double g) {
    if (n_chars < 1 || n_steps < 1)
        throw std::invalid_argument("guided_mask: dimensions must be positive");
    Mat w(n_chars, n_steps);
    for (int n = 0; n < n_chars; ++n)
        for (int s = 0; s < n_steps; ++s) {
            double d = static_cast<double>(n) / n_chars - static_cast<double>(s) / n_steps;
            w.at(n, s) = 1.0 - std::exp(-d * d / (2.0 * g * g));
        }
    return w;
}

Var guided_attention_loss(Tape& t, const Var& A, const Mat& W) {
    if (A->rows != W.rows || A->cols != W.cols)
        throw std::invalid_argument("guided_attention_loss: shape mismatch (" + A->shape_str() +
                                    " vs " + W.shape_str() + ")");
    return scale(t, dot_const_sum(t, A, W), 1.0 / (static_cast<double>(W.rows) * W.cols));
}

std::pair<std::vector<double>, int> force_incremental(std::span<const double> weights, int n_prev,
                                                      bool strict_band) {
    const int n = static_cast<int>(weights.size());
    if (n == 0) throw std::invalid_argument("force_incremental: empty weights");
    if (n_prev < 0 || n_prev >= n)
        throw std::invalid_argument("force_incremental: n_prev " + std::to_string(n_prev) +
                                    " out of range");
    int n_raw = static_cast<int>(std::max_element(weights.begin(), weights.end()) -
                                 weights.begin());
    int delta = n_raw - n_prev;
    int lo = strict_band ? 1 : 0;
    if (delta >= lo && delta <= 3) return {std::vector<double>(weights.begin(), weights.end()), n_raw};
    int target = std::min(n_prev + 1, n - 1);
    std::vector<double> forced(n, 0.0);
    forced[target] = 1.0;
    return {std::move(forced), target};
}

double diagonal_mass(const Mat& A, double band) {
    double in = 0.0, total = 0.0;
    for (int n = 0; n < A.rows; ++n)
        for (int s = 0; s < A.cols; ++s) {
            double v = A.at(n, s);
            total += v;
            if (std::fabs(static_cast<double>(n) / A.rows - static_cast<double>(s) / A.cols) <=
                band)
                in += v;
        }
    return total > 0 ? in / total : 0.0;
}

}  // namespace melseq::model
