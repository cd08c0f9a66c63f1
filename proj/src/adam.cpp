#include "melseq/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace melseq::train {

using ad::real;

bool adam_step(std::span<const ad::Var> params, AdamState& st, double lr, double clip,
               double beta1, double beta2, double eps) {
    if (st.m.size() != params.size())
        throw std::invalid_argument("adam_step: state not initialized for these params");

    double sq_norm = 0.0;
    for (const auto& p : params)
        for (real g : p->g) {
            if (!std::isfinite(g)) {
                ++st.skipped;
                return false;
            }
            sq_norm += g * g;
        }
    double norm = std::sqrt(sq_norm);
    double factor = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;

    ++st.t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const auto& p = params[pi];
        auto& m = st.m[pi];
        auto& v = st.v[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            double g = p->g[i] * factor;
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            p->v[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
    return true;
}

}  // namespace melseq::train
