#include "melseq/ad/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace melseq::ad {

namespace {

// Denominator floor for the relative error. Central differences of a
// function of magnitude |f| carry ~|f|*1e-11 of roundoff at eps=1e-5, so
// gradients near that noise level must be compared absolutely, not
// relatively. The floor scales with |f| accordingly.
real denom_floor(real f0) { return 1e-5 * std::max<real>(1.0, std::fabs(f0)); }

real eval(const std::function<Var(Tape&)>& f) {
    Tape t;
    Var y = f(t);
    real v = y->scalar();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite function value");
    return v;
}

real check_one(const std::function<Var(Tape&)>& f, const Var& x, real eps) {
    x->zero_grad();
    real f0 = 0.0;
    {
        Tape t;
        Var y = f(t);
        f0 = y->scalar();
        if (!std::isfinite(f0))
            throw std::runtime_error("grad_check: non-finite function value");
        t.backward(y);
    }
    std::vector<real> analytic = x->g;
    const real floor = denom_floor(f0);

    real worst = 0.0;
    for (std::size_t i = 0; i < x->size(); ++i) {
        real keep = x->v[i];
        x->v[i] = keep + eps;
        real fp = eval(f);
        x->v[i] = keep - eps;
        real fm = eval(f);
        x->v[i] = keep;
        real numeric = (fp - fm) / (2.0 * eps);
        real denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), floor});
        worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace

real grad_check(const ScalarFn& f, const Var& x, real eps) {
    if (!x->requires_grad) throw std::invalid_argument("grad_check: x must require grad");
    return check_one([&f, &x](Tape& t) { return f(t, x); }, x, eps);
}

real grad_check_params(const std::function<Var(Tape&)>& f, std::span<const Var> params,
                       real eps) {
    real worst = 0.0;
    for (const Var& p : params) p->zero_grad();
    // one analytic pass for all params
    real f0 = 0.0;
    {
        Tape t;
        Var y = f(t);
        f0 = y->scalar();
        if (!std::isfinite(f0))
            throw std::runtime_error("grad_check: non-finite function value");
        t.backward(y);
    }
    const real floor = denom_floor(f0);
    std::vector<std::vector<real>> analytic;
    analytic.reserve(params.size());
    for (const Var& p : params) analytic.push_back(p->g);

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const Var& p = params[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            real keep = p->v[i];
            p->v[i] = keep + eps;
            real fp = eval(f);
            p->v[i] = keep - eps;
            real fm = eval(f);
            p->v[i] = keep;
            real numeric = (fp - fm) / (2.0 * eps);
            real a = analytic[pi][i];
            real denom = std::max({std::fabs(a), std::fabs(numeric), floor});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace melseq::ad
