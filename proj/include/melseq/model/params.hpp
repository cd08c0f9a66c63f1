#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "melseq/ad/tensor.hpp"
#include "melseq/rng.hpp"

namespace melseq::model {

// Name-indexed registry of trainable tensors; the checkpoint format and the
// parameter-count audit both iterate it in registration order.
class ParamSet {
public:
    enum class Init { weight, bias };

    ad::Var add(const std::string& name, int rows, int cols, Init kind = Init::weight) {
        for (const auto& [n, v] : items_)
            if (n == name) throw std::logic_error("ParamSet: duplicate name " + name);
        ad::Var p = ad::make_param(rows, cols);
        items_.emplace_back(name, p);
        kinds_.push_back(kind);
        return p;
    }

    const std::vector<std::pair<std::string, ad::Var>>& items() const { return items_; }

    ad::Var find(const std::string& name) const {
        for (const auto& [n, v] : items_)
            if (n == name) return v;
        throw std::out_of_range("ParamSet: no tensor named " + name);
    }

    std::vector<ad::Var> vars() const {
        std::vector<ad::Var> out;
        out.reserve(items_.size());
        for (const auto& [n, v] : items_) out.push_back(v);
        return out;
    }

    std::size_t total_count() const {
        std::size_t n = 0;
        for (const auto& [name, v] : items_) n += v->size();
        return n;
    }

    // Weights ~ Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) with fan_in = cols;
    // biases start at zero.
    void init_uniform(Rng& rng) {
        for (std::size_t i = 0; i < items_.size(); ++i) {
            ad::Var& p = items_[i].second;
            if (kinds_[i] == Init::bias) {
                std::fill(p->v.begin(), p->v.end(), 0.0);
            } else {
                double bound = 1.0 / std::sqrt(static_cast<double>(p->cols));
                for (auto& x : p->v) x = rng.uniform(-bound, bound);
            }
        }
    }

    void zero_grads() {
        for (auto& [n, v] : items_) v->zero_grad();
    }

private:
    std::vector<std::pair<std::string, ad::Var>> items_;
    std::vector<Init> kinds_;
};

}  // namespace melseq::model
