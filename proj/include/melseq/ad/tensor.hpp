#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace melseq::ad {

using real = double;

// Plain dense matrix, row-major. Used for constants, targets and masks that
// never need gradients.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<real> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Mat(int r, int c, std::vector<real> data) : rows(r), cols(c), v(std::move(data)) {
        if (v.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("Mat: data length does not match shape");
    }

    real& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    real at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return v.size(); }
    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

// Graph node: value plus (optional) gradient buffer.
struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<real> v;
    std::vector<real> g;
    bool requires_grad = false;

    std::size_t size() const { return v.size(); }
    real& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    real at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
    real scalar() const { return v[0]; }
    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

using Var = std::shared_ptr<Node>;

inline Var make_node(int rows, int cols, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    n->requires_grad = requires_grad;
    if (requires_grad) n->g.assign(n->v.size(), 0.0);
    return n;
}

inline Var make_param(int rows, int cols) { return make_node(rows, cols, true); }

inline Var make_const(const Mat& m) {
    auto n = make_node(m.rows, m.cols, false);
    n->v = m.v;
    return n;
}

inline Var make_const(int rows, int cols, std::vector<real> data) {
    return make_const(Mat(rows, cols, std::move(data)));
}

// Records backward closures for one forward pass. Single-threaded by
// contract: one training step builds and consumes one tape.
class Tape {
public:
    Var node(int rows, int cols, bool requires_grad) {
        Var n = make_node(rows, cols, requires_grad);
        held_.push_back(n);
        return n;
    }

    void record(std::function<void()> fn) { backward_.push_back(std::move(fn)); }

    // Seeds d(root)=1 and runs every recorded closure in reverse order.
    void backward(const Var& root) {
        if (root->size() != 1)
            throw std::invalid_argument("backward: root must be a scalar, got " + root->shape_str());
        if (!root->requires_grad)
            throw std::invalid_argument("backward: root does not require grad");
        root->g[0] = 1.0;
        for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
    }

    std::size_t node_count() const { return held_.size(); }

    void clear() {
        backward_.clear();
        held_.clear();
    }

private:
    std::vector<std::function<void()>> backward_;
    std::vector<Var> held_;
};

}  // namespace melseq::ad
