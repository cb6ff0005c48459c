#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "xdef/value.hpp"

namespace xdef::optim {

using diff::Value;

inline double global_norm(const std::vector<Value>& grads) {
    double sq = 0.0;
    for (const Value& g : grads)
        for (double x : g.data) sq += x * x;
    return std::sqrt(sq);
}

inline void clip_global_norm(std::vector<Value>& grads, double max_norm) {
    double n = global_norm(grads);
    if (n <= max_norm || n == 0.0) return;
    double s = max_norm / n;
    for (Value& g : grads)
        for (double& x : g.data) x *= s;
}

// Plain Adam update rule over a fixed parameter list.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Value*>& params, const std::vector<Value>& grads) {
        if (params.size() != grads.size())
            throw std::invalid_argument("adam: parameter/gradient count mismatch");
        if (m_.empty()) {
            for (Value* p : params) {
                m_.push_back(Value::zeros(p->shape));
                v_.push_back(Value::zeros(p->shape));
            }
        }
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Value& p = *params[i];
            const Value& g = grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                double& m = m_[i].data[j];
                double& v = v_[i].data[j];
                m = beta1_ * m + (1.0 - beta1_) * g.data[j];
                v = beta2_ * v + (1.0 - beta2_) * g.data[j] * g.data[j];
                p.data[j] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Value> m_, v_;
};

}  // namespace xdef::optim
