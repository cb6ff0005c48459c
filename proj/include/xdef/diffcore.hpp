#pragma once

#include <functional>
#include <vector>

#include "xdef/value.hpp"

namespace xdef::diff {

// Reverse-mode tape. Operations evaluate eagerly and record a backward
// closure; gradient() runs one reverse sweep from a scalar root.
//
// A tape is single-owner: concurrent sweeps on the same tape are not
// allowed, disjoint tapes are independent.
class Tape {
public:
    using Var = int;

    explicit Tape(bool check_finite = false) : check_finite_(check_finite) {}

    Var input(Value v);
    Var constant(Value v) { return input(std::move(v)); }

    const Value& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].val; }
    double scalar_value(Var v) const;

    // elementwise, operands must share shape exactly
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);

    // (m,n)x(n,k) -> (m,k)  or  (m,n)x(n) -> (m)
    Var matmul(Var a, Var b);

    Var sum(Var a);
    Var mean(Var a);
    Var concat(const std::vector<Var>& parts);
    Var index_select(Var a, const std::vector<int>& indices);

    Var sigmoid(Var a);
    Var tanh_(Var a);
    Var relu(Var a);
    Var softmax(Var a);  // vector only
    Var log_(Var a);
    Var exp_(Var a);
    Var abs_(Var a);  // subgradient 0 at 0

    Var l1_norm(Var a);
    Var l2_norm_sq(Var a);
    Var dot(Var a, Var b);

    // out = s * x with s scalar
    Var scale(Var x, Var s);
    // out = c * x with c a compile-time constant (not a differentiable input)
    Var cmul(Var x, double c);

    // Gradient of a scalar root w.r.t. each requested var. Vars not on the
    // path from the root get a zero gradient of their own shape.
    std::vector<Value> gradient(Var root, const std::vector<Var>& wrt);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Value val;
        // accumulates d(root)/d(node) during a sweep; index into grads_
        std::function<void(Tape&, int)> backward;  // null for inputs
    };

    std::vector<Node> nodes_;
    std::vector<Value> grads_;
    std::vector<char> has_grad_;
    bool check_finite_;

    Var push(Value v, std::function<void(Tape&, int)> bw);
    void accumulate(Var v, const double* g, std::size_t n);
    Value& grad_of(int v) { return grads_[static_cast<std::size_t>(v)]; }
    bool grad_present(int v) const { return has_grad_[static_cast<std::size_t>(v)] != 0; }
    const Value& node_val(int v) const { return nodes_[static_cast<std::size_t>(v)].val; }
};

}  // namespace xdef::diff
