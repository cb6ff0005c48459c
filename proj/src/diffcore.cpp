#include "xdef/diffcore.hpp"

#include <cmath>
#include <stdexcept>

namespace xdef::diff {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tape::Var Tape::push(Value v, std::function<void(Tape&, int)> bw) {
    if (check_finite_) {
        for (double x : v.data)
            require(std::isfinite(x), "tape: non-finite value produced");
    }
    nodes_.push_back(Node{std::move(v), std::move(bw)});
    return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(Value v) { return push(std::move(v), nullptr); }

double Tape::scalar_value(Var v) const {
    const Value& val = value(v);
    require(val.is_scalar(), "scalar_value: var is not a scalar");
    return val.data[0];
}

void Tape::accumulate(Var v, const double* g, std::size_t n) {
    auto idx = static_cast<std::size_t>(v);
    if (!has_grad_[idx]) {
        grads_[idx] = Value::zeros(nodes_[idx].val.shape);
        has_grad_[idx] = 1;
    }
    double* dst = grads_[idx].data.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
}

Tape::Var Tape::add(Var a, Var b) {
    const Value& x = value(a);
    const Value& y = value(b);
    require(x.same_shape(y), "add: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    Value out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += y.data[i];
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        t.accumulate(a, g.data.data(), g.size());
        t.accumulate(b, g.data.data(), g.size());
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    const Value& x = value(a);
    const Value& y = value(b);
    require(x.same_shape(y), "sub: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    Value out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= y.data[i];
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        t.accumulate(a, g.data.data(), g.size());
        std::vector<double> neg(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g.data[i];
        t.accumulate(b, neg.data(), neg.size());
    });
}

Tape::Var Tape::mul(Var a, Var b) {
    const Value& x = value(a);
    const Value& y = value(b);
    require(x.same_shape(y), "mul: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    Value out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= y.data[i];
    return push(std::move(out), [a, b](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        const Value& y = t.node_val(b);
        std::vector<double> ga(g.size()), gb(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = g.data[i] * y.data[i];
            gb[i] = g.data[i] * x.data[i];
        }
        t.accumulate(a, ga.data(), ga.size());
        t.accumulate(b, gb.data(), gb.size());
    });
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Value& x = value(a);
    const Value& y = value(b);
    require(x.shape.size() == 2, "matmul: left operand must be a matrix");
    int m = x.shape[0], n = x.shape[1];
    if (y.shape.size() == 1) {
        require(y.shape[0] == n, "matmul: inner dimensions disagree " + shape_str(x.shape) + " vs " + shape_str(y.shape));
        Value out = Value::zeros({m});
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* row = x.data.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) acc += row[j] * y.data[j];
            out.data[static_cast<std::size_t>(i)] = acc;
        }
        return push(std::move(out), [a, b, m, n](Tape& t, int self) {
            const Value& g = t.grad_of(self);
            const Value& x = t.node_val(a);
            const Value& y = t.node_val(b);
            std::vector<double> ga(static_cast<std::size_t>(m) * n, 0.0), gb(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < m; ++i) {
                double gi = g.data[static_cast<std::size_t>(i)];
                const double* row = x.data.data() + static_cast<std::size_t>(i) * n;
                double* garow = ga.data() + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) {
                    garow[j] += gi * y.data[static_cast<std::size_t>(j)];
                    gb[static_cast<std::size_t>(j)] += gi * row[j];
                }
            }
            t.accumulate(a, ga.data(), ga.size());
            t.accumulate(b, gb.data(), gb.size());
        });
    }
    require(y.shape.size() == 2 && y.shape[0] == n,
            "matmul: inner dimensions disagree " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    int k = y.shape[1];
    Value out = Value::zeros({m, k});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double xij = x(i, j);
            if (xij == 0.0) continue;
            for (int c = 0; c < k; ++c) out(i, c) += xij * y(j, c);
        }
    return push(std::move(out), [a, b, m, n, k](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        const Value& y = t.node_val(b);
        std::vector<double> ga(static_cast<std::size_t>(m) * n, 0.0), gb(static_cast<std::size_t>(n) * k, 0.0);
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < k; ++c) {
                double gic = g.data[static_cast<std::size_t>(i) * k + c];
                if (gic == 0.0) continue;
                for (int j = 0; j < n; ++j) {
                    ga[static_cast<std::size_t>(i) * n + j] += gic * y(j, c);
                    gb[static_cast<std::size_t>(j) * k + c] += gic * x(i, j);
                }
            }
        t.accumulate(a, ga.data(), ga.size());
        t.accumulate(b, gb.data(), gb.size());
    });
}

Tape::Var Tape::sum(Var a) {
    const Value& x = value(a);
    double acc = 0.0;
    for (double v : x.data) acc += v;
    return push(Value::scalar(acc), [a](Tape& t, int self) {
        double g = t.grad_of(self).data[0];
        const Value& x = t.node_val(a);
        std::vector<double> ga(x.size(), g);
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::mean(Var a) {
    const Value& x = value(a);
    require(!x.data.empty(), "mean: empty operand");
    double acc = 0.0;
    for (double v : x.data) acc += v;
    double inv = 1.0 / static_cast<double>(x.size());
    return push(Value::scalar(acc * inv), [a, inv](Tape& t, int self) {
        double g = t.grad_of(self).data[0] * inv;
        const Value& x = t.node_val(a);
        std::vector<double> ga(x.size(), g);
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::concat(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat: no operands");
    std::vector<double> data;
    std::vector<std::size_t> sizes;
    for (Var p : parts) {
        const Value& v = value(p);
        require(v.shape.size() <= 1, "concat: operands must be scalars or vectors");
        sizes.push_back(v.size());
        data.insert(data.end(), v.data.begin(), v.data.end());
    }
    int n = static_cast<int>(data.size());
    auto ps = parts;
    return push(Value({n}, std::move(data)), [ps, sizes](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        std::size_t off = 0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            t.accumulate(ps[i], g.data.data() + off, sizes[i]);
            off += sizes[i];
        }
    });
}

Tape::Var Tape::index_select(Var a, const std::vector<int>& indices) {
    const Value& x = value(a);
    require(x.shape.size() == 1, "index_select: operand must be a vector");
    std::vector<double> data;
    data.reserve(indices.size());
    for (int i : indices) {
        require(i >= 0 && i < x.shape[0], "index_select: index out of range");
        data.push_back(x.data[static_cast<std::size_t>(i)]);
    }
    int n = static_cast<int>(data.size());
    return push(Value({n}, std::move(data)), [a, indices](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        std::vector<double> ga(x.size(), 0.0);
        for (std::size_t i = 0; i < indices.size(); ++i)
            ga[static_cast<std::size_t>(indices[i])] += g.data[i];
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::sigmoid(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& y = t.node_val(self);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g.data[i] * y.data[i] * (1.0 - y.data[i]);
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::tanh_(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = std::tanh(v);
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& y = t.node_val(self);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g.data[i] * (1.0 - y.data[i] * y.data[i]);
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::relu(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::softmax(Var a) {
    const Value& x = value(a);
    require(x.shape.size() == 1, "softmax: operand must be a vector");
    Value out = x;
    double mx = out.data[0];
    for (double v : out.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : out.data) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : out.data) v /= z;
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& y = t.node_val(self);
        double dotgy = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dotgy += g.data[i] * y.data[i];
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = y.data[i] * (g.data[i] - dotgy);
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::log_(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = std::log(v);
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g.data[i] / x.data[i];
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::exp_(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = std::exp(v);
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& y = t.node_val(self);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g.data[i] * y.data[i];
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::abs_(Var a) {
    Value out = value(a);
    for (double& v : out.data) v = std::fabs(v);
    return push(std::move(out), [a](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& x = t.node_val(a);
        std::vector<double> ga(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
            ga[i] = g.data[i] * s;
        }
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::l1_norm(Var a) {
    const Value& x = value(a);
    double acc = 0.0;
    for (double v : x.data) acc += std::fabs(v);
    return push(Value::scalar(acc), [a](Tape& t, int self) {
        double g = t.grad_of(self).data[0];
        const Value& x = t.node_val(a);
        std::vector<double> ga(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double s = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
            ga[i] = g * s;
        }
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::l2_norm_sq(Var a) {
    const Value& x = value(a);
    double acc = 0.0;
    for (double v : x.data) acc += v * v;
    return push(Value::scalar(acc), [a](Tape& t, int self) {
        double g = t.grad_of(self).data[0];
        const Value& x = t.node_val(a);
        std::vector<double> ga(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) ga[i] = 2.0 * g * x.data[i];
        t.accumulate(a, ga.data(), ga.size());
    });
}

Tape::Var Tape::dot(Var a, Var b) {
    const Value& x = value(a);
    const Value& y = value(b);
    require(x.shape.size() == 1 && x.same_shape(y),
            "dot: operands must be equal-length vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.data[i] * y.data[i];
    return push(Value::scalar(acc), [a, b](Tape& t, int self) {
        double g = t.grad_of(self).data[0];
        const Value& x = t.node_val(a);
        const Value& y = t.node_val(b);
        std::vector<double> ga(x.size()), gb(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            ga[i] = g * y.data[i];
            gb[i] = g * x.data[i];
        }
        t.accumulate(a, ga.data(), ga.size());
        t.accumulate(b, gb.data(), gb.size());
    });
}

Tape::Var Tape::scale(Var x, Var s) {
    const Value& xv = value(x);
    const Value& sv = value(s);
    require(sv.is_scalar(), "scale: scale factor must be a scalar");
    Value out = xv;
    double c = sv.data[0];
    for (double& v : out.data) v *= c;
    return push(std::move(out), [x, s](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        const Value& xv = t.node_val(x);
        double c = t.node_val(s).data[0];
        std::vector<double> gx(g.size());
        double gs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] = g.data[i] * c;
            gs += g.data[i] * xv.data[i];
        }
        t.accumulate(x, gx.data(), gx.size());
        t.accumulate(s, &gs, 1);
    });
}

Tape::Var Tape::cmul(Var x, double c) {
    Value out = value(x);
    for (double& v : out.data) v *= c;
    return push(std::move(out), [x, c](Tape& t, int self) {
        const Value& g = t.grad_of(self);
        std::vector<double> gx(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g.data[i] * c;
        t.accumulate(x, gx.data(), gx.size());
    });
}

std::vector<Value> Tape::gradient(Var root, const std::vector<Var>& wrt) {
    require(value(root).is_scalar(), "gradient: root must evaluate to a scalar");
    grads_.assign(nodes_.size(), Value{});
    has_grad_.assign(nodes_.size(), 0);
    double one = 1.0;
    accumulate(root, &one, 1);
    for (int i = root; i >= 0; --i) {
        if (!grad_present(i)) continue;
        if (nodes_[static_cast<std::size_t>(i)].backward)
            nodes_[static_cast<std::size_t>(i)].backward(*this, i);
    }
    std::vector<Value> out;
    out.reserve(wrt.size());
    for (Var v : wrt) {
        if (grad_present(v))
            out.push_back(grads_[static_cast<std::size_t>(v)]);
        else
            out.push_back(Value::zeros(value(v).shape));
    }
    return out;
}

}  // namespace xdef::diff
