#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace xdef::diff {

// Dense 64-bit float tensor. Rank 0 (scalar), 1 (vector) and 2 (matrix)
// are the only ranks the kernel produces.
struct Value {
    std::vector<int> shape;
    std::vector<double> data;

    Value() = default;
    Value(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != static_cast<std::size_t>(numel(shape)))
            throw std::invalid_argument("Value: data length does not match shape");
    }

    static long long numel(const std::vector<int>& s) {
        long long n = 1;
        for (int e : s) {
            if (e < 0) throw std::invalid_argument("Value: negative extent");
            n *= e;
        }
        return n;
    }

    static Value scalar(double x) { return Value({}, {x}); }
    static Value vec(std::vector<double> d) {
        int n = static_cast<int>(d.size());
        return Value({n}, std::move(d));
    }
    static Value zeros(std::vector<int> s) {
        auto n = numel(s);
        return Value(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return shape.empty(); }
    int rows() const { return shape.size() == 2 ? shape[0] : (shape.size() == 1 ? shape[0] : 1); }
    int cols() const { return shape.size() == 2 ? shape[1] : 1; }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    // matrix element access, row-major
    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Value& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace xdef::diff
