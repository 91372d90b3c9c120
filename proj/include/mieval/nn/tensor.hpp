#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mieval/errors.hpp"

namespace mieval::nn {

/// Dense (N, C, H, W) array, W fastest. Lower-rank data uses trailing
/// singleton dims. The scalar type is a template parameter so gradient tests
/// can run the same code in double precision.
template <typename T>
struct Tensor {
    int n = 1, c = 1, h = 1, w = 1;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw ShapeError("tensor dims must all be >= 1");
        }
        v.assign(size(), T(0));
    }

    static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }
    static Tensor full(int n, int c, int h, int w, T value) {
        Tensor t(n, c, h, w);
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::array<int, 4> shape() const { return {n, c, h, w}; }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::size_t index(int i, int j, int y, int x) const {
        return ((static_cast<std::size_t>(i) * c + j) * h + y) * w + x;
    }
    T& at(int i, int j, int y, int x) { return v[index(i, j, y, x)]; }
    const T& at(int i, int j, int y, int x) const { return v[index(i, j, y, x)]; }

    void fill(T value) { std::fill(v.begin(), v.end(), value); }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
    }
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace mieval::nn
