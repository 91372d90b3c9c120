#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mieval/nn/tensor.hpp"

namespace mieval::nn {

/// Named view of one trainable tensor; the optimizer walks these in
/// registration order.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
};

/// Non-trainable state that still belongs in checkpoints (batch-norm running
/// statistics).
template <typename T>
struct BufferRef {
    std::string name;
    Tensor<T>* value;
};

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Convolution, kernel 1x1 or 3x3, stride 1, zero padding that preserves the
// spatial dims. im2col + GEMM.
// ---------------------------------------------------------------------------
template <typename T>
struct Conv2d {
    int cin = 0, cout = 0, ksize = 3;
    Tensor<T> w;   // (cout, cin, k, k)
    Tensor<T> b;   // (cout)
    Tensor<T> gw, gb;

    Conv2d() = default;
    Conv2d(int cin_, int cout_, int ksize_ = 3)
        : cin(cin_), cout(cout_), ksize(ksize_),
          w(cout_, cin_, ksize_, ksize_), b(cout_, 1, 1, 1),
          gw(cout_, cin_, ksize_, ksize_), gb(cout_, 1, 1, 1) {
        if (ksize != 1 && ksize != 3) throw ShapeError("conv kernel must be 1x1 or 3x3");
    }

    int fan_in() const { return cin * ksize * ksize; }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != cin) {
            throw ShapeError("conv2d: input has " + std::to_string(x.c) +
                             " channels, expected " + std::to_string(cin));
        }
        x_ = x;
        Tensor<T> y(x.n, cout, x.h, x.w);
        const int hw = x.h * x.w;
        const int K = fan_in();
        Eigen::Map<const MatRM<T>> wm(w.v.data(), cout, K);
        for (int i = 0; i < x.n; ++i) {
            im2col(x, i, cols_);
            Eigen::Map<const MatRM<T>> cm(cols_.data(), K, hw);
            Eigen::Map<MatRM<T>> ym(y.v.data() + y.index(i, 0, 0, 0), cout, hw);
            ym.noalias() = wm * cm;
            for (int co = 0; co < cout; ++co) ym.row(co).array() += b.v[co];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Tensor<T>& x = x_;
        Tensor<T> gx(x.n, cin, x.h, x.w);
        const int hw = x.h * x.w;
        const int K = fan_in();
        Eigen::Map<const MatRM<T>> wm(w.v.data(), cout, K);
        Eigen::Map<MatRM<T>> gwm(gw.v.data(), cout, K);
        std::vector<T> gcols(static_cast<std::size_t>(K) * hw);
        for (int i = 0; i < x.n; ++i) {
            Eigen::Map<const MatRM<T>> gym(gy.v.data() + gy.index(i, 0, 0, 0), cout, hw);
            im2col(x, i, cols_);
            Eigen::Map<const MatRM<T>> cm(cols_.data(), K, hw);
            gwm.noalias() += gym * cm.transpose();
            for (int co = 0; co < cout; ++co) gb.v[co] += gym.row(co).sum();
            Eigen::Map<MatRM<T>> gcm(gcols.data(), K, hw);
            gcm.noalias() = wm.transpose() * gym;
            col2im(gcols, gx, i);
        }
        return gx;
    }

private:
    Tensor<T> x_;
    std::vector<T> cols_;

    void im2col(const Tensor<T>& x, int sample, std::vector<T>& cols) const {
        const int pad = ksize / 2;
        const int hw = x.h * x.w;
        cols.assign(static_cast<std::size_t>(fan_in()) * hw, T(0));
        for (int ci = 0; ci < cin; ++ci) {
            const T* src = x.v.data() + x.index(sample, ci, 0, 0);
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    T* dst = cols.data() +
                             (static_cast<std::size_t>((ci * ksize + ky) * ksize + kx)) * hw;
                    for (int y = 0; y < x.h; ++y) {
                        const int sy = y + ky - pad;
                        if (sy < 0 || sy >= x.h) continue;
                        const int x_lo = std::max(0, pad - kx);
                        const int x_hi = std::min(x.w, x.w + pad - kx);
                        for (int xx = x_lo; xx < x_hi; ++xx) {
                            dst[y * x.w + xx] = src[sy * x.w + xx + kx - pad];
                        }
                    }
                }
            }
        }
    }

    void col2im(const std::vector<T>& gcols, Tensor<T>& gx, int sample) const {
        const int pad = ksize / 2;
        const int hw = gx.h * gx.w;
        for (int ci = 0; ci < cin; ++ci) {
            T* dst = gx.v.data() + gx.index(sample, ci, 0, 0);
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    const T* src =
                        gcols.data() +
                        (static_cast<std::size_t>((ci * ksize + ky) * ksize + kx)) * hw;
                    for (int y = 0; y < gx.h; ++y) {
                        const int sy = y + ky - pad;
                        if (sy < 0 || sy >= gx.h) continue;
                        const int x_lo = std::max(0, pad - kx);
                        const int x_hi = std::min(gx.w, gx.w + pad - kx);
                        for (int xx = x_lo; xx < x_hi; ++xx) {
                            dst[sy * gx.w + xx + kx - pad] += src[y * gx.w + xx];
                        }
                    }
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// ELU activation, alpha = 1.
// ---------------------------------------------------------------------------
template <typename T>
struct Elu {
    Tensor<T> forward(const Tensor<T>& x) {
        y_ = x;
        for (T& v : y_.v) {
            if (v <= T(0)) v = std::expm1(v);
        }
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i) {
            // For x <= 0 the derivative e^x equals y + 1; y > 0 iff x > 0.
            if (y_.v[i] <= T(0)) gx.v[i] *= y_.v[i] + T(1);
        }
        return gx;
    }

private:
    Tensor<T> y_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.
// ---------------------------------------------------------------------------
template <typename T>
struct BatchNorm2d {
    int c = 0;
    T eps = T(1e-5);
    T momentum = T(0.9);  // running = momentum * running + (1 - momentum) * batch
    Tensor<T> gamma, beta, ggamma, gbeta;
    Tensor<T> run_mean, run_var;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int c_)
        : c(c_), gamma(c_, 1, 1, 1), beta(c_, 1, 1, 1), ggamma(c_, 1, 1, 1),
          gbeta(c_, 1, 1, 1), run_mean(c_, 1, 1, 1), run_var(c_, 1, 1, 1) {
        gamma.fill(T(1));
        run_var.fill(T(1));
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".gamma", &gamma, &ggamma});
        out.push_back({prefix + ".beta", &beta, &gbeta});
    }
    void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
        out.push_back({prefix + ".run_mean", &run_mean});
        out.push_back({prefix + ".run_var", &run_var});
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (x.c != c) throw ShapeError("batch_norm: channel mismatch");
        train_ = train;
        const std::size_t m = static_cast<std::size_t>(x.n) * x.h * x.w;
        Tensor<T> y(x.n, x.c, x.h, x.w);
        if (train) {
            x_ = x;
            mean_.assign(c, T(0));
            inv_std_.assign(c, T(0));
            for (int j = 0; j < c; ++j) {
                T sum = 0;
                for_channel(x, j, [&](T v) { sum += v; });
                const T mu = sum / static_cast<T>(m);
                T sq = 0;
                for_channel(x, j, [&](T v) { sq += (v - mu) * (v - mu); });
                const T var = sq / static_cast<T>(m);
                mean_[j] = mu;
                inv_std_[j] = T(1) / std::sqrt(var + eps);
                run_mean.v[j] = momentum * run_mean.v[j] + (T(1) - momentum) * mu;
                run_var.v[j] = momentum * run_var.v[j] + (T(1) - momentum) * var;
            }
            xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
            apply(x, y, mean_, inv_std_, &xhat_);
        } else {
            std::vector<T> inv_std(c);
            for (int j = 0; j < c; ++j) inv_std[j] = T(1) / std::sqrt(run_var.v[j] + eps);
            std::vector<T> mean(run_mean.v.begin(), run_mean.v.end());
            apply(x, y, mean, inv_std, nullptr);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        if (!train_) throw NumericError("batch_norm: backward requires train-mode forward");
        const std::size_t m = static_cast<std::size_t>(gy.n) * gy.h * gy.w;
        Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
        for (int j = 0; j < c; ++j) {
            T sum_gy = 0, sum_gy_xhat = 0;
            for (int i = 0; i < gy.n; ++i) {
                const T* g = gy.v.data() + gy.index(i, j, 0, 0);
                const T* xh = xhat_.v.data() + xhat_.index(i, j, 0, 0);
                for (std::size_t k = 0; k < static_cast<std::size_t>(gy.h) * gy.w; ++k) {
                    sum_gy += g[k];
                    sum_gy_xhat += g[k] * xh[k];
                }
            }
            gbeta.v[j] += sum_gy;
            ggamma.v[j] += sum_gy_xhat;
            const T scale = gamma.v[j] * inv_std_[j] / static_cast<T>(m);
            for (int i = 0; i < gy.n; ++i) {
                const T* g = gy.v.data() + gy.index(i, j, 0, 0);
                const T* xh = xhat_.v.data() + xhat_.index(i, j, 0, 0);
                T* out = gx.v.data() + gx.index(i, j, 0, 0);
                for (std::size_t k = 0; k < static_cast<std::size_t>(gy.h) * gy.w; ++k) {
                    out[k] = scale * (static_cast<T>(m) * g[k] - sum_gy -
                                      xh[k] * sum_gy_xhat);
                }
            }
        }
        return gx;
    }

private:
    Tensor<T> x_, xhat_;
    std::vector<T> mean_, inv_std_;
    bool train_ = false;

    template <typename F>
    void for_channel(const Tensor<T>& x, int j, F&& f) const {
        for (int i = 0; i < x.n; ++i) {
            const T* p = x.v.data() + x.index(i, j, 0, 0);
            for (std::size_t k = 0; k < static_cast<std::size_t>(x.h) * x.w; ++k) f(p[k]);
        }
    }

    void apply(const Tensor<T>& x, Tensor<T>& y, const std::vector<T>& mean,
               const std::vector<T>& inv_std, Tensor<T>* xhat_out) const {
        for (int i = 0; i < x.n; ++i) {
            for (int j = 0; j < c; ++j) {
                const T* src = x.v.data() + x.index(i, j, 0, 0);
                T* dst = y.v.data() + y.index(i, j, 0, 0);
                T* xh = xhat_out ? xhat_out->v.data() + xhat_out->index(i, j, 0, 0)
                                 : nullptr;
                for (std::size_t k = 0; k < static_cast<std::size_t>(x.h) * x.w; ++k) {
                    const T norm = (src[k] - mean[j]) * inv_std[j];
                    if (xh) xh[k] = norm;
                    dst[k] = gamma.v[j] * norm + beta.v[j];
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Squeeze-and-excitation: global average pool, FC bottleneck with ReLU,
// FC back with sigmoid, channel-wise rescale.
// ---------------------------------------------------------------------------
template <typename T>
struct SEBlock {
    int c = 0, hidden = 0;
    Tensor<T> w1, b1, w2, b2;
    Tensor<T> gw1, gb1, gw2, gb2;

    SEBlock() = default;
    SEBlock(int c_, int reduction = 16)
        : c(c_), hidden(std::max(c_ / reduction, 2)),
          w1(hidden, c_, 1, 1), b1(hidden, 1, 1, 1),
          w2(c_, hidden, 1, 1), b2(c_, 1, 1, 1),
          gw1(hidden, c_, 1, 1), gb1(hidden, 1, 1, 1),
          gw2(c_, hidden, 1, 1), gb2(c_, 1, 1, 1) {}

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w1", &w1, &gw1});
        out.push_back({prefix + ".b1", &b1, &gb1});
        out.push_back({prefix + ".w2", &w2, &gw2});
        out.push_back({prefix + ".b2", &b2, &gb2});
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != c) throw ShapeError("se_block: channel mismatch");
        x_ = x;
        const int hw = x.h * x.w;
        pooled_ = Tensor<T>(x.n, c, 1, 1);
        a1_ = Tensor<T>(x.n, hidden, 1, 1);
        r1_ = Tensor<T>(x.n, hidden, 1, 1);
        gate_ = Tensor<T>(x.n, c, 1, 1);

        for (int i = 0; i < x.n; ++i) {
            for (int j = 0; j < c; ++j) {
                T sum = 0;
                const T* p = x.v.data() + x.index(i, j, 0, 0);
                for (int k = 0; k < hw; ++k) sum += p[k];
                pooled_.at(i, j, 0, 0) = sum / static_cast<T>(hw);
            }
            for (int u = 0; u < hidden; ++u) {
                T acc = b1.v[u];
                for (int j = 0; j < c; ++j) acc += w1.at(u, j, 0, 0) * pooled_.at(i, j, 0, 0);
                a1_.at(i, u, 0, 0) = acc;
                r1_.at(i, u, 0, 0) = acc > T(0) ? acc : T(0);
            }
            for (int j = 0; j < c; ++j) {
                T acc = b2.v[j];
                for (int u = 0; u < hidden; ++u) acc += w2.at(j, u, 0, 0) * r1_.at(i, u, 0, 0);
                gate_.at(i, j, 0, 0) = T(1) / (T(1) + std::exp(-acc));
            }
        }

        Tensor<T> y(x.n, x.c, x.h, x.w);
        for (int i = 0; i < x.n; ++i) {
            for (int j = 0; j < c; ++j) {
                const T g = gate_.at(i, j, 0, 0);
                const T* src = x.v.data() + x.index(i, j, 0, 0);
                T* dst = y.v.data() + y.index(i, j, 0, 0);
                for (int k = 0; k < hw; ++k) dst[k] = src[k] * g;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Tensor<T>& x = x_;
        const int hw = x.h * x.w;
        Tensor<T> gx(x.n, x.c, x.h, x.w);
        for (int i = 0; i < x.n; ++i) {
            std::vector<T> dgate(c), da2(c), da1(hidden), dpooled(c, T(0));
            for (int j = 0; j < c; ++j) {
                const T g = gate_.at(i, j, 0, 0);
                const T* gyp = gy.v.data() + gy.index(i, j, 0, 0);
                const T* xp = x.v.data() + x.index(i, j, 0, 0);
                T* gxp = gx.v.data() + gx.index(i, j, 0, 0);
                T s = 0;
                for (int k = 0; k < hw; ++k) {
                    s += gyp[k] * xp[k];
                    gxp[k] = gyp[k] * g;
                }
                dgate[j] = s;
                da2[j] = s * g * (T(1) - g);
            }
            for (int j = 0; j < c; ++j) {
                gb2.v[j] += da2[j];
                for (int u = 0; u < hidden; ++u) {
                    gw2.at(j, u, 0, 0) += da2[j] * r1_.at(i, u, 0, 0);
                }
            }
            for (int u = 0; u < hidden; ++u) {
                T acc = 0;
                for (int j = 0; j < c; ++j) acc += w2.at(j, u, 0, 0) * da2[j];
                da1[u] = a1_.at(i, u, 0, 0) > T(0) ? acc : T(0);
                gb1.v[u] += da1[u];
                for (int j = 0; j < c; ++j) {
                    gw1.at(u, j, 0, 0) += da1[u] * pooled_.at(i, j, 0, 0);
                    dpooled[j] += w1.at(u, j, 0, 0) * da1[u];
                }
            }
            for (int j = 0; j < c; ++j) {
                const T per_px = dpooled[j] / static_cast<T>(hw);
                T* gxp = gx.v.data() + gx.index(i, j, 0, 0);
                for (int k = 0; k < hw; ++k) gxp[k] += per_px;
            }
        }
        return gx;
    }

private:
    Tensor<T> x_, pooled_, a1_, r1_, gate_;
};

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Gradient routes to the first (row-major) maximal
// element of each window.
// ---------------------------------------------------------------------------
template <typename T>
struct MaxPool2 {
    Tensor<T> forward(const Tensor<T>& x) {
        if (x.h % 2 != 0 || x.w % 2 != 0) {
            throw ShapeError("maxpool2: spatial dims must be even, got " + x.shape_str());
        }
        in_shape_ = {x.n, x.c, x.h, x.w};
        Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
        argmax_.assign(y.size(), 0);
        std::size_t oi = 0;
        for (int i = 0; i < x.n; ++i) {
            for (int j = 0; j < x.c; ++j) {
                for (int y2 = 0; y2 < y.h; ++y2) {
                    for (int x2 = 0; x2 < y.w; ++x2, ++oi) {
                        T best{};
                        std::size_t best_idx = 0;
                        bool first = true;
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                const std::size_t idx =
                                    x.index(i, j, 2 * y2 + dy, 2 * x2 + dx);
                                if (first || x.v[idx] > best) {
                                    best = x.v[idx];
                                    best_idx = idx;
                                    first = false;
                                }
                            }
                        }
                        y.v[oi] = best;
                        argmax_[oi] = best_idx;
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        for (std::size_t oi = 0; oi < gy.v.size(); ++oi) {
            gx.v[argmax_[oi]] += gy.v[oi];
        }
        return gx;
    }

private:
    std::array<int, 4> in_shape_{};
    std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------
// 2x2 stride-2 transposed convolution: exact spatial doubling, no overlap.
// ---------------------------------------------------------------------------
template <typename T>
struct UpConv2 {
    int cin = 0, cout = 0;
    Tensor<T> w;  // (cin, cout, 2, 2)
    Tensor<T> b;  // (cout)
    Tensor<T> gw, gb;

    UpConv2() = default;
    UpConv2(int cin_, int cout_)
        : cin(cin_), cout(cout_), w(cin_, cout_, 2, 2), b(cout_, 1, 1, 1),
          gw(cin_, cout_, 2, 2), gb(cout_, 1, 1, 1) {}

    int fan_in() const { return cin * 4; }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != cin) throw ShapeError("upconv2: channel mismatch");
        x_ = x;
        Tensor<T> y(x.n, cout, 2 * x.h, 2 * x.w);
        for (int i = 0; i < x.n; ++i) {
            for (int co = 0; co < cout; ++co) {
                T* dst = y.v.data() + y.index(i, co, 0, 0);
                const std::size_t row = 2 * static_cast<std::size_t>(x.w);
                for (std::size_t k = 0; k < static_cast<std::size_t>(4) * x.h * x.w; ++k) {
                    dst[k] = b.v[co];
                }
                for (int ci = 0; ci < cin; ++ci) {
                    const T* src = x.v.data() + x.index(i, ci, 0, 0);
                    const T w00 = w.at(ci, co, 0, 0), w01 = w.at(ci, co, 0, 1);
                    const T w10 = w.at(ci, co, 1, 0), w11 = w.at(ci, co, 1, 1);
                    for (int yy = 0; yy < x.h; ++yy) {
                        T* out0 = dst + 2 * yy * row;
                        T* out1 = out0 + row;
                        const T* in = src + static_cast<std::size_t>(yy) * x.w;
                        for (int xx = 0; xx < x.w; ++xx) {
                            const T v = in[xx];
                            out0[2 * xx] += w00 * v;
                            out0[2 * xx + 1] += w01 * v;
                            out1[2 * xx] += w10 * v;
                            out1[2 * xx + 1] += w11 * v;
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Tensor<T>& x = x_;
        Tensor<T> gx(x.n, cin, x.h, x.w);
        const std::size_t row = 2 * static_cast<std::size_t>(x.w);
        for (int i = 0; i < x.n; ++i) {
            for (int co = 0; co < cout; ++co) {
                const T* g = gy.v.data() + gy.index(i, co, 0, 0);
                T gb_acc = 0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(4) * x.h * x.w; ++k) {
                    gb_acc += g[k];
                }
                gb.v[co] += gb_acc;
                for (int ci = 0; ci < cin; ++ci) {
                    const T* src = x.v.data() + x.index(i, ci, 0, 0);
                    T* gxp = gx.v.data() + gx.index(i, ci, 0, 0);
                    const T w00 = w.at(ci, co, 0, 0), w01 = w.at(ci, co, 0, 1);
                    const T w10 = w.at(ci, co, 1, 0), w11 = w.at(ci, co, 1, 1);
                    T gw00 = 0, gw01 = 0, gw10 = 0, gw11 = 0;
                    for (int yy = 0; yy < x.h; ++yy) {
                        const T* g0 = g + 2 * yy * row;
                        const T* g1 = g0 + row;
                        const T* in = src + static_cast<std::size_t>(yy) * x.w;
                        T* gxrow = gxp + static_cast<std::size_t>(yy) * x.w;
                        for (int xx = 0; xx < x.w; ++xx) {
                            const T v = in[xx];
                            gw00 += g0[2 * xx] * v;
                            gw01 += g0[2 * xx + 1] * v;
                            gw10 += g1[2 * xx] * v;
                            gw11 += g1[2 * xx + 1] * v;
                            gxrow[xx] += w00 * g0[2 * xx] + w01 * g0[2 * xx + 1] +
                                         w10 * g1[2 * xx] + w11 * g1[2 * xx + 1];
                        }
                    }
                    gw.at(ci, co, 0, 0) += gw00;
                    gw.at(ci, co, 0, 1) += gw01;
                    gw.at(ci, co, 1, 0) += gw10;
                    gw.at(ci, co, 1, 1) += gw11;
                }
            }
        }
        return gx;
    }

private:
    Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Channel concatenation and its adjoint.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ShapeError("concat_channels: N/H/W mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
    const std::size_t hw = static_cast<std::size_t>(a.h) * a.w;
    for (int i = 0; i < a.n; ++i) {
        std::copy_n(a.v.data() + a.index(i, 0, 0, 0), hw * a.c,
                    y.v.data() + y.index(i, 0, 0, 0));
        std::copy_n(b.v.data() + b.index(i, 0, 0, 0), hw * b.c,
                    y.v.data() + y.index(i, a.c, 0, 0));
    }
    return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& g, int ca) {
    if (ca < 1 || ca >= g.c) throw ShapeError("split_channels: bad split point");
    Tensor<T> a(g.n, ca, g.h, g.w), b(g.n, g.c - ca, g.h, g.w);
    const std::size_t hw = static_cast<std::size_t>(g.h) * g.w;
    for (int i = 0; i < g.n; ++i) {
        std::copy_n(g.v.data() + g.index(i, 0, 0, 0), hw * ca,
                    a.v.data() + a.index(i, 0, 0, 0));
        std::copy_n(g.v.data() + g.index(i, ca, 0, 0), hw * (g.c - ca),
                    b.v.data() + b.index(i, 0, 0, 0));
    }
    return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Per-pixel softmax over channels, max-subtracted for stability.
// ---------------------------------------------------------------------------
template <typename T>
struct SoftmaxChannels {
    Tensor<T> forward(const Tensor<T>& x) {
        y_ = Tensor<T>(x.n, x.c, x.h, x.w);
        const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
        for (int i = 0; i < x.n; ++i) {
            for (std::size_t k = 0; k < hw; ++k) {
                T mx = x.v[x.index(i, 0, 0, 0) + k];
                for (int j = 1; j < x.c; ++j) {
                    mx = std::max(mx, x.v[x.index(i, j, 0, 0) + k]);
                }
                T sum = 0;
                for (int j = 0; j < x.c; ++j) {
                    const T e = std::exp(x.v[x.index(i, j, 0, 0) + k] - mx);
                    y_.v[y_.index(i, j, 0, 0) + k] = e;
                    sum += e;
                }
                for (int j = 0; j < x.c; ++j) {
                    y_.v[y_.index(i, j, 0, 0) + k] /= sum;
                }
            }
        }
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        require_same_shape(gy, y_, "softmax backward");
        Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
        const std::size_t hw = static_cast<std::size_t>(gy.h) * gy.w;
        for (int i = 0; i < gy.n; ++i) {
            for (std::size_t k = 0; k < hw; ++k) {
                T dot = 0;
                for (int j = 0; j < gy.c; ++j) {
                    dot += gy.v[gy.index(i, j, 0, 0) + k] * y_.v[y_.index(i, j, 0, 0) + k];
                }
                for (int j = 0; j < gy.c; ++j) {
                    const std::size_t idx = gy.index(i, j, 0, 0) + k;
                    gx.v[idx] = y_.v[idx] * (gy.v[idx] - dot);
                }
            }
        }
        return gx;
    }

    const Tensor<T>& cached_output() const { return y_; }

private:
    Tensor<T> y_;
};

}  // namespace mieval::nn
