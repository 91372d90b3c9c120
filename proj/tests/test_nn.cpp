#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "mieval/nn/checkpoint.hpp"
#include "mieval/nn/layers.hpp"
#include "mieval/nn/losses.hpp"
#include "mieval/nn/optim.hpp"
#include "mieval/rng.hpp"

#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace mieval;
using namespace mieval::nn;

namespace {

/// Projection loss L = sum(r * y) turning any op into a scalar functional.
double projection_loss(const TensorD& y, const TensorD& r) {
    double l = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) l += y.v[i] * r.v[i];
    return l;
}

/// Uniform values with a guaranteed pairwise gap, for kinked ops (max-pool).
void fill_distinct(TensorD& t, Rng& rng) {
    std::vector<std::size_t> order(t.v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
        t.v[order[i]] = 0.05 * static_cast<double>(i) + rng.uniform(0.0, 0.02) - 1.0;
    }
}

/// Uniform values kept away from zero (ELU kink).
void fill_away_from_zero(TensorD& t, Rng& rng) {
    for (auto& v : t.v) {
        do {
            v = rng.uniform(-1.0, 1.0);
        } while (std::abs(v) < 1e-3);
    }
}

struct GradCheck {
    double worst = 0.0;

    /// Checks d(projection_loss)/d(values) against central differences.
    /// `forward` must recompute the loss from the current buffer contents;
    /// `analytic` is the gradient produced by one backward pass.
    void check(std::vector<double>& values, const std::vector<double>& analytic,
               const std::function<double()>& forward) {
        std::vector<double> a(analytic.begin(), analytic.end());
        worst = std::max(worst, oracle::finite_diff_max_rel_err(values, a, forward));
    }
};

}  // namespace

TEST_CASE("tensors cannot be empty") {
    CHECK_THROWS_AS(TensorD(1, 0, 2, 2), ShapeError);
    CHECK_THROWS_AS(TensorD(0, 1, 1, 1), ShapeError);
}

// ---------------------------------------------------------------------------
// forward-value oracles
// ---------------------------------------------------------------------------

TEST_CASE("conv2d: delta kernel reproduces the input") {
    Conv2d<double> conv(2, 2, 3);
    conv.w.fill(0.0);
    conv.w.at(0, 0, 1, 1) = 1.0;  // identity on channel 0
    conv.w.at(1, 1, 1, 1) = 1.0;  // identity on channel 1
    TensorD x(1, 2, 4, 5);
    Rng rng(1);
    testutil::fill_uniform(x, rng);
    const TensorD y = conv.forward(x);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        CHECK(y.v[i] == doctest::Approx(x.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d: all-ones 3x3 on a 3x3 ones image (hand-computed)") {
    Conv2d<double> conv(1, 1, 3);
    conv.w.fill(1.0);
    const TensorD x = TensorD::full(1, 1, 3, 3, 1.0);
    const TensorD y = conv.forward(x);
    CHECK(y.at(0, 0, 1, 1) == 9.0);
    CHECK(y.at(0, 0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 0, 2) == 4.0);
    CHECK(y.at(0, 0, 2, 0) == 4.0);
    CHECK(y.at(0, 0, 2, 2) == 4.0);
    CHECK(y.at(0, 0, 0, 1) == 6.0);
    CHECK(y.at(0, 0, 1, 0) == 6.0);
}

TEST_CASE("conv2d agrees with the direct-loop reference") {
    Rng rng(7);
    for (int round = 0; round < 6; ++round) {
        const int cin = 1 + int(rng.below(3));
        const int cout = 1 + int(rng.below(4));
        const int ksize = round % 2 ? 1 : 3;
        Conv2d<double> conv(cin, cout, ksize);
        testutil::fill_uniform(conv.w, rng);
        testutil::fill_uniform(conv.b, rng);
        TensorD x(1 + int(rng.below(2)), cin, 3 + int(rng.below(4)), 3 + int(rng.below(4)));
        testutil::fill_uniform(x, rng);
        const TensorD y = conv.forward(x);
        std::vector<double> bias(conv.b.v.begin(), conv.b.v.end());
        const TensorD ref = oracle::conv2d_ref(x, conv.w, bias, ksize);
        REQUIRE(y.same_shape(ref));
        for (std::size_t i = 0; i < y.v.size(); ++i) {
            CHECK(y.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("conv2d: 32 filters on a 256x256 single-channel input") {
    Conv2d<float> conv(1, 32, 3);
    Rng rng(3);
    he_init(conv.w, conv.fan_in(), rng);
    TensorF x(1, 1, 256, 256);
    testutil::fill_uniform(x, rng);
    const TensorF y = conv.forward(x);
    CHECK(y.shape() == std::array<int, 4>{1, 32, 256, 256});
}

TEST_CASE("conv2d rejects channel mismatch") {
    Conv2d<double> conv(3, 4, 3);
    TensorD x(1, 2, 4, 4);
    CHECK_THROWS_AS(conv.forward(x), ShapeError);
}

TEST_CASE("elu values") {
    Elu<double> elu;
    TensorD x(1, 1, 1, 3);
    x.v = {0.0, 5.0, -1.0};
    const TensorD y = elu.forward(x);
    CHECK(y.v[0] == 0.0);
    CHECK(y.v[1] == 5.0);
    CHECK(y.v[2] == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));

    // analytic derivative at -1 is e^-1
    TensorD gy = TensorD::full(1, 1, 1, 3, 1.0);
    const TensorD gx = elu.backward(gy);
    CHECK(gx.v[2] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("batch_norm train-mode statistics and shift") {
    BatchNorm2d<double> bn(3);
    TensorD x(2, 3, 4, 4);
    Rng rng(11);
    testutil::fill_uniform(x, rng, -4.0, 4.0);
    bn.beta.v = {0.5, -1.0, 2.0};
    const TensorD y = bn.forward(x, true);

    for (int j = 0; j < 3; ++j) {
        double mean = 0.0, var = 0.0;
        int m = 0;
        for (int i = 0; i < 2; ++i) {
            for (int k = 0; k < 16; ++k) {
                mean += y.v[y.index(i, j, 0, 0) + k];
                ++m;
            }
        }
        mean /= m;
        for (int i = 0; i < 2; ++i) {
            for (int k = 0; k < 16; ++k) {
                const double d = y.v[y.index(i, j, 0, 0) + k] - mean;
                var += d * d;
            }
        }
        var /= m;
        CHECK(mean == doctest::Approx(bn.beta.v[j]).epsilon(1e-5));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("batch_norm is well-defined at batch size 1 (normalizes spatially)") {
    BatchNorm2d<double> bn(2);
    TensorD x(1, 2, 4, 4);
    Rng rng(12);
    testutil::fill_uniform(x, rng, -3, 3);
    const TensorD y = bn.forward(x, true);
    for (int j = 0; j < 2; ++j) {
        double mean = 0, var = 0;
        for (int k = 0; k < 16; ++k) mean += y.v[y.index(0, j, 0, 0) + k];
        mean /= 16;
        for (int k = 0; k < 16; ++k) {
            const double d = y.v[y.index(0, j, 0, 0) + k] - mean;
            var += d * d;
        }
        var /= 16;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("batch_norm infer mode before any training step uses (0, 1)") {
    BatchNorm2d<double> bn(1);
    TensorD x(1, 1, 2, 2);
    x.v = {1.0, 2.0, 3.0, 4.0};
    const TensorD y = bn.forward(x, false);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        CHECK(y.v[i] == doctest::Approx(x.v[i] / std::sqrt(1.0 + 1e-5)).epsilon(1e-9));
    }
}

TEST_CASE("se_block: zeroed excitation weights gate every channel by 0.5") {
    SEBlock<double> se(4, 16);
    TensorD x(2, 4, 3, 3);
    Rng rng(13);
    testutil::fill_uniform(x, rng);
    const TensorD y = se.forward(x);  // weights default to zero -> sigmoid(0)
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        CHECK(y.v[i] == doctest::Approx(0.5 * x.v[i]).epsilon(1e-12));
    }
    CHECK(se.hidden == 2);  // max(4/16, 2)
}

TEST_CASE("se_block squeeze of a constant channel is that constant") {
    SEBlock<double> se(2, 2);
    Rng rng(14);
    testutil::fill_uniform(se.w1, rng);
    testutil::fill_uniform(se.w2, rng);
    TensorD x(1, 2, 5, 5);
    for (int k = 0; k < 25; ++k) {
        x.v[k] = 3.25;
        x.v[25 + k] = -0.75;
    }
    TensorD xc = x;
    se.forward(xc);
    // squeeze result is not exposed; verify via a second SE with identity
    // behaviour: gate depends only on the pooled constants, so all pixels of
    // a channel share one gate and y / x is constant per channel
    const TensorD y = se.forward(x);
    const double g0 = y.v[0] / x.v[0];
    const double g1 = y.v[25] / x.v[25];
    for (int k = 0; k < 25; ++k) {
        CHECK(y.v[k] / x.v[k] == doctest::Approx(g0).epsilon(1e-12));
        CHECK(y.v[25 + k] / x.v[25 + k] == doctest::Approx(g1).epsilon(1e-12));
    }
}

TEST_CASE("maxpool2 values, tie-break and shapes") {
    MaxPool2<double> pool;
    TensorD x(1, 1, 2, 2);
    x.v = {1, 2, 3, 4};
    const TensorD y = pool.forward(x);
    CHECK(y.v.size() == 1);
    CHECK(y.v[0] == 4.0);

    // constant window: gradient routed to the first (row-major) element
    TensorD c = TensorD::full(1, 1, 2, 2, 7.0);
    pool.forward(c);
    TensorD gy = TensorD::full(1, 1, 1, 1, 1.0);
    const TensorD gx = pool.backward(gy);
    CHECK(gx.v[0] == 1.0);
    CHECK(gx.v[1] == 0.0);
    CHECK(gx.v[2] == 0.0);
    CHECK(gx.v[3] == 0.0);

    TensorD odd(1, 1, 3, 4);
    CHECK_THROWS_AS(pool.forward(odd), ShapeError);

    TensorD big(1, 1, 256, 256);
    const TensorD half = pool.forward(big);
    CHECK(half.h == 128);
    CHECK(half.w == 128);
}

TEST_CASE("upconv2 all-ones kernel tiles each input value into a 2x2 block") {
    UpConv2<double> up(1, 1);
    up.w.fill(1.0);
    TensorD x(1, 1, 2, 3);
    Rng rng(15);
    testutil::fill_uniform(x, rng);
    const TensorD y = up.forward(x);
    CHECK(y.h == 4);
    CHECK(y.w == 6);
    for (int yy = 0; yy < 2; ++yy) {
        for (int xx = 0; xx < 3; ++xx) {
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    CHECK(y.at(0, 0, 2 * yy + dy, 2 * xx + dx) ==
                          doctest::Approx(x.at(0, 0, yy, xx)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("upconv2 agrees with the scatter reference") {
    Rng rng(16);
    UpConv2<double> up(3, 2);
    testutil::fill_uniform(up.w, rng);
    testutil::fill_uniform(up.b, rng);
    TensorD x(2, 3, 4, 5);
    testutil::fill_uniform(x, rng);
    const TensorD y = up.forward(x);
    std::vector<double> bias(up.b.v.begin(), up.b.v.end());
    const TensorD ref = oracle::upconv2_ref(x, up.w, bias);
    REQUIRE(y.same_shape(ref));
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        CHECK(y.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-10));
    }

    TensorF x16(1, 1, 16, 16);
    UpConv2<float> up16(1, 1);
    CHECK(up16.forward(x16).h == 32);
}

TEST_CASE("concat_channels stacks and split_channels inverts") {
    Rng rng(17);
    TensorD a(2, 32, 3, 3), b(2, 64, 3, 3);
    testutil::fill_uniform(a, rng);
    testutil::fill_uniform(b, rng);
    const TensorD y = concat_channels(a, b);
    CHECK(y.c == 96);
    const auto [a2, b2] = split_channels(y, 32);
    CHECK(a2.v == a.v);
    CHECK(b2.v == b.v);

    TensorD c(2, 1, 4, 3);
    CHECK_THROWS_AS(concat_channels(a, c), ShapeError);
}

TEST_CASE("softmax_channels values and invariances") {
    SoftmaxChannels<double> sm;
    TensorD x(1, 4, 1, 1);
    x.fill(0.7);
    const TensorD y = sm.forward(x);
    for (double v : y.v) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    TensorD two(1, 2, 1, 1);
    two.v = {0.0, std::log(3.0)};
    const TensorD y2 = sm.forward(two);
    CHECK(y2.v[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(y2.v[1] == doctest::Approx(0.75).epsilon(1e-9));

    Rng rng(19);
    TensorD logits(2, 5, 3, 3);
    testutil::fill_uniform(logits, rng, -10, 10);
    const TensorD p = sm.forward(logits);
    TensorD shifted = logits;
    for (auto& v : shifted.v) v += 123.456;
    const TensorD p2 = sm.forward(shifted);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        CHECK(std::abs(p.v[i] - p2.v[i]) < 1e-9);
        CHECK(p.v[i] >= 0.0);
    }
    // per-pixel simplex
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 9; ++k) {
            double sum = 0.0;
            for (int j = 0; j < 5; ++j) sum += p.v[p.index(i, j, 0, 0) + k];
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

TEST_CASE("dice_loss closed forms") {
    // perfect one-hot prediction -> exactly 0 (the smoothing cancels)
    TensorD target(1, 2, 2, 2);
    target.v = {1, 0, 0, 1, 0, 1, 1, 0};
    const auto perfect = dice_loss(target, target);
    CHECK(perfect.value == doctest::Approx(0.0).epsilon(1e-12));

    // uniform prediction on a single one-hot pixel, K = 2, smooth = 1:
    // class0: (2*0.5 + 1)/(0.5 + 1 + 1) = 0.8
    // class1: (0 + 1)/(0.5 + 0 + 1) = 2/3
    // loss = 1 - (0.8 + 2/3)/2 = 4/15
    TensorD p(1, 2, 1, 1), g(1, 2, 1, 1);
    p.v = {0.5, 0.5};
    g.v = {1.0, 0.0};
    const auto uniform = dice_loss(p, g);
    CHECK(uniform.value == doctest::Approx(4.0 / 15.0).epsilon(1e-12));

    TensorD wrong(1, 3, 1, 1);
    CHECK_THROWS_AS(dice_loss(wrong, g), ShapeError);
}

TEST_CASE("cross_entropy_loss closed forms") {
    TensorD target(1, 4, 2, 2);
    Rng rng(23);
    for (int k = 0; k < 4; ++k) {
        target.v[target.index(0, int(rng.below(4)), 0, 0) + k] = 1.0;
    }
    const auto perfect = cross_entropy_loss(target, target);
    CHECK(perfect.value <= 1e-6);

    TensorD uniform = TensorD::full(1, 4, 2, 2, 0.25);
    const auto u = cross_entropy_loss(uniform, target);
    CHECK(u.value == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("combined_loss is the mean of its parts") {
    Rng rng(29);
    SoftmaxChannels<double> sm;
    TensorD logits(2, 3, 4, 4);
    testutil::fill_uniform(logits, rng);
    const TensorD probs = sm.forward(logits);
    TensorD target(2, 3, 4, 4);
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 16; ++k) {
            target.v[target.index(i, int(rng.below(3)), 0, 0) + k] = 1.0;
        }
    }
    const auto dice = dice_loss(probs, target);
    const auto ce = cross_entropy_loss(probs, target);
    const auto both = combined_loss(probs, target);
    CHECK(both.value == doctest::Approx((dice.value + ce.value) / 2).epsilon(1e-12));
    CHECK(both.value >= 0.0);
    for (std::size_t i = 0; i < both.grad.v.size(); ++i) {
        CHECK(both.grad.v[i] ==
              doctest::Approx((dice.grad.v[i] + ce.grad.v[i]) / 2).epsilon(1e-12));
    }

    // perfect prediction scores (numerically) zero
    const auto perfect = combined_loss(target, target);
    CHECK(perfect.value <= 1e-6);
}

// ---------------------------------------------------------------------------
// init + optimizer + checkpoint
// ---------------------------------------------------------------------------

TEST_CASE("he_init sampling statistics") {
    Rng rng(31);
    TensorD w(100, 10, 10, 10);  // 1e5 samples
    he_init(w, 8, rng);
    double mean = 0.0;
    for (double v : w.v) mean += v;
    mean /= w.v.size();
    double var = 0.0;
    for (double v : w.v) var += (v - mean) * (v - mean);
    var /= w.v.size();
    CHECK(std::abs(var - 0.25) < 0.0125);  // within 5% of 2/8
    CHECK(std::abs(mean) < 3.0 * 0.5 / std::sqrt(1e5));

    Rng rng_a(77), rng_b(77);
    TensorD w1(2, 3, 3, 3), w2(2, 3, 3, 3);
    he_init(w1, 27, rng_a);
    he_init(w2, 27, rng_b);
    CHECK(w1.v == w2.v);

    CHECK_THROWS_AS(he_init(w1, 0, rng_a), ShapeError);
}

TEST_CASE("adam_step closed forms") {
    TensorD p = TensorD::full(1, 1, 1, 1, 1.0);
    TensorD g(1, 1, 1, 1);
    std::vector<ParamRef<double>> params{{"p", &p, &g}};
    AdamState<double> st;
    st.init(std::span<const ParamRef<double>>(params));

    // zero gradient leaves the parameter unchanged
    adam_step(std::span<const ParamRef<double>>(params), st);
    CHECK(p.v[0] == 1.0);

    // unit gradient moves by ~ -lr after bias correction
    st.init(std::span<const ParamRef<double>>(params));
    g.v[0] = 1.0;
    adam_step(std::span<const ParamRef<double>>(params), st);
    CHECK(std::abs(p.v[0] - (1.0 - 1e-3)) < 1e-6);
    CHECK(st.t == 1);

    // repeated identical gradients keep moving against the gradient sign
    const double before = p.v[0];
    adam_step(std::span<const ParamRef<double>>(params), st);
    const double mid = p.v[0];
    adam_step(std::span<const ParamRef<double>>(params), st);
    CHECK(mid < before);
    CHECK(p.v[0] < mid);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    Rng rng(37);
    TensorF a(2, 3, 4, 5);
    TensorD b(1, 1, 2, 2);
    testutil::fill_normal(a, rng);
    testutil::fill_normal(b, rng);

    Checkpoint ckpt;
    ckpt.push_back(to_blob("layer.w", a));
    ckpt.push_back(to_blob("layer.b", b));
    ckpt.push_back(scalar_blob("step", 41));

    const auto bytes = serialize_checkpoint(ckpt);
    const Checkpoint back = deserialize_checkpoint(bytes);
    REQUIRE(back.size() == 3);

    TensorF a2;
    from_blob(*find_blob(back, "layer.w"), a2);
    CHECK(a2.v == a.v);
    TensorD b2;
    from_blob(*find_blob(back, "layer.b"), b2);
    CHECK(b2.v == b.v);
    CHECK(scalar_from_blob(*find_blob(back, "step")) == 41);

    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint(corrupt), DataError);
    corrupt = bytes;
    corrupt.resize(bytes.size() - 4);
    CHECK_THROWS_AS(deserialize_checkpoint(corrupt), DataError);
}

// ---------------------------------------------------------------------------
// gradient suite: every differentiable op against central finite differences
// ---------------------------------------------------------------------------

TEST_CASE("gradient check: conv2d") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{1, 1, 4, 4}, {2, 2, 3, 5}, {1, 3, 6, 4}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 1000 + sh[1]);
            Conv2d<double> conv(sh[1], 1 + int(rng.below(3)), 3);
            testutil::fill_uniform(conv.w, rng);
            testutil::fill_uniform(conv.b, rng);
            TensorD x(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(x, rng);
            TensorD r(sh[0], conv.cout, sh[2], sh[3]);
            testutil::fill_uniform(r, rng);

            auto loss = [&]() { return projection_loss(conv.forward(x), r); };
            loss();
            conv.gw.fill(0);
            conv.gb.fill(0);
            const TensorD gx = conv.backward(r);
            gc.check(x.v, gx.v, loss);
            gc.check(conv.w.v, conv.gw.v, loss);
            gc.check(conv.b.v, conv.gb.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

TEST_CASE("gradient check: elu") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (int shape = 0; shape < 3; ++shape) {
            Rng rng(seed * 100 + shape);
            Elu<double> elu;
            TensorD x(1 + shape, 2, 3, 2 + shape);
            fill_away_from_zero(x, rng);
            TensorD r(x.n, x.c, x.h, x.w);
            testutil::fill_uniform(r, rng);
            auto loss = [&]() { return projection_loss(elu.forward(x), r); };
            loss();
            const TensorD gx = elu.backward(r);
            gc.check(x.v, gx.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

TEST_CASE("gradient check: batch_norm (train mode)") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{2, 3, 4, 4}, {1, 2, 4, 6}, {3, 1, 2, 5}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 300 + sh[1]);
            BatchNorm2d<double> bn(sh[1]);
            testutil::fill_uniform(bn.gamma, rng, 0.5, 1.5);
            testutil::fill_uniform(bn.beta, rng);
            TensorD x(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(x, rng, -2, 2);
            TensorD r(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(r, rng);

            // freeze running stats so repeated forwards see identical state
            auto loss = [&]() {
                BatchNorm2d<double> probe = bn;
                return projection_loss(probe.forward(x, true), r);
            };
            bn.forward(x, true);
            bn.ggamma.fill(0);
            bn.gbeta.fill(0);
            const TensorD gx = bn.backward(r);
            gc.check(x.v, gx.v, loss);
            gc.check(bn.gamma.v, bn.ggamma.v, loss);
            gc.check(bn.beta.v, bn.gbeta.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

TEST_CASE("gradient check: se_block") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{1, 4, 2, 2}, {2, 3, 3, 3}, {1, 6, 2, 4}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 500 + sh[1]);
            SEBlock<double> se(sh[1], 2);
            testutil::fill_uniform(se.w1, rng);
            testutil::fill_uniform(se.b1, rng, -0.2, 0.2);
            testutil::fill_uniform(se.w2, rng);
            testutil::fill_uniform(se.b2, rng, -0.2, 0.2);
            TensorD x(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(x, rng);
            TensorD r(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(r, rng);

            auto loss = [&]() { return projection_loss(se.forward(x), r); };
            loss();
            se.gw1.fill(0);
            se.gb1.fill(0);
            se.gw2.fill(0);
            se.gb2.fill(0);
            const TensorD gx = se.backward(r);
            gc.check(x.v, gx.v, loss);
            gc.check(se.w1.v, se.gw1.v, loss);
            gc.check(se.b1.v, se.gb1.v, loss);
            gc.check(se.w2.v, se.gw2.v, loss);
            gc.check(se.b2.v, se.gb2.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

TEST_CASE("gradient check: maxpool2") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{1, 1, 4, 4}, {2, 2, 6, 4}, {1, 3, 2, 8}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 700 + sh[2]);
            MaxPool2<double> pool;
            TensorD x(sh[0], sh[1], sh[2], sh[3]);
            fill_distinct(x, rng);
            TensorD r(sh[0], sh[1], sh[2] / 2, sh[3] / 2);
            testutil::fill_uniform(r, rng);
            auto loss = [&]() { return projection_loss(pool.forward(x), r); };
            loss();
            const TensorD gx = pool.backward(r);
            gc.check(x.v, gx.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

TEST_CASE("gradient check: upconv2") {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{1, 1, 3, 3}, {2, 2, 2, 4}, {1, 3, 4, 2}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 900 + sh[1]);
            UpConv2<double> up(sh[1], 1 + int(rng.below(3)));
            testutil::fill_uniform(up.w, rng);
            testutil::fill_uniform(up.b, rng);
            TensorD x(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(x, rng);
            TensorD r(sh[0], up.cout, 2 * sh[2], 2 * sh[3]);
            testutil::fill_uniform(r, rng);
            auto loss = [&]() { return projection_loss(up.forward(x), r); };
            loss();
            up.gw.fill(0);
            up.gb.fill(0);
            const TensorD gx = up.backward(r);
            gc.check(x.v, gx.v, loss);
            gc.check(up.w.v, up.gw.v, loss);
            gc.check(up.b.v, up.gb.v, loss);
        }
    }
    CHECK(gc.worst < 1e-4);
}

namespace {

/// Shared harness for the loss-through-softmax gradient checks.
template <typename LossFn>
double loss_grad_worst(LossFn&& fn) {
    GradCheck gc;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::array<std::array<int, 4>, 3> shapes{
            {{1, 2, 2, 2}, {2, 3, 3, 2}, {1, 4, 4, 4}}};
        for (const auto& sh : shapes) {
            Rng rng(seed * 1300 + sh[1]);
            SoftmaxChannels<double> sm;
            TensorD logits(sh[0], sh[1], sh[2], sh[3]);
            testutil::fill_uniform(logits, rng, -2, 2);
            TensorD target(sh[0], sh[1], sh[2], sh[3]);
            for (int i = 0; i < sh[0]; ++i) {
                for (int k = 0; k < sh[2] * sh[3]; ++k) {
                    target.v[target.index(i, int(rng.below(sh[1])), 0, 0) + k] = 1.0;
                }
            }
            auto loss = [&]() { return fn(sm.forward(logits), target).value; };
            const auto lg = fn(sm.forward(logits), target);
            const TensorD gx = sm.backward(lg.grad);
            gc.check(logits.v, gx.v, loss);
        }
    }
    return gc.worst;
}

}  // namespace

TEST_CASE("gradient check: softmax + cross entropy") {
    CHECK(loss_grad_worst([](const TensorD& p, const TensorD& g) {
              return cross_entropy_loss(p, g);
          }) < 1e-4);
}

TEST_CASE("gradient check: dice loss through softmax") {
    CHECK(loss_grad_worst([](const TensorD& p, const TensorD& g) {
              return dice_loss(p, g);
          }) < 1e-4);
}

TEST_CASE("gradient check: combined loss through softmax") {
    CHECK(loss_grad_worst([](const TensorD& p, const TensorD& g) {
              return combined_loss(p, g);
          }) < 1e-4);
}
