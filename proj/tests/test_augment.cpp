#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "taug/augment.hpp"
#include "taug/gradcheck.hpp"

using namespace taug;

namespace {

ImageBatch random_batch(int b, int h, int w, int k, RngStream& rng) {
    ImageBatch batch;
    batch.pixels = Tensor::create({b, h, w, 3});
    for (auto& v : batch.pixels->value) v = rng.uniform();
    batch.labels = Tensor::create({b, k});
    batch.label_ids.resize(b);
    for (int i = 0; i < b; ++i) {
        const int l = static_cast<int>(rng.uniform_int(k));
        batch.label_ids[i] = l;
        batch.labels->value[i * k + l] = 1;
    }
    return batch;
}

AugmentationPolicy random_policy(int noise_dim, int ctx_dim, std::uint64_t seed,
                                 Real weight_scale = 0.3) {
    auto rng = RngStream::from_seed(seed);
    auto p = AugmentationPolicy::create(noise_dim, ctx_dim, rng, 0.8);
    // randomize everything, including the zero-initialized output layers
    for (auto& np : p.params("p"))
        for (auto& v : np.tensor->value) v = rng.normal() * weight_scale;
    return p;
}

TensorPtr pick_scalar(Tape& tape, const TensorPtr& t, RngStream& rng) {
    auto w = Tensor::create(t->shape, false);
    for (auto& v : w->value) v = rng.uniform(-1.0, 1.0);
    return ops::sum_all(tape, ops::mul(tape, t, w));
}

}  // namespace

TEST_CASE("triangle_wave: identity on [0,1], reflection, evenness") {
    Tape tape;
    auto x = Tensor::from_data({3}, {0.3, 1.2, -0.4});
    auto y = ops::triangle_wave(tape, x);
    CHECK(y->value[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(y->value[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(y->value[2] == doctest::Approx(0.4).epsilon(1e-15));

    auto rng = RngStream::from_seed(1);
    for (int i = 0; i < 10000; ++i) {
        const Real v = rng.uniform(-8.0, 8.0);
        Tape t;
        auto a = Tensor::from_data({1}, {v});
        const Real tv = ops::triangle_wave(t, a)->value[0];
        CHECK(tv >= 0.0);
        CHECK(tv <= 1.0);
        auto b = Tensor::from_data({1}, {v + 2.0});
        CHECK(ops::triangle_wave(t, b)->value[0] == doctest::Approx(tv).epsilon(1e-9));
        auto c = Tensor::from_data({1}, {-v});
        CHECK(ops::triangle_wave(t, c)->value[0] == doctest::Approx(tv).epsilon(1e-12));
        if (v >= 0.0 && v <= 1.0) CHECK(tv == v);
    }
}

TEST_CASE("triangle_wave matches arccos(cos(pi x))/pi") {
    auto rng = RngStream::from_seed(2);
    Tape tape;
    for (int i = 0; i < 1000; ++i) {
        const Real v = rng.uniform(-10.0, 10.0);
        auto a = Tensor::from_data({1}, {v});
        const Real got = ops::triangle_wave(tape, a)->value[0];
        const Real want = std::acos(std::cos(v * M_PI)) / M_PI;
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("color_params: zero-initialized models give exact identity params") {
    auto rng = RngStream::from_seed(3);
    auto init = rng.split(0);
    auto policy = AugmentationPolicy::create(16, 3, init, 0.8);
    auto batch = random_batch(4, 8, 8, 3, rng);
    Tape tape;
    auto flat = ops::reshape(tape, batch.pixels, {4 * 64, 3});
    auto z = Tensor::create({4, 16});
    rng.fill_normal(z->value);
    auto drop = rng.split(1);
    auto cp = color_params(tape, policy, flat, z, batch.labels, drop, true);
    for (Real v : cp.alpha->value) CHECK(v == 1.0);
    for (Real v : cp.beta->value) CHECK(v == 0.0);
}

TEST_CASE("color_params: ranges hold for arbitrary weights") {
    for (int seed = 0; seed < 4; ++seed) {
        auto policy = random_policy(16, 3, 40 + seed, 2.0);
        auto rng = RngStream::from_seed(seed);
        auto batch = random_batch(8, 8, 8, 3, rng);
        Tape tape;
        auto flat = ops::reshape(tape, batch.pixels, {8 * 64, 3});
        auto z = Tensor::create({8, 16});
        rng.fill_normal(z->value);
        auto drop = rng.split(1);
        auto cp = color_params(tape, policy, flat, z, batch.labels, drop, true);
        for (Real v : cp.alpha->value) {
            CHECK(v > 0.6);
            CHECK(v < 1.4);
        }
        for (Real v : cp.beta->value) {
            CHECK(v > -0.4);
            CHECK(v < 0.4);
        }
    }
}

TEST_CASE("color_params: gradient of mean(alpha) w.r.t. rgb path weights") {
    for (int seed = 0; seed < 8; ++seed) {
        auto policy = random_policy(8, 3, 60 + seed, 0.2);
        auto rng = RngStream::from_seed(900 + seed);
        auto batch = random_batch(3, 4, 4, 3, rng);
        auto z = Tensor::create({3, 8});
        rng.fill_normal(z->value);
        auto drop_rng = rng.split(2);
        auto fn = [&](Tape& t) {
            auto m = drop_rng;
            auto flat = ops::reshape(t, batch.pixels, {3 * 16, 3});
            auto cp = color_params(t, policy, flat, z, batch.labels, m, true);
            return ops::add(t, ops::mean_all(t, cp.alpha), ops::mean_all(t, cp.beta));
        };
        std::vector<TensorPtr> params = {policy.color.rgb.l1.weight, policy.color.rgb.l2.weight,
                                         policy.color.rgb.l3.weight, policy.color.rgb.l3.bias,
                                         policy.color.noise.l1.weight,
                                         policy.color.noise.l3.weight};
        auto probe = rng.split(3);
        auto res = check_gradients("color_params", fn, params, 4, 1e-5, 1e-4, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "seed=", seed, " max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("apply_color: identity, wrap-around, range safety") {
    Tape tape;
    auto x = Tensor::from_data({1, 3}, {0.2, 0.5, 0.8});
    auto a1 = Tensor::full({1, 3}, 1.0);
    auto b0 = Tensor::full({1, 3}, 0.0);
    auto y = apply_color(tape, x, a1, b0);
    for (int i = 0; i < 3; ++i) CHECK(y->value[i] == x->value[i]);

    // alpha=1, beta=0.4, x=0.8 -> t(1.2) = 0.8
    auto b4 = Tensor::full({1, 3}, 0.4);
    auto y2 = apply_color(tape, x, a1, b4);
    CHECK(y2->value[2] == doctest::Approx(0.8).epsilon(1e-12));

    auto rng = RngStream::from_seed(4);
    for (int i = 0; i < 10000; ++i) {
        auto xv = Tensor::from_data({1, 1}, {rng.uniform()});
        auto av = Tensor::from_data({1, 1}, {1.4});
        auto bv = Tensor::from_data({1, 1}, {-0.4});
        const Real out = apply_color(tape, xv, av, bv)->value[0];
        CHECK(out >= 0.0);
        CHECK(out <= 1.0);
    }
}

TEST_CASE("geo_params: zero init gives zero residual, ranges always hold") {
    auto rng = RngStream::from_seed(5);
    auto init = rng.split(0);
    auto policy = AugmentationPolicy::create(16, 0, init, 0.8);
    Tape tape;
    auto z = Tensor::create({6, 16});
    rng.fill_normal(z->value);
    auto drop = rng.split(1);
    auto a = geo_params(tape, policy, z, nullptr, drop, true);
    for (Real v : a->value) CHECK(v == 0.0);

    for (int seed = 0; seed < 4; ++seed) {
        auto p2 = random_policy(16, 0, 70 + seed, 3.0);
        auto drop2 = rng.split(100 + seed);
        auto a2 = geo_params(tape, p2, z, nullptr, drop2, true);
        for (Real v : a2->value) {
            CHECK(v > -0.25);
            CHECK(v < 0.25);
        }
    }
}

TEST_CASE("geo_params gradient vs finite differences") {
    for (int seed = 0; seed < 5; ++seed) {
        auto policy = random_policy(8, 0, 80 + seed);
        auto rng = RngStream::from_seed(1000 + seed);
        auto z = Tensor::create({4, 8});
        rng.fill_normal(z->value);
        auto fr = rng.split(1);
        auto drop_rng = rng.split(2);
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto m = drop_rng;
            return pick_scalar(t, geo_params(t, policy, z, nullptr, m, true), r);
        };
        std::vector<TensorPtr> params;
        for (auto& np : policy.params("p")) params.push_back(np.tensor);
        auto probe = rng.split(3);
        auto res = check_gradients("geo_params", fn, params, 4, 1e-5, 1e-4, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "seed=", seed, " max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("affine_warp: zero residual is the identity up to resampling") {
    auto rng = RngStream::from_seed(6);
    Tape tape;
    auto x = Tensor::create({2, 8, 8, 3});
    for (auto& v : x->value) v = rng.uniform();
    auto a0 = Tensor::create({2, 6});
    auto y = ops::affine_warp(tape, x, a0);
    for (std::int64_t i = 0; i < x->size(); ++i)
        CHECK(std::fabs(y->value[i] - x->value[i]) < 1e-6);
}

TEST_CASE("affine_warp: grid-aligned translation matches integer-shift oracle") {
    auto rng = RngStream::from_seed(7);
    Tape tape;
    const int h = 8, w = 8;
    auto x = Tensor::create({1, h, w, 3});
    for (auto& v : x->value) v = rng.uniform();
    // t_x = 2k/W shifts sampling by exactly k pixels: out[y][x] = in[y][x+k]
    const int k = 2;
    auto a = Tensor::create({1, 6});
    a->value[2] = 2.0 * k / w;
    auto y = ops::affine_warp(tape, x, a);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            for (int c = 0; c < 3; ++c) {
                const int sx = xx + k;
                const Real want =
                    sx < w ? x->value[(static_cast<std::size_t>(yy) * w + sx) * 3 + c] : 0.0;
                CHECK(y->value[(static_cast<std::size_t>(yy) * w + xx) * 3 + c] ==
                      doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("affine_warp gradient vs finite differences") {
    for (int seed = 0; seed < 8; ++seed) {
        auto rng = RngStream::from_seed(1100 + seed);
        auto x = Tensor::create({2, 6, 6, 3}, true);
        for (auto& v : x->value) v = rng.uniform();
        auto a = Tensor::create({2, 6}, true);
        for (auto& v : a->value) v = rng.uniform(-0.2, 0.2);
        auto fr = rng.split(1);
        auto fn = [&](Tape& t) {
            auto r = fr;
            return pick_scalar(t, ops::affine_warp(t, x, a), r);
        };
        auto probe = rng.split(2);
        auto res = check_gradients("affine_warp", fn, {x, a}, 10, 1e-5, 1e-3, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "seed=", seed, " max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("sample_gate: median draw and activation law") {
    // fixed U=0.5 -> L=0 -> w = sigmoid(log p / tau)
    Tape tape;
    auto logit = Tensor::scalar(0.4);
    auto w = gate_weights(tape, logit, {0.0}, 0.05);
    const Real p = 1.0 / (1.0 + std::exp(-0.4));
    CHECK(w->value[0] == doctest::Approx(1.0 / (1.0 + std::pow(p, -1.0 / 0.05))).epsilon(1e-9));

    // tau=0.05, p=0.5: fraction with w > 0.5 equals p/(1+p) = 1/3
    auto rng = RngStream::from_seed(8);
    const int n = 100000;
    int over = 0;
    for (int i = 0; i < n; ++i)
        if (sample_gate(0.0, 0.05, rng) > 0.5) ++over;
    CHECK(static_cast<Real>(over) / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    CHECK(std::fabs(static_cast<Real>(over) / n - 1.0 / 3.0) < 0.01);
}

TEST_CASE("sample_gate: dw/dp matches finite differences at fixed draws") {
    auto rng = RngStream::from_seed(9);
    for (int seed = 0; seed < 20; ++seed) {
        auto logit = Tensor::scalar(rng.uniform(-1.5, 1.5), true);
        // keep the draw in the gate's active region so the derivative is
        // finite-difference measurable at tau = 0.05
        const Real logp = -std::log1p(std::exp(-logit->value[0]));
        const Real draw = rng.uniform(-0.4, 0.4) - logp;
        auto fn = [&](Tape& t) { return gate_weights(t, logit, {draw}, 0.05); };
        auto probe = rng.split(seed);
        auto res = check_gradients("gate", fn, {logit}, 1, 1e-7, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("blend_gate: endpoints and midpoint") {
    Tape tape;
    ColorParams cp;
    cp.alpha = Tensor::full({2, 3}, 1.4);
    cp.beta = Tensor::full({2, 3}, -0.2);
    auto residual = Tensor::full({1, 6}, 0.2);

    auto w1 = Tensor::from_data({1}, {1.0});
    auto g1 = blend_gate(tape, w1, cp, 2, w1, residual);
    CHECK(g1.alpha_hat->value[0] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(g1.beta_hat->value[0] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(g1.residual_hat->value[0] == doctest::Approx(0.2).epsilon(1e-15));

    auto w0 = Tensor::from_data({1}, {0.0});
    auto g0 = blend_gate(tape, w0, cp, 2, w0, residual);
    CHECK(g0.alpha_hat->value[0] == 1.0);
    CHECK(g0.beta_hat->value[0] == 0.0);
    CHECK(g0.residual_hat->value[0] == 0.0);

    auto wh = Tensor::from_data({1}, {0.5});
    auto gh = blend_gate(tape, wh, cp, 2, wh, residual);
    CHECK(gh.alpha_hat->value[0] == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("augment: exact identity at zero initialization") {
    auto rng = RngStream::from_seed(10);
    auto init = rng.split(0);
    auto policy = AugmentationPolicy::create(32, 3, init, 0.8);
    auto batch = random_batch(6, 16, 16, 3, rng);
    Tape tape;
    tape.set_enabled(false);
    auto aug_rng = rng.split(1);
    auto res = augment(tape, policy, batch, aug_rng);
    Real max_diff = 0;
    for (std::int64_t i = 0; i < batch.pixels->size(); ++i)
        max_diff = std::max(max_diff, std::fabs(res.pixels->value[i] - batch.pixels->value[i]));
    CHECK(max_diff < 1e-6);
    // with the residual-form blend the identity is exact
    CHECK(max_diff == 0.0);
}

TEST_CASE("augment: same seed twice gives bit-identical output") {
    auto policy = random_policy(16, 3, 11);
    auto rng = RngStream::from_seed(12);
    auto batch = random_batch(4, 8, 8, 3, rng);
    Tape tape;
    tape.set_enabled(false);
    auto r1 = RngStream::from_seed(77);
    auto r2 = RngStream::from_seed(77);
    auto a1 = augment(tape, policy, batch, r1);
    auto a2 = augment(tape, policy, batch, r2);
    for (std::int64_t i = 0; i < a1.pixels->size(); ++i)
        CHECK(a1.pixels->value[i] == a2.pixels->value[i]);
}

TEST_CASE("augment: outputs stay in [0,1] for arbitrary policies") {
    for (int seed = 0; seed < 3; ++seed) {
        auto policy = random_policy(16, 3, 200 + seed, 2.0);
        auto rng = RngStream::from_seed(300 + seed);
        auto batch = random_batch(5, 8, 8, 3, rng);
        Tape tape;
        tape.set_enabled(false);
        auto aug_rng = rng.split(1);
        auto res = augment(tape, policy, batch, aug_rng);
        for (Real v : res.pixels->value) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        for (Real v : res.color_pixels->value) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("augment: value-mode gate skip stays within the gate tolerance") {
    // dropout-free policy so full and skip paths consume identical randomness
    auto init = RngStream::from_seed(13);
    auto policy = AugmentationPolicy::create(16, 3, init, 0.0);
    for (auto& np : policy.params("p"))
        for (auto& v : np.tensor->value) v = init.normal() * 0.3;
    // push the color gate low so skips actually happen
    policy.gate_logit_c->value[0] = -2.0;
    auto rng = RngStream::from_seed(14);
    auto batch = random_batch(16, 8, 8, 3, rng);
    Tape tape;
    tape.set_enabled(false);
    auto r1 = RngStream::from_seed(5150);
    auto full = augment(tape, policy, batch, r1, {.training = true, .skip_saturated_gates = false});
    auto r2 = RngStream::from_seed(5150);
    auto skip = augment(tape, policy, batch, r2, {.training = true, .skip_saturated_gates = true});
    int skipped = 0;
    for (int i = 0; i < 16; ++i)
        if (full.gate_c->value[i] < 1e-6) ++skipped;
    CHECK(skipped > 0);
    Real max_diff = 0;
    for (std::int64_t i = 0; i < full.pixels->size(); ++i)
        max_diff = std::max(max_diff, std::fabs(full.pixels->value[i] - skip.pixels->value[i]));
    CHECK(max_diff < 1e-5);
}

TEST_CASE("augment: end-to-end gradient w.r.t. all policy parameters") {
    for (int seed = 0; seed < 3; ++seed) {
        auto policy = random_policy(8, 3, 400 + seed, 0.4);
        auto rng = RngStream::from_seed(500 + seed);
        auto batch = random_batch(3, 6, 6, 3, rng);
        auto fr = rng.split(1);
        const std::uint64_t aug_seed = 123456 + seed;
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto aug_rng = RngStream::from_seed(aug_seed);
            auto res = augment(t, policy, batch, aug_rng);
            return pick_scalar(t, res.pixels, r);
        };
        std::vector<TensorPtr> params;
        for (auto& np : policy.params("p")) params.push_back(np.tensor);
        auto probe = rng.split(2);
        auto res = check_gradients("augment", fn, params, 4, 1e-5, 1e-3, 1e-5, probe);
        CHECK_MESSAGE(res.pass, "seed=", seed, " max_rel_err=", res.max_rel_err);
    }
}
