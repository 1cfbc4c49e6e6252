#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "taug/gradcheck.hpp"
#include "taug/layers.hpp"
#include "taug/ops.hpp"
#include "taug/optim.hpp"
#include "taug/rng.hpp"

using namespace taug;

namespace {

TensorPtr random_tensor(std::vector<int> shape, RngStream& rng, Real scale = 1.0,
                        bool requires_grad = true) {
    auto t = Tensor::create(std::move(shape), requires_grad);
    for (auto& v : t->value) v = rng.normal() * scale;
    return t;
}

TensorPtr one_hot_labels(int batch, int k, RngStream& rng) {
    auto y = Tensor::create({batch, k}, false);
    for (int b = 0; b < batch; ++b) y->value[b * k + rng.uniform_int(k)] = 1.0;
    return y;
}

// Random linear functional of a tensor, to scalarize multi-output ops for
// gradient checks.
TensorPtr pick_scalar(Tape& tape, const TensorPtr& t, RngStream& rng) {
    auto w = Tensor::create(t->shape, false);
    for (auto& v : w->value) v = rng.uniform(-1.0, 1.0);
    return ops::sum_all(tape, ops::mul(tape, t, w));
}

}  // namespace

TEST_CASE("linear_forward identity and zero-weight cases") {
    Tape tape;
    auto x = Tensor::from_data({1, 2}, {1.0, 2.0});
    auto w_id = Tensor::from_data({2, 2}, {1.0, 0.0, 0.0, 1.0});
    auto b0 = Tensor::from_data({2}, {0.0, 0.0});
    auto y = ops::linear(tape, x, w_id, b0);
    CHECK(y->value[0] == doctest::Approx(1.0));
    CHECK(y->value[1] == doctest::Approx(2.0));

    auto w0 = Tensor::from_data({2, 2}, {0.0, 0.0, 0.0, 0.0});
    auto b3 = Tensor::from_data({2}, {3.0, 3.0});
    auto y2 = ops::linear(tape, x, w0, b3);
    CHECK(y2->value[0] == doctest::Approx(3.0));
    CHECK(y2->value[1] == doctest::Approx(3.0));

    auto bad = Tensor::from_data({1, 3}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(ops::linear(tape, bad, w_id, b0), DimensionError);
}

TEST_CASE("linear backward matches finite differences") {
    for (int seed = 0; seed < 20; ++seed) {
        auto rng = RngStream::from_seed(100 + seed);
        auto x = random_tensor({3, 4}, rng);
        auto w = random_tensor({5, 4}, rng);
        auto b = random_tensor({5}, rng);
        auto fn_rng = rng.split(1);
        auto fn = [&](Tape& t) {
            auto r = fn_rng;  // reset functional weights each call
            return pick_scalar(t, ops::linear(t, x, w, b), r);
        };
        auto probe = rng.split(2);
        auto res = check_gradients("linear", fn, {x, w, b}, 8, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, res.path, " max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("leaky_relu values") {
    Tape tape;
    auto x = Tensor::from_data({3}, {0.0, 2.0, -1.0});
    auto y = ops::leaky_relu(tape, x, 0.2);
    CHECK(y->value[0] == doctest::Approx(0.0));
    CHECK(y->value[1] == doctest::Approx(2.0));
    CHECK(y->value[2] == doctest::Approx(-0.2));
}

TEST_CASE("sigmoid values, symmetry and gradient at zero") {
    Tape tape;
    auto x = Tensor::from_data({1}, {0.0}, true);
    auto y = ops::sigmoid(tape, x);
    CHECK(y->value[0] == doctest::Approx(0.5));
    tape.backward(y);
    CHECK(x->grad[0] == doctest::Approx(0.25));

    auto rng = RngStream::from_seed(7);
    for (int i = 0; i < 50; ++i) {
        const Real v = rng.uniform(-20.0, 20.0);
        Tape t;
        auto a = Tensor::from_data({1}, {v});
        auto m = Tensor::from_data({1}, {-v});
        const Real s = ops::sigmoid(t, a)->value[0];
        const Real sm = ops::sigmoid(t, m)->value[0];
        CHECK(s == doctest::Approx(1.0 - sm).epsilon(1e-12));
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("dropout: ratio 0 and eval mode are bit-exact identities") {
    auto rng = RngStream::from_seed(3);
    Tape tape;
    auto x = random_tensor({100}, rng, 1.0, false);
    auto y0 = ops::dropout(tape, x, 0.0, rng, true);
    CHECK(y0.get() == x.get());
    auto ye = ops::dropout(tape, x, 0.8, rng, false);
    CHECK(ye.get() == x.get());
    CHECK_THROWS_AS(ops::dropout(tape, x, 1.0, rng, true), ConfigError);
    CHECK_THROWS_AS(ops::dropout(tape, x, -0.1, rng, true), ConfigError);
}

TEST_CASE("dropout: Monte-Carlo mean is preserved at ratio 0.8") {
    auto rng = RngStream::from_seed(11);
    Tape tape;
    const int n = 1000000;
    auto x = Tensor::full({n}, 1.0);
    auto y = ops::dropout(tape, x, 0.8, rng, true);
    Real mean = 0;
    for (Real v : y->value) mean += v;
    mean /= n;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("softmax_cross_entropy: uniform logits give ln K") {
    Tape tape;
    const int k = 10;
    auto logits = Tensor::full({4, k}, 0.37);
    auto rng = RngStream::from_seed(5);
    auto y = one_hot_labels(4, k, rng);
    auto loss = ops::softmax_cross_entropy(tape, logits, y);
    CHECK(loss->item() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy: dominant true class drives loss to zero") {
    Tape tape;
    auto logits = Tensor::from_data({1, 3}, {500.0, 0.0, 0.0});
    auto y = Tensor::from_data({1, 3}, {1.0, 0.0, 0.0});
    auto loss = ops::softmax_cross_entropy(tape, logits, y);
    CHECK(loss->item() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(loss->item() >= 0.0);
}

TEST_CASE("softmax_cross_entropy: nonnegative and FD-checked gradient") {
    for (int seed = 0; seed < 20; ++seed) {
        auto rng = RngStream::from_seed(300 + seed);
        auto logits = random_tensor({4, 6}, rng, 2.0);
        auto y = one_hot_labels(4, 6, rng);
        {
            Tape t;
            CHECK(ops::softmax_cross_entropy(t, logits, y)->item() >= 0.0);
        }
        auto fn = [&](Tape& t) { return ops::softmax_cross_entropy(t, logits, y); };
        auto probe = rng.split(9);
        auto res = check_gradients("sce", fn, {logits}, 8, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("optimizer: zero grads and zero decay leave params unchanged") {
    auto p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
    auto opt = Optimizer::adamw({{"p", p}}, {.lr = 1e-3, .weight_decay = 0});
    opt.step();
    CHECK(p->value[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p->value[1] == doctest::Approx(-2.0).epsilon(1e-15));

    auto q = Tensor::from_data({2}, {0.7, -0.3}, true);
    auto sgd = Optimizer::sgd({{"q", q}}, {.lr = 0.0, .momentum = 0.9, .weight_decay = 0});
    q->grad[0] = 1.0;
    sgd.step();
    CHECK(q->value[0] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("optimizer: decoupled decay only scales by (1 - lr*wd)") {
    auto p = Tensor::from_data({1}, {0.8}, true);
    auto opt = Optimizer::adamw({{"p", p}}, {.lr = 1e-3, .weight_decay = 1e-2});
    opt.step();
    CHECK(p->value[0] == doctest::Approx(0.8 * (1.0 - 1e-5)).epsilon(1e-14));
}

TEST_CASE("optimizer: quadratic bowl convergence within 500 steps") {
    // f(p) = p^2, grad = 2p
    auto run = [](Optimizer opt, const TensorPtr& p) {
        for (int i = 0; i < 500; ++i) {
            p->zero_grad();
            p->grad[0] = 2.0 * p->value[0];
            opt.step();
        }
        return std::fabs(p->value[0]);
    };
    auto p1 = Tensor::from_data({1}, {1.0}, true);
    CHECK(run(Optimizer::sgd({{"p", p1}}, {.lr = 0.05, .momentum = 0.9, .weight_decay = 0}),
              p1) < 1e-3);
    auto p2 = Tensor::from_data({1}, {1.0}, true);
    CHECK(run(Optimizer::adamw({{"p", p2}}, {.lr = 0.05, .weight_decay = 0}), p2) < 1e-3);
}

TEST_CASE("optimizer: NaN gradient aborts with diagnostics") {
    auto p = Tensor::from_data({2}, {1.0, 2.0}, true);
    auto opt = Optimizer::sgd({{"p", p}}, {});
    p->grad[1] = std::nan("");
    CHECK_THROWS_AS(opt.step(), NumericError);
}

TEST_CASE("finite_diff_grad: quadratic oracle and constant function") {
    auto p = Tensor::from_data({2}, {1.0, 2.0}, true);
    auto f = [&]() { return p->value[0] * p->value[0] + p->value[1] * p->value[1]; };
    auto g = finite_diff_grad(f, *p, 1e-5);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));

    auto c = [&]() { return 3.5; };
    auto gc = finite_diff_grad(c, *p, 1e-5);
    CHECK(gc[0] == doctest::Approx(0.0));
    CHECK(gc[1] == doctest::Approx(0.0));
}

TEST_CASE("elementwise and structural ops match finite differences") {
    for (int seed = 0; seed < 20; ++seed) {
        auto rng = RngStream::from_seed(500 + seed);
        auto probe = rng.split(77);

        auto a = random_tensor({4, 3}, rng);
        auto b = random_tensor({4, 3}, rng);
        auto s = random_tensor({4}, rng);
        auto sc = random_tensor({1}, rng);
        auto fr = rng.split(3);

        struct Case {
            const char* name;
            std::function<TensorPtr(Tape&)> fn;
            std::vector<TensorPtr> params;
        };
        std::vector<Case> cases;
        cases.push_back({"add", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::add(t, a, b), r);
                         },
                         {a, b}});
        cases.push_back({"sub", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::sub(t, a, b), r);
                         },
                         {a, b}});
        cases.push_back({"mul", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::mul(t, a, b), r);
                         },
                         {a, b}});
        cases.push_back({"exp", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::exp_elem(t, a), r);
                         },
                         {a}});
        cases.push_back({"abs", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::abs_elem(t, a), r);
                         },
                         {a}});
        cases.push_back({"sigmoid", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::sigmoid(t, a), r);
                         },
                         {a}});
        cases.push_back({"log_sigmoid", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::log_sigmoid(t, a), r);
                         },
                         {a}});
        cases.push_back({"leaky_relu", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::leaky_relu(t, a, 0.2), r);
                         },
                         {a}});
        cases.push_back({"triangle_wave", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::triangle_wave(t, a), r);
                         },
                         {a}});
        cases.push_back({"softmax", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::softmax(t, a), r);
                         },
                         {a}});
        cases.push_back({"reshape", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::reshape(t, a, {3, 4}), r);
                         },
                         {a}});
        cases.push_back({"concat_cols", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::concat_cols(t, a, b), r);
                         },
                         {a, b}});
        cases.push_back({"col_slice", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::col_slice(t, a, 1, 3), r);
                         },
                         {a}});
        cases.push_back({"repeat_rows", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::repeat_rows(t, a, 3), r);
                         },
                         {a}});
        cases.push_back({"broadcast_scalar", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::broadcast_scalar(t, sc, 7), r);
                         },
                         {sc}});
        cases.push_back({"row_scale", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::row_scale(t, a, s), r);
                         },
                         {a, s}});
        cases.push_back({"gather_rows", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::gather_rows(t, a, {2, 0, 2, 1}), r);
                         },
                         {a}});
        cases.push_back({"rowdot", [&](Tape& t) {
                             auto r = fr;
                             return pick_scalar(t, ops::rowdot(t, a, b), r);
                         },
                         {a, b}});
        cases.push_back({"matmul", [&](Tape& t) {
                             auto r = fr;
                             auto m = ops::reshape(t, b, {3, 4});
                             return pick_scalar(t, ops::matmul(t, a, m), r);
                         },
                         {a, b}});
        cases.push_back({"mean_all", [&](Tape& t) { return ops::mean_all(t, a); }, {a}});

        for (auto& c : cases) {
            auto res = check_gradients(c.name, c.fn, c.params, 6, 1e-5, 1e-6, 1e-6, probe);
            CHECK_MESSAGE(res.pass, c.name, " seed=", seed, " max_rel_err=", res.max_rel_err);
        }
    }
}

TEST_CASE("dropout gradient with fixed mask matches finite differences") {
    for (int seed = 0; seed < 20; ++seed) {
        auto rng = RngStream::from_seed(800 + seed);
        auto a = random_tensor({6, 5}, rng);
        auto fr = rng.split(1);
        auto mask_rng = rng.split(2);
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto m = mask_rng;
            return pick_scalar(t, ops::dropout(t, a, 0.5, m, true), r);
        };
        auto probe = rng.split(3);
        auto res = check_gradients("dropout", fn, {a}, 8, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("conv2d and maxpool2 match finite differences") {
    for (int seed = 0; seed < 10; ++seed) {
        auto rng = RngStream::from_seed(900 + seed);
        auto x = random_tensor({2, 6, 6, 3}, rng);
        auto w = random_tensor({4, 3 * 3 * 3}, rng, 0.5);
        auto b = random_tensor({4}, rng, 0.1);
        auto fr = rng.split(1);
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto y = ops::conv2d(t, x, w, b, 3, 3, 1);
            y = ops::maxpool2(t, y);
            return pick_scalar(t, y, r);
        };
        auto probe = rng.split(2);
        auto res = check_gradients("conv2d+maxpool2", fn, {x, w, b}, 10, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "seed=", seed, " max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("conv2d agrees with a direct nested-loop oracle") {
    auto rng = RngStream::from_seed(42);
    const int B = 2, H = 5, W = 4, Cin = 3, Cout = 2;
    auto x = random_tensor({B, H, W, Cin}, rng, 1.0, false);
    auto w = random_tensor({Cout, 9 * Cin}, rng, 1.0, false);
    auto b = random_tensor({Cout}, rng, 1.0, false);
    Tape tape;
    auto y = ops::conv2d(tape, x, w, b, 3, 3, 1);
    for (int bi = 0; bi < B; ++bi)
        for (int oy = 0; oy < H; ++oy)
            for (int ox = 0; ox < W; ++ox)
                for (int co = 0; co < Cout; ++co) {
                    Real acc = b->value[co];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = oy + ky - 1, ix = ox + kx - 1;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            for (int ci = 0; ci < Cin; ++ci)
                                acc += x->value[((bi * H + iy) * W + ix) * Cin + ci] *
                                       w->value[co * 27 + (ky * 3 + kx) * Cin + ci];
                        }
                    CHECK(y->value[((bi * H + oy) * W + ox) * Cout + co] ==
                          doctest::Approx(acc).epsilon(1e-12));
                }
}

TEST_CASE("in-place activation/dropout variants match out-of-place gradients") {
    for (int seed = 0; seed < 10; ++seed) {
        auto rng = RngStream::from_seed(1100 + seed);
        auto w = random_tensor({5, 4}, rng);
        auto b = random_tensor({5}, rng);
        auto x = random_tensor({3, 4}, rng, 1.0, false);
        auto fr = rng.split(1);
        auto mask_rng = rng.split(2);
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto m = mask_rng;
            auto h = ops::linear(t, x, w, b);
            h = ops::leaky_relu_inplace(t, h, 0.2);
            h = ops::dropout_inplace(t, h, 0.5, m, true);
            return pick_scalar(t, h, r);
        };
        auto probe = rng.split(3);
        auto res = check_gradients("inplace", fn, {w, b}, 8, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("mlp3 forward/backward through dropout path") {
    for (int seed = 0; seed < 5; ++seed) {
        auto rng = RngStream::from_seed(1300 + seed);
        auto init = rng.split(0);
        auto mlp = Mlp3::create(3, 8, 6, init, 0.8, false);
        auto x = random_tensor({4, 3}, rng, 1.0, false);
        auto fr = rng.split(1);
        auto drop_rng = rng.split(2);
        auto fn = [&](Tape& t) {
            auto r = fr;
            auto m = drop_rng;
            return pick_scalar(t, mlp.forward(t, x, m, true), r);
        };
        std::vector<TensorPtr> ps = {mlp.l1.weight, mlp.l1.bias, mlp.l2.weight,
                                     mlp.l2.bias,   mlp.l3.weight, mlp.l3.bias};
        auto probe = rng.split(3);
        auto res = check_gradients("mlp3", fn, ps, 6, 1e-5, 1e-6, 1e-6, probe);
        CHECK_MESSAGE(res.pass, "max_rel_err=", res.max_rel_err);
    }
}

TEST_CASE("zero-initialized output layer makes mlp output exactly zero") {
    auto rng = RngStream::from_seed(2);
    auto mlp = Mlp3::create(3, 16, 6, rng, 0.8, true);
    auto x = random_tensor({10, 3}, rng, 1.0, false);
    Tape tape;
    auto drop = rng.split(5);
    auto y = mlp.forward(tape, x, drop, true);
    for (Real v : y->value) CHECK(v == 0.0);
}

TEST_CASE("gradient checker flags a corrupted backward rule") {
    auto rng = RngStream::from_seed(21);
    auto a = random_tensor({4, 4}, rng);
    auto fr = rng.split(1);
    auto fn = [&](Tape& t) {
        auto r = fr;
        return pick_scalar(t, ops::leaky_relu(t, a, 0.2), r);
    };
    ops::detail::sabotage_leaky_relu_backward = true;
    auto probe = rng.split(2);
    auto res = check_gradients("sabotaged", fn, {a}, 16, 1e-5, 1e-6, 1e-6, probe);
    ops::detail::sabotage_leaky_relu_backward = false;
    CHECK_FALSE(res.pass);
}

TEST_CASE("rng: determinism, split independence, state round-trip") {
    auto a = RngStream::from_seed(99);
    auto b = RngStream::from_seed(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto parent = RngStream::from_seed(5);
    auto c1 = parent.split(1);
    parent.uniform();  // consuming the parent must not change children
    auto c2 = parent.split(1);
    for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == c2.next_u64());

    auto st = a.state();
    auto a2 = RngStream::from_state(st);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == a2.next_u64());
}

TEST_CASE("rng: uniform and normal moments") {
    auto rng = RngStream::from_seed(123);
    const int n = 200000;
    Real mu = 0, mu2 = 0;
    for (int i = 0; i < n; ++i) {
        const Real z = rng.normal();
        mu += z;
        mu2 += z * z;
    }
    CHECK(mu / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(mu2 / n == doctest::Approx(1.0).epsilon(0.02));
}
