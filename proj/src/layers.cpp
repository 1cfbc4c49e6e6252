#include "taug/layers.hpp"

#include <cmath>

namespace taug {

LinearLayer LinearLayer::create(int in, int out, RngStream& rng, bool zero_init,
                                bool requires_grad) {
    LinearLayer layer;
    layer.weight = Tensor::create({out, in}, requires_grad);
    layer.bias = Tensor::create({out}, requires_grad);
    if (!zero_init) {
        const Real bound = Real(1) / std::sqrt(static_cast<Real>(in));
        for (auto& v : layer.weight->value) v = rng.uniform(-bound, bound);
        for (auto& v : layer.bias->value) v = rng.uniform(-bound, bound);
    }
    return layer;
}

LinearLayer LinearLayer::clone(bool requires_grad) const {
    return {weight->clone(requires_grad), bias->clone(requires_grad)};
}

TensorPtr linear_forward(Tape& tape, const LinearLayer& layer, const TensorPtr& x) {
    return ops::linear(tape, x, layer.weight, layer.bias);
}

Mlp3 Mlp3::create(int in, int hidden, int out, RngStream& rng, Real drop_ratio,
                  bool zero_init_output, bool requires_grad) {
    Mlp3 m;
    m.drop_ratio = drop_ratio;
    m.l1 = LinearLayer::create(in, hidden, rng, false, requires_grad);
    m.l2 = LinearLayer::create(hidden, hidden, rng, false, requires_grad);
    m.l3 = LinearLayer::create(hidden, out, rng, zero_init_output, requires_grad);
    return m;
}

TensorPtr Mlp3::forward(Tape& tape, const TensorPtr& x, RngStream& rng, bool training) const {
    auto h = linear_forward(tape, l1, x);
    h = ops::leaky_relu_inplace(tape, h, slope);
    h = ops::dropout_inplace(tape, h, drop_ratio, rng, training);
    h = linear_forward(tape, l2, h);
    h = ops::leaky_relu_inplace(tape, h, slope);
    h = ops::dropout_inplace(tape, h, drop_ratio, rng, training);
    return linear_forward(tape, l3, h);
}

void Mlp3::collect_params(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".l1.weight", l1.weight});
    out.push_back({prefix + ".l1.bias", l1.bias});
    out.push_back({prefix + ".l2.weight", l2.weight});
    out.push_back({prefix + ".l2.bias", l2.bias});
    out.push_back({prefix + ".l3.weight", l3.weight});
    out.push_back({prefix + ".l3.bias", l3.bias});
}

Mlp3 Mlp3::clone(bool requires_grad) const {
    Mlp3 m;
    m.slope = slope;
    m.drop_ratio = drop_ratio;
    m.l1 = l1.clone(requires_grad);
    m.l2 = l2.clone(requires_grad);
    m.l3 = l3.clone(requires_grad);
    return m;
}

void Mlp3::set_requires_grad(bool rg) {
    for (auto& t : {l1.weight, l1.bias, l2.weight, l2.bias, l3.weight, l3.bias})
        t->set_requires_grad(rg);
}

}  // namespace taug
