#pragma once

#include <string>
#include <vector>

#include "taug/ops.hpp"

namespace taug {

// Fully-connected layer, weight [out x in], bias [out].
struct LinearLayer {
    TensorPtr weight;
    TensorPtr bias;

    // Uniform(-1/sqrt(in), 1/sqrt(in)) init for weight and bias; zero_init
    // leaves both at exactly zero.
    static LinearLayer create(int in, int out, RngStream& rng, bool zero_init = false,
                              bool requires_grad = true);

    int in_features() const { return weight->shape[1]; }
    int out_features() const { return weight->shape[0]; }
    bool finite() const { return weight->value_finite() && bias->value_finite(); }
    LinearLayer clone(bool requires_grad) const;
};

TensorPtr linear_forward(Tape& tape, const LinearLayer& layer, const TensorPtr& x);

// Three-layer perceptron: two hidden blocks of linear -> leaky ReLU -> dropout
// followed by a plain linear output layer.
struct Mlp3 {
    LinearLayer l1, l2, l3;
    Real slope = 0.2;
    Real drop_ratio = 0.8;

    static Mlp3 create(int in, int hidden, int out, RngStream& rng, Real drop_ratio,
                       bool zero_init_output, bool requires_grad = true);

    TensorPtr forward(Tape& tape, const TensorPtr& x, RngStream& rng, bool training) const;

    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) const;
    Mlp3 clone(bool requires_grad) const;
    void set_requires_grad(bool rg);
    bool finite() const { return l1.finite() && l2.finite() && l3.finite(); }
};

}  // namespace taug
