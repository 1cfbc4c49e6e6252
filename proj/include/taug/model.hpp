#pragma once

#include <string>
#include <vector>

#include "taug/ops.hpp"

namespace taug {

// Small convolutional classifier:
//   conv3x3(3->32) -> leaky ReLU -> maxpool2 ->
//   conv3x3(32->64) -> leaky ReLU -> maxpool2 ->
//   flatten -> linear(128) -> leaky ReLU -> linear(K)
// Deterministic in eval mode (it has no stochastic layers).
struct TargetModel {
    int classes = 0;
    int height = 0;
    int width = 0;
    TensorPtr conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b;

    static TargetModel create(int classes, int height, int width, RngStream& rng);

    TensorPtr forward(Tape& tape, const TensorPtr& pixels) const;  // logits [B x K]

    std::vector<NamedParam> params(const std::string& prefix) const;
    TargetModel clone(bool requires_grad) const;
    void copy_values_from(const TargetModel& other);
    void set_requires_grad(bool rg);
    bool finite() const;
};

}  // namespace taug
