#include "taug/model.hpp"

#include <cmath>

namespace taug {

namespace {

TensorPtr init_uniform(std::vector<int> shape, int fan_in, RngStream& rng) {
    auto t = Tensor::create(std::move(shape), true);
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(fan_in));
    for (auto& v : t->value) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

TargetModel TargetModel::create(int classes, int height, int width, RngStream& rng) {
    if (height % 4 != 0 || width % 4 != 0)
        throw DimensionError("TargetModel: H and W must be divisible by 4");
    TargetModel m;
    m.classes = classes;
    m.height = height;
    m.width = width;
    m.conv1_w = init_uniform({32, 9 * 3}, 9 * 3, rng);
    m.conv1_b = init_uniform({32}, 9 * 3, rng);
    m.conv2_w = init_uniform({64, 9 * 32}, 9 * 32, rng);
    m.conv2_b = init_uniform({64}, 9 * 32, rng);
    const int flat = 64 * (height / 4) * (width / 4);
    m.fc1_w = init_uniform({128, flat}, flat, rng);
    m.fc1_b = init_uniform({128}, flat, rng);
    m.fc2_w = init_uniform({classes, 128}, 128, rng);
    m.fc2_b = init_uniform({classes}, 128, rng);
    return m;
}

TensorPtr TargetModel::forward(Tape& tape, const TensorPtr& pixels) const {
    if (pixels->shape.size() != 4 || pixels->dim(1) != height || pixels->dim(2) != width ||
        pixels->dim(3) != 3)
        throw DimensionError("TargetModel::forward: pixel shape mismatch");
    const int b = pixels->dim(0);
    auto h1 = ops::conv2d(tape, pixels, conv1_w, conv1_b, 3, 3, 1);
    h1 = ops::leaky_relu_inplace(tape, h1, 0.2);
    h1 = ops::maxpool2(tape, h1);
    auto h2 = ops::conv2d(tape, h1, conv2_w, conv2_b, 3, 3, 1);
    h2 = ops::leaky_relu_inplace(tape, h2, 0.2);
    h2 = ops::maxpool2(tape, h2);
    auto flat = ops::reshape(tape, h2, {b, 64 * (height / 4) * (width / 4)});
    auto f1 = ops::linear(tape, flat, fc1_w, fc1_b);
    f1 = ops::leaky_relu_inplace(tape, f1, 0.2);
    return ops::linear(tape, f1, fc2_w, fc2_b);
}

std::vector<NamedParam> TargetModel::params(const std::string& prefix) const {
    return {
        {prefix + ".conv1.weight", conv1_w}, {prefix + ".conv1.bias", conv1_b},
        {prefix + ".conv2.weight", conv2_w}, {prefix + ".conv2.bias", conv2_b},
        {prefix + ".fc1.weight", fc1_w},     {prefix + ".fc1.bias", fc1_b},
        {prefix + ".fc2.weight", fc2_w},     {prefix + ".fc2.bias", fc2_b},
    };
}

TargetModel TargetModel::clone(bool rg) const {
    TargetModel m;
    m.classes = classes;
    m.height = height;
    m.width = width;
    m.conv1_w = conv1_w->clone(rg);
    m.conv1_b = conv1_b->clone(rg);
    m.conv2_w = conv2_w->clone(rg);
    m.conv2_b = conv2_b->clone(rg);
    m.fc1_w = fc1_w->clone(rg);
    m.fc1_b = fc1_b->clone(rg);
    m.fc2_w = fc2_w->clone(rg);
    m.fc2_b = fc2_b->clone(rg);
    return m;
}

void TargetModel::copy_values_from(const TargetModel& other) {
    auto mine = params("m");
    auto theirs = other.params("m");
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].tensor->shape != theirs[i].tensor->shape)
            throw DimensionError("copy_values_from: parameter shape mismatch at " +
                                 mine[i].name);
        mine[i].tensor->value = theirs[i].tensor->value;
    }
}

void TargetModel::set_requires_grad(bool rg) {
    for (auto& p : params("m")) p.tensor->set_requires_grad(rg);
}

bool TargetModel::finite() const {
    for (const auto& p : params("m"))
        if (!p.tensor->value_finite()) return false;
    return true;
}

}  // namespace taug
