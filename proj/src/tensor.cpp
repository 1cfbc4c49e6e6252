#include "taug/tensor.hpp"

#include <cmath>

namespace taug {

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor extent must be positive");
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s, bool rg) : shape(std::move(s)), requires_grad(rg) {
    const auto n = static_cast<std::size_t>(shape_size(shape));
    value.assign(n, Real(0));
    if (rg) grad.assign(n, Real(0));
}

TensorPtr Tensor::create(std::vector<int> shape, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr Tensor::scalar(Real v, bool requires_grad) {
    auto t = create({1}, requires_grad);
    t->value[0] = v;
    return t;
}

TensorPtr Tensor::full(std::vector<int> shape, Real v, bool requires_grad) {
    auto t = create(std::move(shape), requires_grad);
    std::fill(t->value.begin(), t->value.end(), v);
    return t;
}

TensorPtr Tensor::from_data(std::vector<int> shape, std::vector<Real> data, bool requires_grad) {
    if (shape_size(shape) != static_cast<std::int64_t>(data.size()))
        throw DimensionError("from_data: data length does not match shape");
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->value = std::move(data);
    t->requires_grad = requires_grad;
    if (requires_grad) t->grad.assign(t->value.size(), Real(0));
    return t;
}

int Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) throw DimensionError("dim index out of range");
    return shape[i];
}

int Tensor::rows() const { return shape.empty() ? 1 : shape[0]; }

int Tensor::cols() const {
    const int r = rows();
    return r == 0 ? 0 : static_cast<int>(size() / r);
}

Real Tensor::item() const {
    if (size() != 1) throw DimensionError("item() requires a scalar tensor");
    return value[0];
}

void Tensor::set_requires_grad(bool rg) {
    requires_grad = rg;
    if (rg)
        grad.assign(value.size(), Real(0));
    else
        grad.clear();
}

void Tensor::zero_grad() {
    if (requires_grad) std::fill(grad.begin(), grad.end(), Real(0));
}

bool Tensor::value_finite() const {
    for (Real v : value)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::grad_finite() const {
    for (Real g : grad)
        if (!std::isfinite(g)) return false;
    return true;
}

TensorPtr Tensor::clone(bool rg) const {
    auto t = std::make_shared<Tensor>();
    t->shape = shape;
    t->value = value;
    t->requires_grad = rg;
    if (rg) t->grad.assign(value.size(), Real(0));
    return t;
}

void Tape::backward(const TensorPtr& root) {
    if (!root || root->size() != 1)
        throw DimensionError("backward: root must be a scalar tensor");
    if (!root->requires_grad)
        throw NumericError("backward: root does not require grad (nothing recorded?)");
    root->grad[0] += Real(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::clear() { ops_.clear(); }

}  // namespace taug
