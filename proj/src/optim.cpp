#include "taug/optim.hpp"

#include <cmath>

namespace taug {

Optimizer Optimizer::sgd(std::vector<NamedParam> params, const SgdOptions& opt) {
    Optimizer o;
    o.kind_ = Kind::sgd;
    o.params_ = std::move(params);
    o.lr_ = opt.lr;
    o.momentum_ = opt.momentum;
    o.weight_decay_ = opt.weight_decay;
    o.nesterov_ = opt.nesterov;
    for (const auto& p : o.params_) o.buf_a_.push_back(Tensor::create(p.tensor->shape, false));
    return o;
}

Optimizer Optimizer::adamw(std::vector<NamedParam> params, const AdamWOptions& opt) {
    Optimizer o;
    o.kind_ = Kind::adamw;
    o.params_ = std::move(params);
    o.lr_ = opt.lr;
    o.beta1_ = opt.beta1;
    o.beta2_ = opt.beta2;
    o.eps_ = opt.eps;
    o.weight_decay_ = opt.weight_decay;
    for (const auto& p : o.params_) {
        o.buf_a_.push_back(Tensor::create(p.tensor->shape, false));
        o.buf_b_.push_back(Tensor::create(p.tensor->shape, false));
    }
    return o;
}

void Optimizer::step() {
    for (const auto& p : params_) {
        if (!p.tensor->requires_grad)
            throw NumericError("optimizer_step: parameter '" + p.name + "' has no gradient");
        if (!p.tensor->grad_finite())
            throw NumericError("optimizer_step: non-finite gradient in '" + p.name + "'");
    }
    ++step_count_;
    if (kind_ == Kind::sgd) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& t = *params_[i].tensor;
            auto& vel = buf_a_[i]->value;
            const auto n = t.size();
            for (std::int64_t j = 0; j < n; ++j) {
                const Real g = t.grad[j] + weight_decay_ * t.value[j];
                vel[j] = momentum_ * vel[j] + g;
                const Real d = nesterov_ ? g + momentum_ * vel[j] : vel[j];
                t.value[j] -= lr_ * d;
            }
        }
    } else {
        const Real bc1 = Real(1) - std::pow(beta1_, static_cast<Real>(step_count_));
        const Real bc2 = Real(1) - std::pow(beta2_, static_cast<Real>(step_count_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& t = *params_[i].tensor;
            auto& m = buf_a_[i]->value;
            auto& v = buf_b_[i]->value;
            const auto n = t.size();
            for (std::int64_t j = 0; j < n; ++j) {
                t.value[j] -= lr_ * weight_decay_ * t.value[j];
                const Real g = t.grad[j];
                m[j] = beta1_ * m[j] + (Real(1) - beta1_) * g;
                v[j] = beta2_ * v[j] + (Real(1) - beta2_) * g * g;
                const Real mhat = m[j] / bc1;
                const Real vhat = v[j] / bc2;
                t.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (!params_[i].tensor->value_finite())
            throw NumericError("optimizer_step: parameter '" + params_[i].name +
                               "' became non-finite");
}

void Optimizer::zero_grad() {
    for (const auto& p : params_) p.tensor->zero_grad();
}

std::vector<NamedParam> Optimizer::state_buffers() {
    std::vector<NamedParam> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (kind_ == Kind::sgd) {
            out.push_back({params_[i].name + ".velocity", buf_a_[i]});
        } else {
            out.push_back({params_[i].name + ".m", buf_a_[i]});
            out.push_back({params_[i].name + ".v", buf_b_[i]});
        }
    }
    return out;
}

}  // namespace taug
