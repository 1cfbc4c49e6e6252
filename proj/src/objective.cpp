#include "taug/objective.hpp"

namespace taug {

ObjectiveKind objective_kind_from_string(const std::string& s) {
    if (s == "baseline_none") return ObjectiveKind::baseline_none;
    if (s == "adv_aa") return ObjectiveKind::adv_aa;
    if (s == "pointaugment") return ObjectiveKind::pointaugment;
    if (s == "teachaugment") return ObjectiveKind::teachaugment;
    if (s == "consistency_mse") return ObjectiveKind::consistency_mse;
    if (s == "consistency_kld") return ObjectiveKind::consistency_kld;
    throw ConfigError("unknown objective kind: " + s);
}

std::string to_string(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::baseline_none: return "baseline_none";
        case ObjectiveKind::adv_aa: return "adv_aa";
        case ObjectiveKind::pointaugment: return "pointaugment";
        case ObjectiveKind::teachaugment: return "teachaugment";
        case ObjectiveKind::consistency_mse: return "consistency_mse";
        case ObjectiveKind::consistency_kld: return "consistency_kld";
    }
    throw ConfigError("unknown objective kind");
}

bool uses_learned_augmentation(ObjectiveKind kind) {
    return kind == ObjectiveKind::adv_aa || kind == ObjectiveKind::pointaugment ||
           kind == ObjectiveKind::teachaugment;
}

void ObjectiveConfig::validate() const {
    if (!(smoothing >= 0 && smoothing < 1))
        throw ConfigError("smoothing must lie in [0, 1)");
    if (color_reg < 0) throw ConfigError("color_reg must be nonnegative");
    if (swd_projections <= 0) throw ConfigError("swd_projections must be positive");
}

TensorPtr smooth_labels(const TensorPtr& y, Real eps) {
    if (!(eps >= 0 && eps < 1)) throw ConfigError("smooth_labels: eps must lie in [0, 1)");
    const int k = y->cols();
    auto out = Tensor::create(y->shape, false);
    const Real off = eps / Real(k);
    for (std::int64_t i = 0; i < y->size(); ++i)
        out->value[i] = (Real(1) - eps) * y->value[i] + off;
    return out;
}

TensorPtr color_regularization(Tape& tape, const TensorPtr& before, const TensorPtr& after,
                               int n_proj, RngStream& rng) {
    if (before->shape != after->shape && before->size() != after->size())
        throw DimensionError("color_regularization: shape mismatch");
    if (before->size() % 3 != 0)
        throw DimensionError("color_regularization: expected RGB pixel data");
    const int b = before->dim(0);
    if (b < 2) throw ConfigError("color_regularization: batch size must be at least 2");
    const int hw = static_cast<int>(before->size() / (static_cast<std::int64_t>(b) * 3));

    auto before_flat = ops::reshape(tape, before, {b * hw, 3});
    auto after_flat = ops::reshape(tape, after, {b * hw, 3});

    std::vector<TensorPtr> terms;
    terms.reserve(hw);
    std::vector<int> rows(b);
    for (int i = 0; i < hw; ++i) {
        for (int bb = 0; bb < b; ++bb) rows[bb] = bb * hw + i;
        auto set_a = ops::gather_rows(tape, before_flat, rows);
        auto set_b = ops::gather_rows(tape, after_flat, rows);
        terms.push_back(ops::swd(tape, set_a, set_b, n_proj, rng));
    }
    return ops::add_list(tape, terms);
}

TensorPtr policy_objective_teachaugment(Tape& tape, const TensorPtr& target_logits,
                                        const TensorPtr& teacher_logits, const TensorPtr& labels,
                                        const TensorPtr& before_pixels,
                                        const TensorPtr& after_color_pixels,
                                        const ObjectiveConfig& cfg, RngStream& rng) {
    auto smoothed = smooth_labels(labels, cfg.smoothing);
    auto adversarial = ops::non_saturating_loss(tape, target_logits, smoothed);
    auto teacher_ce = ops::softmax_cross_entropy(tape, teacher_logits, labels);
    auto obj = ops::sub(tape, adversarial, teacher_ce);
    if (cfg.color_reg > 0) {
        auto reg =
            color_regularization(tape, before_pixels, after_color_pixels, cfg.swd_projections, rng);
        obj = ops::sub(tape, obj, ops::scale(tape, reg, cfg.color_reg));
    }
    return obj;
}

TensorPtr policy_objective_adv_aa(Tape& tape, const TensorPtr& target_logits,
                                  const TensorPtr& labels) {
    return ops::softmax_cross_entropy(tape, target_logits, labels);
}

TensorPtr policy_objective_pointaugment(Tape& tape, const TensorPtr& logits_aug,
                                        const TensorPtr& logits_clean, const TensorPtr& labels) {
    auto l_aug = ops::per_sample_cross_entropy(tape, logits_aug, labels);
    auto l_clean = ops::per_sample_cross_entropy(tape, logits_clean, labels);
    auto probs_aug = ops::softmax(tape, logits_aug);
    auto rho = ops::exp_elem(tape, ops::rowdot(tape, labels, probs_aug));
    auto inner = ops::sub(tape, l_aug, ops::mul(tape, rho, l_clean));
    auto one_minus = ops::add_scalar(tape, ops::neg(tape, ops::exp_elem(tape, inner)), Real(1));
    auto penalty = ops::abs_elem(tape, one_minus);
    return ops::mean_all(tape, ops::add(tape, l_aug, penalty));
}

TensorPtr consistency_objective(Tape& tape, const TensorPtr& target_logits,
                                const TensorPtr& teacher_probs, const TensorPtr& labels,
                                ObjectiveKind kind) {
    auto ce = ops::softmax_cross_entropy(tape, target_logits, labels);
    TensorPtr divergence;
    if (kind == ObjectiveKind::consistency_mse) {
        auto p = ops::softmax(tape, target_logits);
        auto diff = ops::sub(tape, p, teacher_probs);
        divergence = ops::mean_all(tape, ops::mul(tape, diff, diff));
    } else if (kind == ObjectiveKind::consistency_kld) {
        divergence = ops::kl_to_softmax(tape, target_logits, teacher_probs);
    } else {
        throw ConfigError("consistency_objective: kind must be consistency_mse/consistency_kld");
    }
    return ops::add(tape, ce, divergence);
}

TensorPtr target_objective(Tape& tape, const TensorPtr& target_logits, const TensorPtr& labels) {
    return ops::softmax_cross_entropy(tape, target_logits, labels);
}

}  // namespace taug
