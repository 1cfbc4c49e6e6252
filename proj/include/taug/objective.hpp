#pragma once

#include <string>

#include "taug/augment.hpp"

namespace taug {

enum class ObjectiveKind {
    baseline_none,
    adv_aa,
    pointaugment,
    teachaugment,
    consistency_mse,
    consistency_kld,
};

ObjectiveKind objective_kind_from_string(const std::string& s);
std::string to_string(ObjectiveKind kind);
// Kinds whose inner steps feed learned-augmented batches to the target model
// and that run policy ascent/descent steps.
bool uses_learned_augmentation(ObjectiveKind kind);

struct ObjectiveConfig {
    Real smoothing = 0.1;   // label smoothing epsilon, in [0,1)
    Real color_reg = 10.0;  // lambda
    int swd_projections = 16;
    ObjectiveKind kind = ObjectiveKind::teachaugment;

    void validate() const;
};

// (1-eps) y + eps/K. Rows stay probability vectors.
TensorPtr smooth_labels(const TensorPtr& y, Real eps);

// Sum over pixel positions of the SWD between clean and color-augmented pixel
// colors across the batch. Inputs are [B,H,W,3] (or [B*HW x 3]) with matching
// shapes; batch size must be at least 2.
TensorPtr color_regularization(Tape& tape, const TensorPtr& before, const TensorPtr& after,
                               int n_proj, RngStream& rng);

// Scalar the policy ascends: non-saturating loss on smoothed labels, minus the
// teacher's cross entropy, minus lambda * color regularization.
TensorPtr policy_objective_teachaugment(Tape& tape, const TensorPtr& target_logits,
                                        const TensorPtr& teacher_logits, const TensorPtr& labels,
                                        const TensorPtr& before_pixels,
                                        const TensorPtr& after_color_pixels,
                                        const ObjectiveConfig& cfg, RngStream& rng);

// Cross entropy, maximized in phi; no teacher, no regularizer.
TensorPtr policy_objective_adv_aa(Tape& tape, const TensorPtr& target_logits,
                                  const TensorPtr& labels);

// Per-sample L_aug + |1 - exp(L_aug - rho L_clean)| with rho = exp(y . f_aug),
// batch-averaged; minimized in phi.
TensorPtr policy_objective_pointaugment(Tape& tape, const TensorPtr& logits_aug,
                                        const TensorPtr& logits_clean, const TensorPtr& labels);

// Theta objective for the consistency baseline: cross entropy plus MSE or KLD
// between target and (fixed) teacher predictions.
TensorPtr consistency_objective(Tape& tape, const TensorPtr& target_logits,
                                const TensorPtr& teacher_probs, const TensorPtr& labels,
                                ObjectiveKind kind);

// Plain cross entropy, minimized in theta.
TensorPtr target_objective(Tape& tape, const TensorPtr& target_logits, const TensorPtr& labels);

}  // namespace taug
