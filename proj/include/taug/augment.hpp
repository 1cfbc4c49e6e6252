#pragma once

#include <string>
#include <vector>

#include "taug/layers.hpp"

namespace taug {

// Image batch: pixels [B,H,W,3] with values in [0,1], optional one-hot labels
// [B,K].
struct ImageBatch {
    TensorPtr pixels;
    TensorPtr labels;            // may be null
    std::vector<int> label_ids;  // may be empty

    int batch() const { return pixels->dim(0); }
    int height() const { return pixels->dim(1); }
    int width() const { return pixels->dim(2); }
    int classes() const { return labels ? labels->dim(1) : 0; }
};

// Per-pixel color transform. The rgb path maps a single pixel's RGB vector to
// scale/shift offsets; the noise path maps (z, c) to a scalar scale/shift pair
// that is shared by all pixels of an image and controls global brightness.
struct ColorModel {
    Mlp3 rgb;    // 3 -> 128 -> 128 -> 6
    Mlp3 noise;  // noise_dim + ctx -> 512 -> 512 -> 2
    Real scale = 0.8;

    static ColorModel create(int noise_dim, int ctx_dim, RngStream& rng, Real drop_ratio);
    ColorModel clone(bool requires_grad) const;
};

// Residual affine transform parameters from (z, c).
struct GeoModel {
    Mlp3 mlp;  // noise_dim + ctx -> 512 -> 512 -> 6
    Real scale = 0.5;

    static GeoModel create(int noise_dim, int ctx_dim, RngStream& rng, Real drop_ratio);
    GeoModel clone(bool requires_grad) const;
};

// One sampled augmentation function: color model, geo model and the two
// relaxed-Bernoulli application gates (stored as logits, p = sigmoid(logit)).
// Output layers are zero-initialized so the whole map starts as the identity.
struct AugmentationPolicy {
    ColorModel color;
    GeoModel geo;
    TensorPtr gate_logit_c;
    TensorPtr gate_logit_g;
    Real tau = 0.05;
    int noise_dim = 128;
    int ctx_dim = 0;

    static AugmentationPolicy create(int noise_dim, int ctx_dim, RngStream& rng,
                                     Real drop_ratio = 0.8);
    AugmentationPolicy clone(bool requires_grad) const;
    std::vector<NamedParam> params(const std::string& prefix) const;
    void set_requires_grad(bool rg);
    Real p_color() const;
    Real p_geo() const;
};

struct ColorParams {
    TensorPtr alpha;  // [B*H*W x 3], in (1 - scale/2, 1 + scale/2)
    TensorPtr beta;   // [B*H*W x 3], in (-scale/2, scale/2)
};

// Raw (pre-gate) color parameters for a batch. `z` is [B x noise_dim]; `ctx`
// may be null. The rgb path runs on all pixels as one [B*H*W x 3] product.
ColorParams color_params(Tape& tape, const AugmentationPolicy& policy,
                         const TensorPtr& pixels_flat, const TensorPtr& z, const TensorPtr& ctx,
                         RngStream& rng, bool training);

// x~ = t(alpha . x + beta); shapes must match elementwise.
TensorPtr apply_color(Tape& tape, const TensorPtr& pixels, const TensorPtr& alpha,
                      const TensorPtr& beta);

// Raw (pre-gate) residual affine parameters, [B x 6] in (-scale/2, scale/2).
TensorPtr geo_params(Tape& tape, const AugmentationPolicy& policy, const TensorPtr& z,
                     const TensorPtr& ctx, RngStream& rng, bool training);

// Resample with the affine map (residual + identity); see ops::affine_warp.
TensorPtr apply_affine(Tape& tape, const TensorPtr& pixels, const TensorPtr& residual);

// Relaxed-Bernoulli gate weights w = sigmoid((L + log p) / tau) for fixed
// logistic draws L, differentiable in the gate logit.
TensorPtr gate_weights(Tape& tape, const TensorPtr& gate_logit, const std::vector<Real>& logistic,
                       Real tau);

// Single gate draw, w in (0,1).
Real sample_gate(Real p_logit, Real tau, RngStream& rng);

struct GateBlend {
    TensorPtr alpha_hat;     // 1 + w_c (alpha - 1)
    TensorPtr beta_hat;      // w_c beta
    TensorPtr residual_hat;  // w_g A
};

// Convex blend of parameters toward the identity values, per image (w vectors
// are [B], color params are per pixel).
GateBlend blend_gate(Tape& tape, const TensorPtr& w_color, const ColorParams& cp, int pixels_per_image,
                     const TensorPtr& w_geo, const TensorPtr& residual);

struct AugmentOptions {
    bool training = true;
    // Value-mode shortcut: images whose color gate weight is below 1e-6 skip
    // the per-pixel MLP and keep their exact input pixels. Only honored when
    // the tape is disabled; the differentiable path never skips.
    bool skip_saturated_gates = false;
};

struct AugmentResult {
    TensorPtr pixels;        // [B,H,W,3], final augmented batch
    TensorPtr color_pixels;  // [B,H,W,3], after color stage, before the warp
    TensorPtr alpha;         // raw color params (null on the skip path)
    TensorPtr beta;
    TensorPtr residual;      // raw geo residual [B x 6]
    TensorPtr gate_c;        // [B]
    TensorPtr gate_g;        // [B]
    TensorPtr z;             // [B x noise_dim]
};

// Full augmentation a = geo o color with per-image noise, gates, and dropout
// stochasticity. Draw order on `rng`: z, color-gate logistics, geo-gate
// logistics, then dropout masks in execution order.
AugmentResult augment(Tape& tape, const AugmentationPolicy& policy, const ImageBatch& batch,
                      RngStream& rng, const AugmentOptions& options = {});

}  // namespace taug
