#include "taug/augment.hpp"

#include <cmath>

namespace taug {

namespace {

constexpr Real kGateSkipEps = 1e-6;

TensorPtr noise_input(Tape& tape, const TensorPtr& z, const TensorPtr& ctx) {
    if (!ctx) return z;
    return ops::concat_cols(tape, z, ctx);
}

// sigmoid squashed into (0.5 - scale/2, 0.5 + scale/2) + offset. The clamp
// keeps the interval strictly open in floating point even when the sigmoid
// saturates to exactly 0 or 1.
TensorPtr squash(Tape& tape, const TensorPtr& unnorm, Real scale, Real offset) {
    auto s = ops::sigmoid(tape, unnorm);
    s = ops::clamp_elem(tape, s, Real(1e-12), Real(1) - Real(1e-12));
    s = ops::add_scalar(tape, s, Real(-0.5));
    s = ops::scale(tape, s, scale);
    if (offset != Real(0)) s = ops::add_scalar(tape, s, offset);
    return s;
}

}  // namespace

ColorModel ColorModel::create(int noise_dim, int ctx_dim, RngStream& rng, Real drop_ratio) {
    ColorModel m;
    m.rgb = Mlp3::create(3, 128, 6, rng, drop_ratio, true);
    m.noise = Mlp3::create(noise_dim + ctx_dim, 512, 2, rng, drop_ratio, true);
    return m;
}

ColorModel ColorModel::clone(bool rg) const {
    ColorModel m;
    m.scale = scale;
    m.rgb = rgb.clone(rg);
    m.noise = noise.clone(rg);
    return m;
}

GeoModel GeoModel::create(int noise_dim, int ctx_dim, RngStream& rng, Real drop_ratio) {
    GeoModel m;
    m.mlp = Mlp3::create(noise_dim + ctx_dim, 512, 6, rng, drop_ratio, true);
    return m;
}

GeoModel GeoModel::clone(bool rg) const {
    GeoModel m;
    m.scale = scale;
    m.mlp = mlp.clone(rg);
    return m;
}

AugmentationPolicy AugmentationPolicy::create(int noise_dim, int ctx_dim, RngStream& rng,
                                              Real drop_ratio) {
    AugmentationPolicy p;
    p.noise_dim = noise_dim;
    p.ctx_dim = ctx_dim;
    p.color = ColorModel::create(noise_dim, ctx_dim, rng, drop_ratio);
    p.geo = GeoModel::create(noise_dim, ctx_dim, rng, drop_ratio);
    p.gate_logit_c = Tensor::scalar(0, true);
    p.gate_logit_g = Tensor::scalar(0, true);
    return p;
}

AugmentationPolicy AugmentationPolicy::clone(bool rg) const {
    AugmentationPolicy p;
    p.tau = tau;
    p.noise_dim = noise_dim;
    p.ctx_dim = ctx_dim;
    p.color = color.clone(rg);
    p.geo = geo.clone(rg);
    p.gate_logit_c = gate_logit_c->clone(rg);
    p.gate_logit_g = gate_logit_g->clone(rg);
    return p;
}

std::vector<NamedParam> AugmentationPolicy::params(const std::string& prefix) const {
    std::vector<NamedParam> out;
    color.rgb.collect_params(prefix + ".color.rgb", out);
    color.noise.collect_params(prefix + ".color.noise", out);
    geo.mlp.collect_params(prefix + ".geo", out);
    out.push_back({prefix + ".gate_logit_c", gate_logit_c});
    out.push_back({prefix + ".gate_logit_g", gate_logit_g});
    return out;
}

void AugmentationPolicy::set_requires_grad(bool rg) {
    color.rgb.set_requires_grad(rg);
    color.noise.set_requires_grad(rg);
    geo.mlp.set_requires_grad(rg);
    gate_logit_c->set_requires_grad(rg);
    gate_logit_g->set_requires_grad(rg);
}

namespace {
Real sigmoid_value(Real x) {
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}
}  // namespace

Real AugmentationPolicy::p_color() const { return sigmoid_value(gate_logit_c->value[0]); }
Real AugmentationPolicy::p_geo() const { return sigmoid_value(gate_logit_g->value[0]); }

ColorParams color_params(Tape& tape, const AugmentationPolicy& policy,
                         const TensorPtr& pixels_flat, const TensorPtr& z, const TensorPtr& ctx,
                         RngStream& rng, bool training) {
    const int b = z->dim(0);
    if (pixels_flat->cols() != 3) throw DimensionError("color_params: pixels must be [N x 3]");
    if (pixels_flat->rows() % b != 0)
        throw DimensionError("color_params: pixel rows not divisible by batch");
    const int hw = pixels_flat->rows() / b;

    auto rgb_out = policy.color.rgb.forward(tape, pixels_flat, rng, training);       // [BHW x 6]
    auto nin = noise_input(tape, z, ctx);
    auto noise_out = policy.color.noise.forward(tape, nin, rng, training);           // [B x 2]

    auto alpha_noise = ops::repeat_rows(tape, ops::col_slice(tape, noise_out, 0, 1), hw);
    auto beta_noise = ops::repeat_rows(tape, ops::col_slice(tape, noise_out, 1, 2), hw);

    auto alpha_unnorm = ops::row_add(tape, ops::col_slice(tape, rgb_out, 0, 3), alpha_noise);
    auto beta_unnorm = ops::row_add(tape, ops::col_slice(tape, rgb_out, 3, 6), beta_noise);

    ColorParams cp;
    cp.alpha = squash(tape, alpha_unnorm, policy.color.scale, Real(1));
    cp.beta = squash(tape, beta_unnorm, policy.color.scale, Real(0));
    return cp;
}

TensorPtr apply_color(Tape& tape, const TensorPtr& pixels, const TensorPtr& alpha,
                      const TensorPtr& beta) {
    auto scaled = ops::mul(tape, alpha, pixels);
    auto shifted = ops::add(tape, scaled, beta);
    return ops::triangle_wave(tape, shifted);
}

TensorPtr geo_params(Tape& tape, const AugmentationPolicy& policy, const TensorPtr& z,
                     const TensorPtr& ctx, RngStream& rng, bool training) {
    auto nin = noise_input(tape, z, ctx);
    auto unnorm = policy.geo.mlp.forward(tape, nin, rng, training);  // [B x 6]
    return squash(tape, unnorm, policy.geo.scale, Real(0));
}

TensorPtr apply_affine(Tape& tape, const TensorPtr& pixels, const TensorPtr& residual) {
    return ops::affine_warp(tape, pixels, residual);
}

TensorPtr gate_weights(Tape& tape, const TensorPtr& gate_logit, const std::vector<Real>& logistic,
                       Real tau) {
    if (tau <= 0) throw ConfigError("gate_weights: tau must be positive");
    const int b = static_cast<int>(logistic.size());
    auto logp = ops::log_sigmoid(tape, gate_logit);
    auto logp_b = ops::broadcast_scalar(tape, logp, b);
    auto draws = Tensor::from_data({b}, logistic);
    auto shifted = ops::add(tape, logp_b, draws);
    return ops::sigmoid(tape, ops::scale(tape, shifted, Real(1) / tau));
}

Real sample_gate(Real p_logit, Real tau, RngStream& rng) {
    Tape tape;
    tape.set_enabled(false);
    auto logit = Tensor::scalar(p_logit);
    return gate_weights(tape, logit, {rng.logistic()}, tau)->value[0];
}

GateBlend blend_gate(Tape& tape, const TensorPtr& w_color, const ColorParams& cp,
                     int pixels_per_image, const TensorPtr& w_geo, const TensorPtr& residual) {
    GateBlend out;
    // residual form of the convex blend: identity inputs stay bit-exact
    auto w_pix = ops::repeat_rows(tape, w_color, pixels_per_image);  // [B*HW x 1]
    auto alpha_res = ops::add_scalar(tape, cp.alpha, Real(-1));
    out.alpha_hat = ops::add_scalar(tape, ops::row_scale(tape, alpha_res, w_pix), Real(1));
    out.beta_hat = ops::row_scale(tape, cp.beta, w_pix);
    out.residual_hat = ops::row_scale(tape, residual, w_geo);
    return out;
}

AugmentResult augment(Tape& tape, const AugmentationPolicy& policy, const ImageBatch& batch,
                      RngStream& rng, const AugmentOptions& options) {
    const int b = batch.batch(), h = batch.height(), w = batch.width();
    const int hw = h * w;
    if (policy.ctx_dim > 0 && (!batch.labels || batch.labels->dim(1) != policy.ctx_dim))
        throw DimensionError("augment: policy expects a context vector of width " +
                             std::to_string(policy.ctx_dim));
    const TensorPtr ctx = policy.ctx_dim > 0 ? batch.labels : nullptr;

    AugmentResult res;

    res.z = Tensor::create({b, policy.noise_dim});
    rng.fill_normal(res.z->value);

    std::vector<Real> draws_c(b), draws_g(b);
    for (auto& v : draws_c) v = rng.logistic();
    for (auto& v : draws_g) v = rng.logistic();
    res.gate_c = gate_weights(tape, policy.gate_logit_c, draws_c, policy.tau);
    res.gate_g = gate_weights(tape, policy.gate_logit_g, draws_g, policy.tau);

    auto flat = ops::reshape(tape, batch.pixels, {b * hw, 3});

    const bool skip_mode = options.skip_saturated_gates && !tape.enabled();
    TensorPtr x_tilde;
    if (skip_mode) {
        std::vector<int> apply_images;
        for (int i = 0; i < b; ++i)
            if (res.gate_c->value[i] >= kGateSkipEps) apply_images.push_back(i);
        if (apply_images.empty()) {
            x_tilde = flat;
        } else {
            std::vector<int> pixel_rows;
            pixel_rows.reserve(apply_images.size() * static_cast<std::size_t>(hw));
            for (int img : apply_images)
                for (int p = 0; p < hw; ++p) pixel_rows.push_back(img * hw + p);
            auto sub_flat = ops::gather_rows(tape, flat, pixel_rows);
            auto sub_z = ops::gather_rows(tape, res.z, apply_images);
            const TensorPtr sub_ctx = ctx ? ops::gather_rows(tape, ctx, apply_images) : nullptr;
            auto cp = color_params(tape, policy, sub_flat, sub_z, sub_ctx, rng,
                                   options.training);
            auto sub_w = Tensor::create({static_cast<int>(apply_images.size())});
            for (std::size_t i = 0; i < apply_images.size(); ++i)
                sub_w->value[i] = res.gate_c->value[apply_images[i]];
            auto w_pix = ops::repeat_rows(tape, sub_w, hw);
            auto alpha_res = ops::add_scalar(tape, cp.alpha, Real(-1));
            auto alpha_hat =
                ops::add_scalar(tape, ops::row_scale(tape, alpha_res, w_pix), Real(1));
            auto beta_hat = ops::row_scale(tape, cp.beta, w_pix);
            auto sub_out = apply_color(tape, sub_flat, alpha_hat, beta_hat);
            x_tilde = flat->clone(false);
            for (std::size_t i = 0; i < pixel_rows.size(); ++i)
                for (int cch = 0; cch < 3; ++cch)
                    x_tilde->value[static_cast<std::size_t>(pixel_rows[i]) * 3 + cch] =
                        sub_out->value[i * 3 + cch];
        }
        res.residual = geo_params(tape, policy, res.z, ctx, rng, options.training);
        auto residual_hat = ops::row_scale(tape, res.residual, res.gate_g);
        res.color_pixels = ops::reshape(tape, x_tilde, {b, h, w, 3});
        res.pixels = apply_affine(tape, res.color_pixels, residual_hat);
        return res;
    }

    auto cp = color_params(tape, policy, flat, res.z, ctx, rng, options.training);
    res.alpha = cp.alpha;
    res.beta = cp.beta;
    res.residual = geo_params(tape, policy, res.z, ctx, rng, options.training);
    auto blend = blend_gate(tape, res.gate_c, cp, hw, res.gate_g, res.residual);
    x_tilde = apply_color(tape, flat, blend.alpha_hat, blend.beta_hat);
    res.color_pixels = ops::reshape(tape, x_tilde, {b, h, w, 3});
    res.pixels = apply_affine(tape, res.color_pixels, blend.residual_hat);
    return res;
}

}  // namespace taug
