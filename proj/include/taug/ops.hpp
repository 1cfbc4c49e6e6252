#pragma once

#include <vector>

#include "taug/rng.hpp"
#include "taug/tensor.hpp"

namespace taug {
namespace ops {

// ---- elementwise -----------------------------------------------------------
TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr neg(Tape& tape, const TensorPtr& a);
TensorPtr scale(Tape& tape, const TensorPtr& a, Real c);
TensorPtr add_scalar(Tape& tape, const TensorPtr& a, Real c);
TensorPtr exp_elem(Tape& tape, const TensorPtr& a);
TensorPtr abs_elem(Tape& tape, const TensorPtr& a);
// Clamp into [lo, hi]; zero gradient outside.
TensorPtr clamp_elem(Tape& tape, const TensorPtr& a, Real lo, Real hi);
TensorPtr sigmoid(Tape& tape, const TensorPtr& a);
TensorPtr log_sigmoid(Tape& tape, const TensorPtr& a);
TensorPtr leaky_relu(Tape& tape, const TensorPtr& a, Real slope = 0.2);
// In-place variant: overwrites `a`'s values and reuses its grad buffer. Only
// safe when `a` has no other consumer, e.g. an activation directly after a
// linear layer.
TensorPtr leaky_relu_inplace(Tape& tape, const TensorPtr& a, Real slope = 0.2);

// Triangle wave t(x) = arccos(cos(pi x)) / pi, computed by folding. Range
// [0,1], period 2, even, identity on [0,1]. Gradient is +-1; at fold points it
// takes the left limit.
TensorPtr triangle_wave(Tape& tape, const TensorPtr& a);

// Zero each element with probability drop_ratio and scale survivors by
// 1/(1-drop_ratio). Identity (same tensor, no rng consumed) when !training.
TensorPtr dropout(Tape& tape, const TensorPtr& a, Real drop_ratio, RngStream& rng, bool training);
TensorPtr dropout_inplace(Tape& tape, const TensorPtr& a, Real drop_ratio, RngStream& rng,
                          bool training);

// ---- structure -------------------------------------------------------------
TensorPtr reshape(Tape& tape, const TensorPtr& a, std::vector<int> new_shape);
TensorPtr concat_cols(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr col_slice(Tape& tape, const TensorPtr& a, int c0, int c1);
// Repeat each row `times` consecutive times: [R x C] -> [R*times x C].
TensorPtr repeat_rows(Tape& tape, const TensorPtr& a, int times);
TensorPtr broadcast_scalar(Tape& tape, const TensorPtr& s, int n);
// Multiply row r of `a` by s[r].
TensorPtr row_scale(Tape& tape, const TensorPtr& a, const TensorPtr& s);
// Add s[r] to every element of row r of `a`.
TensorPtr row_add(Tape& tape, const TensorPtr& a, const TensorPtr& s);
TensorPtr gather_rows(Tape& tape, const TensorPtr& a, std::vector<int> rows);

// ---- reductions ------------------------------------------------------------
TensorPtr sum_all(Tape& tape, const TensorPtr& a);
TensorPtr mean_all(Tape& tape, const TensorPtr& a);
TensorPtr rowdot(Tape& tape, const TensorPtr& a, const TensorPtr& b);  // [R x C] -> [R]
TensorPtr add_list(Tape& tape, const std::vector<TensorPtr>& terms);   // scalar sum

// ---- linear algebra --------------------------------------------------------
TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
// y = x W^T + bias, x:[B x in], W:[out x in], bias:[out].
TensorPtr linear(Tape& tape, const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias);

// ---- nn --------------------------------------------------------------------
TensorPtr softmax(Tape& tape, const TensorPtr& logits);
// Mean over batch of -sum_k y_k log softmax(z)_k (stable log-sum-exp form).
TensorPtr softmax_cross_entropy(Tape& tape, const TensorPtr& logits, const TensorPtr& labels);
// Per-sample cross entropy, [B].
TensorPtr per_sample_cross_entropy(Tape& tape, const TensorPtr& logits, const TensorPtr& labels);
// Mean over batch of sum_k y_k log(1 - softmax(z)_k); each log term is clamped
// below at log(1e-12).
TensorPtr non_saturating_loss(Tape& tape, const TensorPtr& logits, const TensorPtr& labels);
// KL(q || softmax(z)) averaged over the batch, q fixed (no grad through q).
TensorPtr kl_to_softmax(Tape& tape, const TensorPtr& logits, const TensorPtr& q);

// 2-D convolution on NHWC input, stride 1. weight:[Cout x kh*kw*Cin] with
// (ky, kx, cin) column order, bias:[Cout].
TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias,
                 int kh, int kw, int pad);
TensorPtr maxpool2(Tape& tape, const TensorPtr& x);  // 2x2, stride 2, NHWC

// Inverse-warp resampling of NHWC images with the affine map (residual + I)
// acting on normalized [-1,1]^2 output coordinates; bilinear interpolation,
// zero padding outside. residual: [B x 6], rows (a00 a01 a02; a10 a11 a12).
TensorPtr affine_warp(Tape& tape, const TensorPtr& x, const TensorPtr& residual);

// Sliced Wasserstein-1 distance between two n-point sets in R^d: average over
// n_proj random unit directions of the mean absolute difference of the sorted
// projections. Gradient flows through the sorted pairing.
TensorPtr swd(Tape& tape, const TensorPtr& a, const TensorPtr& b, int n_proj, RngStream& rng);

namespace detail {
// C = alpha * op(A) op(B) + beta * C, row-major dense.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, Real alpha, const Real* a,
          const Real* b, Real beta, Real* c);
// Test fixture: scales the leaky_relu backward rule when set, so the gradient
// checker's failure path can be exercised.
extern bool sabotage_leaky_relu_backward;
}  // namespace detail

}  // namespace ops
}  // namespace taug
