// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "apollo/tensor.hpp"

namespace apollo::nn {

using ag::Tensor;

enum class PadMode { same, causal };

// y = gain * x / sqrt(mean(x^2, axis) + eps)
Tensor rms_norm(const Tensor& x, const Tensor& gain, int axis,
                double eps = 1e-8);

// gated linear unit: split `axis` in half into (a, b), y = a * sigmoid(b)
Tensor glu(const Tensor& x, int axis = -1);

Tensor gelu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

// softmax over the last axis; causal=true masks columns above the row index
Tensor softmax(const Tensor& x, bool causal = false);

// adds a length-N vector to the last axis
Tensor add_rowvec(const Tensor& x, const Tensor& b);

// x: (C,T) or (B,C,T); w: (C_out, C_in/groups, k); b: (C_out) or undefined
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              int64_t stride, int64_t dilation, PadMode pad_mode,
              int64_t groups = 1);

// x: (C,H,W) or (B,C,H,W); w: (C_out, C_in, kh, kw); explicit padding
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              int64_t stride_h, int64_t stride_w, int64_t pad_h,
              int64_t pad_w);

// rotary position embedding over the last axis (pairs), positions indexed
// along the second-to-last axis
Tensor rotary_embed(const Tensor& x, double base = 10000.0);

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // weights are (in, out)
};

// x: (P,N) or (B,P,N); scaled dot-product attention with rotary q/k
Tensor multi_head_attention(const Tensor& x, const AttentionParams& p,
                            int64_t n_heads, bool causal_mask = false,
                            double rotary_base = 10000.0);

// w / sigma_max(w); u is the persistent power-iteration vector (length =
// w.dim(0)), updated in place when training=true
Tensor spectral_norm_apply(const Tensor& w, Tensor& u, bool training);

}  // namespace apollo::nn
