#pragma once

#include <vector>

#include "egovos/autograd.hpp"

// Differentiable tensor ops. Rasters are [C, H, W]; flattened feature maps
// are [C, P] with P = H * W.
namespace egovos::ops {

Var add(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& x);
/// Sum of scalar vars.
Var sum(const std::vector<Var>& scalars);

enum class Padding { kZero, kReplicate };

/// 2-D convolution. w: [Cout, Cin, k, k]; b: [Cout] or undefined.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
           Padding mode = Padding::kZero);

/// Per-location linear map over channels (1x1 convolution). x: [Cin, ...];
/// w: [Cout, Cin]; b: [Cout] or undefined. Trailing dims are preserved.
Var pointwise_linear(const Var& x, const Var& w, const Var& b);

/// Bilinear resize with half-pixel centers. x: [C, H, W].
Var resize_bilinear(const Var& x, int out_h, int out_w);

/// 2x2 average pooling with stride 2. x: [C, H, W] with even H and W.
Var avg_pool2(const Var& x);

/// Concatenates along axis 0; trailing dims must agree.
Var concat(const std::vector<Var>& parts);
/// Concatenates rank-2 tensors along axis 1 (columns).
Var concat_columns(const std::vector<Var>& parts);
/// Rows [begin, begin + count) of axis 0.
Var slice(const Var& x, int begin, int count);
Var reshape(const Var& x, std::vector<int> shape);

enum class Similarity { kDot, kNegL2 };

struct AttentionOptions {
  Similarity similarity = Similarity::kDot;
  int top_k = 0;  // 0 disables truncation
};

/// Affinity matrix [Q, M]: row-wise softmax of scaled similarities between
/// query keys [Ck, Q] and memory keys [Ck, M].
Tensor affinity(const Tensor& query_keys, const Tensor& memory_keys, const AttentionOptions& opts);

/// Memory readout [D, Q] = values [D, M] * affinity^T.
Var attention_read(const Var& query_keys, const Var& memory_keys, const Var& memory_values,
                   const AttentionOptions& opts);

/// Logit clamp that bounds the per-object odds to [1e-6, 1e6].
inline constexpr double kMaxOddsLogit = 13.815510557964274;  // ln(1e6)

/// Per-object logits [N, H, W] -> distribution [(N+1), H, W] with background
/// odds fixed at 1.
Var soft_aggregate(const Var& logits);

/// Pixel cross-entropy plus mean per-object soft Dice (smoothing 1).
/// probs: [(N+1), H, W]; labels: H*W values in [0, N].
Var segmentation_loss(const Var& probs, const std::vector<int>& labels);

}  // namespace egovos::ops
