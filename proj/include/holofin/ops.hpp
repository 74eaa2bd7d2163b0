#pragma once

#include <utility>

#include "holofin/tensor.hpp"

namespace holofin::ad {

// Complex tensors travel as (re, im) node pairs of equal shape. Spatial ops
// treat the last two extents as H x W and batch over the leading ones.

using NodePair = std::pair<NodeId, NodeId>;

// Unscaled forward 2D DFT per leading slice. Adjoint is the scaled inverse.
NodePair fft2(Tape& t, NodeId re, NodeId im);
// Inverse 2D DFT with 1/(H*W) scaling. Adjoint is the scaled forward.
NodePair ifft2(Tape& t, NodeId re, NodeId im);

// Keeps the centred (2k+1)^2 low-frequency window of a wrapped spectrum
// [..., H, W] -> [..., 2k+1, 2k+1]. Requires 2k+1 <= min(H, W).
NodePair spectral_truncate(Tape& t, NodeId re, NodeId im, int k);
// Zero-pads a truncated window back to H x W (exact adjoint of truncation).
NodePair spectral_pad(Tape& t, NodeId re, NodeId im, int out_h, int out_w);

// F'_j = W'_j ⊙ Σ_i F_i with a real weight per output channel.
// re/im: [C,H,W]; w: [C,H,W].
NodePair spaf_weight_mul(Tape& t, NodeId re, NodeId im, NodeId w);
// Full transform F'_j = Σ_i W_{j,i} ⊙ F_i; w: [C,C,H,W].
NodePair spaf_weight_mul_full(Tape& t, NodeId re, NodeId im, NodeId w);
// Complex-weight variant of the shrunk transform; w_re/w_im: [C,H,W].
NodePair spaf_weight_mul_complex(Tape& t, NodeId re, NodeId im, NodeId w_re, NodeId w_im);

// y_o = Σ_i K[o,i]·x_i + b_o pointwise. x: [Cin,H,W], k: [Cout,Cin], b: [Cout].
NodeId conv1x1(Tape& t, NodeId x, NodeId k, NodeId b);

// PReLU with learnable slope; a has one entry per leading channel of x, or a
// single shared entry. Gradient at exactly 0 is 1 (the identity branch).
NodeId prelu(Tape& t, NodeId x, NodeId a);

NodeId add(Tape& t, NodeId x, NodeId y);
NodeId sub(Tape& t, NodeId x, NodeId y);
NodeId mul(Tape& t, NodeId x, NodeId y);
NodeId scale(Tape& t, NodeId x, double c);
NodeId abs_op(Tape& t, NodeId x);
// Complex magnitude sqrt(re^2 + im^2); gradient 0 at the origin.
NodeId cabs(Tape& t, NodeId re, NodeId im);
NodeId mean(Tape& t, NodeId x);
// Extracts channel c of a [C,...] tensor as a [1,...] tensor.
NodeId select_channel(Tape& t, NodeId x, int c);

}  // namespace holofin::ad
