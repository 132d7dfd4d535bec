#pragma once

#include <vector>

#include "depthlayers/toynet/tensor.hpp"

namespace depthlayers::nn {

// Zero-padded 2-D convolution of a (C,H,W) input with (O,C,k,k) weights and (O) bias.
Var conv2d(Tape& t, Var x, Var weight, Var bias, int stride, int pad);

Var leaky_relu(Tape& t, Var x, double slope = 0.01);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double s);
Var sum(Tape& t, const std::vector<Var>& xs);

// Channel concatenation of two (C,H,W) tensors with equal H and W.
Var concat(Tape& t, Var a, Var b);

// Nearest-neighbour x2 upsampling.
Var upsample2(Tape& t, Var x);

// 2x2 average pooling; a trailing odd row or column is dropped.
Var avgpool2(Tape& t, Var x);

// Top-left (C, h, w) window.
Var crop(Tape& t, Var x, int h, int w);

// alpha * a + (1 - alpha) * b with a constant per-pixel alpha of shape (1,H,W).
Var blend(Tape& t, Var a, Var b, const Tensor& alpha);

Var mean(Tape& t, Var x);
Var mean_abs(Tape& t, Var x);
Var mean_square(Tape& t, Var x);

// (sum |forward x-difference| + sum |forward y-difference|) / (H*W), summed over channels.
Var gradient_abs_mean(Tape& t, Var x);

}  // namespace depthlayers::nn
