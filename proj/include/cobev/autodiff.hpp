#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cobev/tensor.hpp"

namespace cobev {

// Reverse-mode tape. Every op records a closure that accumulates gradients
// into its parents. backward() walks the tape in reverse creation order, so
// graphs must be built by single forward passes (which is how every module
// here works).
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var input(Tensor value);

  const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const Tensor& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

  void backward(Var scalar_loss);

  // ---- elementwise ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var mul_const(Var a, Tensor mask);  // elementwise by a constant tensor
  Var relu(Var a);
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var pow_const(Var a, double p);
  Var log(Var a);
  Var smooth_l1(Var a);  // 0.5x^2 for |x|<1 else |x|-0.5

  // ---- linear / conv ----
  Var linear(Var x, Var w, Var b);  // x:[in], w:[out,in], b:[out]
  Var conv2d(Var x, Var w, Var b, int stride, int pad);
  Var depthwise_conv2d(Var x, Var w, Var b, int pad);  // w:[C,k,k]
  Var avg_pool2x2(Var x);
  Var upsample_bilinear(Var x, int out_h, int out_w);

  // Deformable convolution, stride 1, same-size output, zero padding.
  // x:[Cin,H,W]; offsets:[2K,H,W] as (dx,dy) pairs per tap, x = width axis;
  // w:[Cout,Cin,K]; b:[Cout]; mod:[K] per-tap or [K,H,W] per-location.
  Var deform_conv(Var x, Var offsets, Var w, Var b, Var mod, int ksize);

  // Nearest-neighbour warp. map[t] is the flat source cell for target cell t
  // (shared across channels), -1 for out-of-bounds (yields 0).
  Var warp_nn(Var x, std::vector<int> map, int out_h, int out_w);

  // ---- shape / reduction ----
  Var concat_ch(Var a, Var b);
  Var slice_ch(Var x, int c0, int c1);  // channels [c0, c1)
  Var gap(Var x);                       // [C,H,W] -> [C]
  Var sum(Var x);
  Var mean(Var x);
  Var mse(Var a, Var b);

  // ---- broadcast / attention helpers ----
  Var add_channel_bias(Var x, Var b);         // x:[C,H,W], b:[C]
  Var broadcast_mul_map(Var x, Var m);        // x:[C,H,W], m:[H,W]
  Var broadcast_mul_channel(Var x, Var s);    // x:[C,H,W], s:[C]
  Var dot_per_pixel(Var a, Var b);            // -> [H,W]
  Var stack_maps(const std::vector<Var>& ms); // N x [H,W] -> [N,H,W]
  Var slice_map(Var x, int n);                // [N,H,W] -> [H,W]
  Var softmax_vec(Var x);                     // [N]
  Var softmax_axis0(Var x);                   // [A,H,W], softmax over A per pixel

  // Channel-dim normalization. If normalize, standardizes across C per
  // location before the affine; otherwise a pure per-channel affine map.
  Var layer_norm_ch(Var x, Var gamma, Var beta, bool normalize);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;
  };

  Var make(Tensor value, std::function<void(Tape&)> back);
  Tensor& g(Var v) { return nodes_[static_cast<size_t>(v.id)].grad; }
  const Tensor& v(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }

  std::vector<Node> nodes_;
};

}  // namespace cobev
