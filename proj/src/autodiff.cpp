#include "cobev/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cobev/common.hpp"

namespace cobev {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_bwd(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

inline double sigmoid_fwd(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_fwd(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

struct ConvDims {
  int cin, h, w, cout, kh, kw, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  ConvDims d;
  d.cin = x.dim(0);
  d.h = x.dim(1);
  d.w = x.dim(2);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  if (w.dim(1) != d.cin) throw std::runtime_error("conv2d: channel mismatch");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

}  // namespace

Var Tape::make(Tensor value, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) { return make(std::move(value), nullptr); }

void Tape::backward(Var scalar_loss) {
  if (v(scalar_loss).size() != 1) throw std::runtime_error("backward: loss must be scalar");
  for (auto& n : nodes_) n.grad.fill(0.0);
  g(scalar_loss)[0] = 1.0;
  for (int i = scalar_loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<size_t>(i)];
    if (n.back) n.back(*this);
  }
}

// ---------------------------------------------------------------- elementwise

Var Tape::add(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (!ta.same_shape(tb)) throw std::runtime_error("add: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i];
  Var r;
  r = make(std::move(out), [a, b, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& ga = t.g(a);
    Tensor& gb = t.g(b);
    for (int64_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
  return r;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (!ta.same_shape(tb)) throw std::runtime_error("sub: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] - tb[i];
  Var r;
  r = make(std::move(out), [a, b, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& ga = t.g(a);
    Tensor& gb = t.g(b);
    for (int64_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  });
  return r;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (!ta.same_shape(tb)) throw std::runtime_error("mul: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
  Var r;
  r = make(std::move(out), [a, b, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    const Tensor& vb = t.v(b);
    Tensor& ga = t.g(a);
    Tensor& gb = t.g(b);
    for (int64_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * vb[i];
      gb[i] += go[i] * va[i];
    }
  });
  return r;
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double c) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * c;
  Var r;
  r = make(std::move(out), [a, c, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
  });
  return r;
}

Var Tape::add_const(Var a, double c) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + c;
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
  return r;
}

Var Tape::mul_const(Var a, Tensor mask) {
  const Tensor& ta = v(a);
  if (!ta.same_shape(mask)) throw std::runtime_error("mul_const: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * mask[i];
  Var r;
  r = make(std::move(out),
           [a, m = std::move(mask), r_id = static_cast<int>(nodes_.size())](Tape& t) {
             const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
             Tensor& ga = t.g(a);
             for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] * m[i];
           });
  return r;
}

Var Tape::relu(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i)
      if (va[i] > 0.0) ga[i] += go[i];
  });
  return r;
}

Var Tape::gelu(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = gelu_fwd(ta[i]);
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] * gelu_bwd(va[i]);
  });
  return r;
}

Var Tape::sigmoid(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = sigmoid_fwd(ta[i]);
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const auto& node = t.nodes_[static_cast<size_t>(r_id)];
    const Tensor& go = node.grad;
    const Tensor& y = node.value;
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
  });
  return r;
}

Var Tape::softplus(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = softplus_fwd(ta[i]);
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] * sigmoid_fwd(va[i]);
  });
  return r;
}

Var Tape::pow_const(Var a, double p) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = std::pow(ta[i], p);
  Var r;
  r = make(std::move(out), [a, p, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) {
      double d = (va[i] == 0.0 && p < 1.0) ? 0.0 : p * std::pow(va[i], p - 1.0);
      ga[i] += go[i] * d;
    }
  });
  return r;
}

Var Tape::log(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) out[i] = std::log(ta[i]);
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) ga[i] += go[i] / va[i];
  });
  return r;
}

Var Tape::smooth_l1(Var a) {
  const Tensor& ta = v(a);
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.size(); ++i) {
    double x = ta[i];
    out[i] = std::fabs(x) < 1.0 ? 0.5 * x * x : std::fabs(x) - 0.5;
  }
  Var r;
  r = make(std::move(out), [a, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    Tensor& ga = t.g(a);
    for (int64_t i = 0; i < go.size(); ++i) {
      double x = va[i];
      double d = std::fabs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0);
      ga[i] += go[i] * d;
    }
  });
  return r;
}

// ------------------------------------------------------------- linear / conv

Var Tape::linear(Var x, Var w, Var b) {
  const Tensor& tx = v(x);
  const Tensor& tw = v(w);
  const Tensor& tb = v(b);
  int in = tx.dim(0);
  int out_n = tw.dim(0);
  if (tw.dim(1) != in || tb.dim(0) != out_n) throw std::runtime_error("linear: shape mismatch");
  Tensor out({out_n});
  for (int o = 0; o < out_n; ++o) {
    double acc = tb[o];
    for (int i = 0; i < in; ++i) acc += tw[static_cast<int64_t>(o) * in + i] * tx[i];
    out[o] = acc;
  }
  Var r;
  r = make(std::move(out), [x, w, b, in, out_n, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& vw = t.v(w);
    Tensor& gx = t.g(x);
    Tensor& gw = t.g(w);
    Tensor& gb = t.g(b);
    for (int o = 0; o < out_n; ++o) {
      double gv = go[o];
      gb[o] += gv;
      for (int i = 0; i < in; ++i) {
        gw[static_cast<int64_t>(o) * in + i] += gv * vx[i];
        gx[i] += gv * vw[static_cast<int64_t>(o) * in + i];
      }
    }
  });
  return r;
}

Var Tape::conv2d(Var x, Var w, Var b, int stride, int pad) {
  const Tensor& tx = v(x);
  const Tensor& tw = v(w);
  const Tensor& tb = v(b);
  ConvDims d = conv_dims(tx, tw, stride, pad);
  if (tb.dim(0) != d.cout) throw std::runtime_error("conv2d: bias mismatch");
  Tensor out({d.cout, d.oh, d.ow});
  for (int co = 0; co < d.cout; ++co) {
    double bias = tb[co];
    for (int oh = 0; oh < d.oh; ++oh)
      for (int ow = 0; ow < d.ow; ++ow) out[out.at3(co, oh, ow)] = bias;
    for (int ci = 0; ci < d.cin; ++ci) {
      for (int kh = 0; kh < d.kh; ++kh) {
        for (int kw = 0; kw < d.kw; ++kw) {
          double wv = tw[tw.at4(co, ci, kh, kw)];
          if (wv == 0.0) continue;
          for (int oh = 0; oh < d.oh; ++oh) {
            int ih = oh * stride + kh - pad;
            if (ih < 0 || ih >= d.h) continue;
            const double* xrow = tx.ptr() + tx.at3(ci, ih, 0);
            double* orow = out.ptr() + out.at3(co, oh, 0);
            for (int ow = 0; ow < d.ow; ++ow) {
              int iw = ow * stride + kw - pad;
              if (iw < 0 || iw >= d.w) continue;
              orow[ow] += wv * xrow[iw];
            }
          }
        }
      }
    }
  }
  Var r;
  r = make(std::move(out), [x, w, b, d, stride, pad, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& vw = t.v(w);
    Tensor& gx = t.g(x);
    Tensor& gw = t.g(w);
    Tensor& gb = t.g(b);
    for (int co = 0; co < d.cout; ++co) {
      double acc_b = 0.0;
      for (int oh = 0; oh < d.oh; ++oh)
        for (int ow = 0; ow < d.ow; ++ow) acc_b += go[go.at3(co, oh, ow)];
      gb[co] += acc_b;
      for (int ci = 0; ci < d.cin; ++ci) {
        for (int kh = 0; kh < d.kh; ++kh) {
          for (int kw = 0; kw < d.kw; ++kw) {
            double wv = vw[vw.at4(co, ci, kh, kw)];
            double acc_w = 0.0;
            for (int oh = 0; oh < d.oh; ++oh) {
              int ih = oh * stride + kh - pad;
              if (ih < 0 || ih >= d.h) continue;
              const double* xrow = vx.ptr() + vx.at3(ci, ih, 0);
              double* gxrow = gx.ptr() + gx.at3(ci, ih, 0);
              const double* grow = go.ptr() + go.at3(co, oh, 0);
              for (int ow = 0; ow < d.ow; ++ow) {
                int iw = ow * stride + kw - pad;
                if (iw < 0 || iw >= d.w) continue;
                acc_w += grow[ow] * xrow[iw];
                gxrow[iw] += grow[ow] * wv;
              }
            }
            gw[gw.at4(co, ci, kh, kw)] += acc_w;
          }
        }
      }
    }
  });
  return r;
}

Var Tape::depthwise_conv2d(Var x, Var w, Var b, int pad) {
  const Tensor& tx = v(x);
  const Tensor& tw = v(w);
  const Tensor& tb = v(b);
  int c = tx.dim(0), h = tx.dim(1), wd = tx.dim(2);
  int kh = tw.dim(1), kw = tw.dim(2);
  if (tw.dim(0) != c || tb.dim(0) != c) throw std::runtime_error("depthwise: shape mismatch");
  int oh = h + 2 * pad - kh + 1;
  int ow = wd + 2 * pad - kw + 1;
  Tensor out({c, oh, ow});
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        double acc = tb[ci];
        for (int a = 0; a < kh; ++a) {
          int ih = y + a - pad;
          if (ih < 0 || ih >= h) continue;
          for (int bb = 0; bb < kw; ++bb) {
            int iw = xx + bb - pad;
            if (iw < 0 || iw >= wd) continue;
            acc += tw[(static_cast<int64_t>(ci) * kh + a) * kw + bb] * tx[tx.at3(ci, ih, iw)];
          }
        }
        out[out.at3(ci, y, xx)] = acc;
      }
    }
  }
  Var r;
  r = make(std::move(out), [x, w, b, c, h, wd, kh, kw, oh, ow, pad,
                            r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& vw = t.v(w);
    Tensor& gx = t.g(x);
    Tensor& gw = t.g(w);
    Tensor& gb = t.g(b);
    for (int ci = 0; ci < c; ++ci) {
      for (int y = 0; y < oh; ++y) {
        for (int xx = 0; xx < ow; ++xx) {
          double gv = go[go.at3(ci, y, xx)];
          if (gv == 0.0) continue;
          gb[ci] += gv;
          for (int a = 0; a < kh; ++a) {
            int ih = y + a - pad;
            if (ih < 0 || ih >= h) continue;
            for (int bb = 0; bb < kw; ++bb) {
              int iw = xx + bb - pad;
              if (iw < 0 || iw >= wd) continue;
              int64_t wi = (static_cast<int64_t>(ci) * kh + a) * kw + bb;
              gw[wi] += gv * vx[vx.at3(ci, ih, iw)];
              gx[gx.at3(ci, ih, iw)] += gv * vw[wi];
            }
          }
        }
      }
    }
  });
  return r;
}

Var Tape::avg_pool2x2(Var x) {
  const Tensor& tx = v(x);
  int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
  if (h % 2 || w % 2) throw std::runtime_error("avg_pool2x2: odd input");
  int oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        double s = tx[tx.at3(ci, 2 * y, 2 * xx)] + tx[tx.at3(ci, 2 * y, 2 * xx + 1)] +
                   tx[tx.at3(ci, 2 * y + 1, 2 * xx)] + tx[tx.at3(ci, 2 * y + 1, 2 * xx + 1)];
        out[out.at3(ci, y, xx)] = 0.25 * s;
      }
  Var r;
  r = make(std::move(out), [x, c, oh, ow, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double gv = 0.25 * go[go.at3(ci, y, xx)];
          gx[gx.at3(ci, 2 * y, 2 * xx)] += gv;
          gx[gx.at3(ci, 2 * y, 2 * xx + 1)] += gv;
          gx[gx.at3(ci, 2 * y + 1, 2 * xx)] += gv;
          gx[gx.at3(ci, 2 * y + 1, 2 * xx + 1)] += gv;
        }
  });
  return r;
}

Var Tape::upsample_bilinear(Var x, int out_h, int out_w) {
  const Tensor& tx = v(x);
  int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
  // half-pixel-center convention; exact identity when sizes match
  auto src_coord = [](int dst, int in, int out) {
    double scale = static_cast<double>(in) / out;
    double s = (dst + 0.5) * scale - 0.5;
    return s;
  };
  struct Lerp {
    int i0, i1;
    double f;
  };
  std::vector<Lerp> ly(static_cast<size_t>(out_h)), lx(static_cast<size_t>(out_w));
  for (int y = 0; y < out_h; ++y) {
    double s = std::clamp(src_coord(y, h, out_h), 0.0, static_cast<double>(h - 1));
    int i0 = static_cast<int>(std::floor(s));
    int i1 = std::min(i0 + 1, h - 1);
    ly[static_cast<size_t>(y)] = {i0, i1, s - i0};
  }
  for (int xx = 0; xx < out_w; ++xx) {
    double s = std::clamp(src_coord(xx, w, out_w), 0.0, static_cast<double>(w - 1));
    int i0 = static_cast<int>(std::floor(s));
    int i1 = std::min(i0 + 1, w - 1);
    lx[static_cast<size_t>(xx)] = {i0, i1, s - i0};
  }
  Tensor out({c, out_h, out_w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < out_h; ++y) {
      const Lerp& a = ly[static_cast<size_t>(y)];
      for (int xx = 0; xx < out_w; ++xx) {
        const Lerp& b = lx[static_cast<size_t>(xx)];
        double v00 = tx[tx.at3(ci, a.i0, b.i0)], v01 = tx[tx.at3(ci, a.i0, b.i1)];
        double v10 = tx[tx.at3(ci, a.i1, b.i0)], v11 = tx[tx.at3(ci, a.i1, b.i1)];
        out[out.at3(ci, y, xx)] = (1 - a.f) * ((1 - b.f) * v00 + b.f * v01) +
                                  a.f * ((1 - b.f) * v10 + b.f * v11);
      }
    }
  Var r;
  r = make(std::move(out), [x, c, out_h, out_w, ly, lx,
                            r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < out_h; ++y) {
        const auto& a = ly[static_cast<size_t>(y)];
        for (int xx = 0; xx < out_w; ++xx) {
          const auto& b = lx[static_cast<size_t>(xx)];
          double gv = go[go.at3(ci, y, xx)];
          gx[gx.at3(ci, a.i0, b.i0)] += gv * (1 - a.f) * (1 - b.f);
          gx[gx.at3(ci, a.i0, b.i1)] += gv * (1 - a.f) * b.f;
          gx[gx.at3(ci, a.i1, b.i0)] += gv * a.f * (1 - b.f);
          gx[gx.at3(ci, a.i1, b.i1)] += gv * a.f * b.f;
        }
      }
  });
  return r;
}

Var Tape::deform_conv(Var x, Var offsets, Var w, Var b, Var mod, int ksize) {
  const Tensor& tx = v(x);
  const Tensor& toff = v(offsets);
  const Tensor& tw = v(w);
  const Tensor& tb = v(b);
  const Tensor& tm = v(mod);
  int cin = tx.dim(0), h = tx.dim(1), wd = tx.dim(2);
  int taps = ksize * ksize;
  if (toff.dim(0) != 2 * taps || toff.dim(1) != h || toff.dim(2) != wd)
    throw std::runtime_error("deform_conv: offset shape mismatch");
  if (tw.dim(0) < 1 || tw.dim(1) != cin || tw.dim(2) != taps)
    throw std::runtime_error("deform_conv: kernel shape mismatch");
  if (!toff.all_finite()) throw NumericError("deform_conv: non-finite offsets");
  bool per_loc = tm.ndim() == 3;
  int cout = tw.dim(0);
  int rad = (ksize - 1) / 2;

  // bilinear sample with zero padding outside the grid
  auto sample = [&](const Tensor& src, int ci, double sx, double sy) {
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    double fx = sx - x0, fy = sy - y0;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        int yy = y0 + dy, xx = x0 + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
        double wgt = (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
        acc += wgt * src[src.at3(ci, yy, xx)];
      }
    return acc;
  };

  Tensor out({cout, h, wd});
  for (int oh = 0; oh < h; ++oh) {
    for (int ow = 0; ow < wd; ++ow) {
      for (int k = 0; k < taps; ++k) {
        int ky = k / ksize, kx = k % ksize;
        double sx = ow + (kx - rad) + toff[toff.at3(2 * k, oh, ow)];
        double sy = oh + (ky - rad) + toff[toff.at3(2 * k + 1, oh, ow)];
        double m = per_loc ? tm[tm.at3(k, oh, ow)] : tm[k];
        for (int ci = 0; ci < cin; ++ci) {
          double s = sample(tx, ci, sx, sy);
          if (s == 0.0) continue;
          for (int co = 0; co < cout; ++co)
            out[out.at3(co, oh, ow)] += m * tw[(static_cast<int64_t>(co) * cin + ci) * taps + k] * s;
        }
      }
      for (int co = 0; co < cout; ++co) out[out.at3(co, oh, ow)] += tb[co];
    }
  }

  Var r;
  r = make(std::move(out), [x, offsets, w, b, mod, cin, h, wd, taps, ksize, rad, cout, per_loc,
                            r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& voff = t.v(offsets);
    const Tensor& vw = t.v(w);
    const Tensor& vm = t.v(mod);
    Tensor& gx = t.g(x);
    Tensor& goff = t.g(offsets);
    Tensor& gw = t.g(w);
    Tensor& gb = t.g(b);
    Tensor& gm = t.g(mod);
    for (int oh = 0; oh < h; ++oh) {
      for (int ow = 0; ow < wd; ++ow) {
        for (int co = 0; co < cout; ++co) gb[co] += go[go.at3(co, oh, ow)];
        for (int k = 0; k < taps; ++k) {
          int ky = k / ksize, kx = k % ksize;
          double sx = ow + (kx - rad) + voff[voff.at3(2 * k, oh, ow)];
          double sy = oh + (ky - rad) + voff[voff.at3(2 * k + 1, oh, ow)];
          double m = per_loc ? vm[vm.at3(k, oh, ow)] : vm[k];
          int x0 = static_cast<int>(std::floor(sx));
          int y0 = static_cast<int>(std::floor(sy));
          double fx = sx - x0, fy = sy - y0;
          double dmod_acc = 0.0;
          double dsx_acc = 0.0, dsy_acc = 0.0;
          for (int ci = 0; ci < cin; ++ci) {
            // T = dL/d(sampled value of channel ci at this tap)
            double tval = 0.0;
            for (int co = 0; co < cout; ++co)
              tval += go[go.at3(co, oh, ow)] * vw[(static_cast<int64_t>(co) * cin + ci) * taps + k];
            double corner[2][2] = {{0, 0}, {0, 0}};
            for (int dy = 0; dy <= 1; ++dy)
              for (int dx = 0; dx <= 1; ++dx) {
                int yy = y0 + dy, xx = x0 + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
                corner[dy][dx] = vx[vx.at3(ci, yy, xx)];
                double wgt = (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
                gx[gx.at3(ci, yy, xx)] += tval * m * wgt;
              }
            double sampled = (1 - fy) * ((1 - fx) * corner[0][0] + fx * corner[0][1]) +
                             fy * ((1 - fx) * corner[1][0] + fx * corner[1][1]);
            for (int co = 0; co < cout; ++co)
              gw[(static_cast<int64_t>(co) * cin + ci) * taps + k] +=
                  go[go.at3(co, oh, ow)] * m * sampled;
            dmod_acc += tval * sampled;
            dsx_acc += tval * m *
                       ((1 - fy) * (corner[0][1] - corner[0][0]) + fy * (corner[1][1] - corner[1][0]));
            dsy_acc += tval * m *
                       ((1 - fx) * (corner[1][0] - corner[0][0]) + fx * (corner[1][1] - corner[0][1]));
          }
          if (per_loc)
            gm[gm.at3(k, oh, ow)] += dmod_acc;
          else
            gm[k] += dmod_acc;
          goff[goff.at3(2 * k, oh, ow)] += dsx_acc;
          goff[goff.at3(2 * k + 1, oh, ow)] += dsy_acc;
        }
      }
    }
  });
  return r;
}

Var Tape::warp_nn(Var x, std::vector<int> map, int out_h, int out_w) {
  const Tensor& tx = v(x);
  int c = tx.dim(0);
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  if (static_cast<int64_t>(map.size()) != static_cast<int64_t>(out_h) * out_w)
    throw std::runtime_error("warp_nn: map size mismatch");
  Tensor out({c, out_h, out_w});
  int64_t oplane = static_cast<int64_t>(out_h) * out_w;
  for (int ci = 0; ci < c; ++ci)
    for (int64_t tcell = 0; tcell < oplane; ++tcell) {
      int src = map[static_cast<size_t>(tcell)];
      out[ci * oplane + tcell] = src < 0 ? 0.0 : tx[ci * plane + src];
    }
  Var r;
  r = make(std::move(out), [x, m = std::move(map), c, plane, oplane,
                            r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int ci = 0; ci < c; ++ci)
      for (int64_t tcell = 0; tcell < oplane; ++tcell) {
        int src = m[static_cast<size_t>(tcell)];
        if (src >= 0) gx[ci * plane + src] += go[ci * oplane + tcell];
      }
  });
  return r;
}

// --------------------------------------------------------- shape / reduction

Var Tape::concat_ch(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (ta.dim(1) != tb.dim(1) || ta.dim(2) != tb.dim(2))
    throw std::runtime_error("concat_ch: spatial mismatch");
  int ca = ta.dim(0), cb = tb.dim(0);
  int64_t plane = static_cast<int64_t>(ta.dim(1)) * ta.dim(2);
  Tensor out({ca + cb, ta.dim(1), ta.dim(2)});
  std::copy(ta.ptr(), ta.ptr() + ca * plane, out.ptr());
  std::copy(tb.ptr(), tb.ptr() + cb * plane, out.ptr() + ca * plane);
  Var r;
  r = make(std::move(out), [a, b, ca, cb, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& ga = t.g(a);
    Tensor& gb = t.g(b);
    for (int64_t i = 0; i < ca * plane; ++i) ga[i] += go[i];
    for (int64_t i = 0; i < cb * plane; ++i) gb[i] += go[ca * plane + i];
  });
  return r;
}

Var Tape::slice_ch(Var x, int c0, int c1) {
  const Tensor& tx = v(x);
  if (c0 < 0 || c1 > tx.dim(0) || c0 >= c1) throw std::runtime_error("slice_ch: bad range");
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out({c1 - c0, tx.dim(1), tx.dim(2)});
  std::copy(tx.ptr() + c0 * plane, tx.ptr() + c1 * plane, out.ptr());
  Var r;
  r = make(std::move(out), [x, c0, c1, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int64_t i = 0; i < (c1 - c0) * plane; ++i) gx[c0 * plane + i] += go[i];
  });
  return r;
}

Var Tape::gap(Var x) {
  const Tensor& tx = v(x);
  int c = tx.dim(0);
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out({c});
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += tx[ci * plane + i];
    out[ci] = acc / static_cast<double>(plane);
  }
  Var r;
  r = make(std::move(out), [x, c, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int ci = 0; ci < c; ++ci) {
      double gv = go[ci] / static_cast<double>(plane);
      for (int64_t i = 0; i < plane; ++i) gx[ci * plane + i] += gv;
    }
  });
  return r;
}

Var Tape::sum(Var x) {
  const Tensor& tx = v(x);
  double acc = 0.0;
  for (int64_t i = 0; i < tx.size(); ++i) acc += tx[i];
  Var r;
  r = make(Tensor::scalar(acc), [x, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    double gv = t.nodes_[static_cast<size_t>(r_id)].grad[0];
    Tensor& gx = t.g(x);
    for (int64_t i = 0; i < gx.size(); ++i) gx[i] += gv;
  });
  return r;
}

Var Tape::mean(Var x) {
  const Tensor& tx = v(x);
  int64_t n = tx.size();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += tx[i];
  Var r;
  r = make(Tensor::scalar(acc / static_cast<double>(n)),
           [x, n, r_id = static_cast<int>(nodes_.size())](Tape& t) {
             double gv = t.nodes_[static_cast<size_t>(r_id)].grad[0] / static_cast<double>(n);
             Tensor& gx = t.g(x);
             for (int64_t i = 0; i < n; ++i) gx[i] += gv;
           });
  return r;
}

Var Tape::mse(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (!ta.same_shape(tb)) throw std::runtime_error("mse: shape mismatch");
  int64_t n = ta.size();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double d = ta[i] - tb[i];
    acc += d * d;
  }
  Var r;
  r = make(Tensor::scalar(acc / static_cast<double>(n)),
           [a, b, n, r_id = static_cast<int>(nodes_.size())](Tape& t) {
             double gv = t.nodes_[static_cast<size_t>(r_id)].grad[0];
             const Tensor& va = t.v(a);
             const Tensor& vb = t.v(b);
             Tensor& ga = t.g(a);
             Tensor& gb = t.g(b);
             double c = 2.0 * gv / static_cast<double>(n);
             for (int64_t i = 0; i < n; ++i) {
               double d = va[i] - vb[i];
               ga[i] += c * d;
               gb[i] -= c * d;
             }
           });
  return r;
}

// ----------------------------------------------------- broadcast / attention

Var Tape::add_channel_bias(Var x, Var b) {
  const Tensor& tx = v(x);
  const Tensor& tb = v(b);
  int c = tx.dim(0);
  if (tb.dim(0) != c) throw std::runtime_error("add_channel_bias: mismatch");
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out(tx.shape());
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < plane; ++i) out[ci * plane + i] = tx[ci * plane + i] + tb[ci];
  Var r;
  r = make(std::move(out), [x, b, c, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    Tensor& gb = t.g(b);
    for (int ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) {
        gx[ci * plane + i] += go[ci * plane + i];
        acc += go[ci * plane + i];
      }
      gb[ci] += acc;
    }
  });
  return r;
}

Var Tape::broadcast_mul_map(Var x, Var m) {
  const Tensor& tx = v(x);
  const Tensor& tm = v(m);
  int c = tx.dim(0);
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  if (tm.size() != plane) throw std::runtime_error("broadcast_mul_map: mismatch");
  Tensor out(tx.shape());
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < plane; ++i) out[ci * plane + i] = tx[ci * plane + i] * tm[i];
  Var r;
  r = make(std::move(out), [x, m, c, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& vm = t.v(m);
    Tensor& gx = t.g(x);
    Tensor& gm = t.g(m);
    for (int ci = 0; ci < c; ++ci)
      for (int64_t i = 0; i < plane; ++i) {
        gx[ci * plane + i] += go[ci * plane + i] * vm[i];
        gm[i] += go[ci * plane + i] * vx[ci * plane + i];
      }
  });
  return r;
}

Var Tape::broadcast_mul_channel(Var x, Var s) {
  const Tensor& tx = v(x);
  const Tensor& ts = v(s);
  int c = tx.dim(0);
  if (ts.dim(0) != c) throw std::runtime_error("broadcast_mul_channel: mismatch");
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out(tx.shape());
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < plane; ++i) out[ci * plane + i] = tx[ci * plane + i] * ts[ci];
  Var r;
  r = make(std::move(out), [x, s, c, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& vx = t.v(x);
    const Tensor& vs = t.v(s);
    Tensor& gx = t.g(x);
    Tensor& gs = t.g(s);
    for (int ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) {
        gx[ci * plane + i] += go[ci * plane + i] * vs[ci];
        acc += go[ci * plane + i] * vx[ci * plane + i];
      }
      gs[ci] += acc;
    }
  });
  return r;
}

Var Tape::dot_per_pixel(Var a, Var b) {
  const Tensor& ta = v(a);
  const Tensor& tb = v(b);
  if (!ta.same_shape(tb)) throw std::runtime_error("dot_per_pixel: mismatch");
  int c = ta.dim(0);
  int64_t plane = static_cast<int64_t>(ta.dim(1)) * ta.dim(2);
  Tensor out({ta.dim(1), ta.dim(2)});
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < plane; ++i) out[i] += ta[ci * plane + i] * tb[ci * plane + i];
  Var r;
  r = make(std::move(out), [a, b, c, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    const Tensor& va = t.v(a);
    const Tensor& vb = t.v(b);
    Tensor& ga = t.g(a);
    Tensor& gb = t.g(b);
    for (int ci = 0; ci < c; ++ci)
      for (int64_t i = 0; i < plane; ++i) {
        ga[ci * plane + i] += go[i] * vb[ci * plane + i];
        gb[ci * plane + i] += go[i] * va[ci * plane + i];
      }
  });
  return r;
}

Var Tape::stack_maps(const std::vector<Var>& ms) {
  if (ms.empty()) throw std::runtime_error("stack_maps: empty");
  const Tensor& t0 = v(ms[0]);
  int h = t0.dim(0), w = t0.dim(1);
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out({static_cast<int>(ms.size()), h, w});
  for (size_t n = 0; n < ms.size(); ++n) {
    const Tensor& tn = v(ms[n]);
    if (tn.dim(0) != h || tn.dim(1) != w) throw std::runtime_error("stack_maps: mismatch");
    std::copy(tn.ptr(), tn.ptr() + plane, out.ptr() + static_cast<int64_t>(n) * plane);
  }
  Var r;
  r = make(std::move(out), [ms, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    for (size_t n = 0; n < ms.size(); ++n) {
      Tensor& gm = t.g(ms[n]);
      for (int64_t i = 0; i < plane; ++i) gm[i] += go[static_cast<int64_t>(n) * plane + i];
    }
  });
  return r;
}

Var Tape::slice_map(Var x, int n) {
  const Tensor& tx = v(x);
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out({tx.dim(1), tx.dim(2)});
  std::copy(tx.ptr() + n * plane, tx.ptr() + (n + 1) * plane, out.ptr());
  Var r;
  r = make(std::move(out), [x, n, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
    Tensor& gx = t.g(x);
    for (int64_t i = 0; i < plane; ++i) gx[n * plane + i] += go[i];
  });
  return r;
}

namespace {

// Softmax over `n` strided entries. Tolerates +/-inf: +inf entries share the
// mass, -inf entries get zero (gradient is zero at saturation).
void softmax_strided(const double* in, double* out, int n, int64_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, in[i * stride]);
  if (std::isinf(mx) && mx > 0) {
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (in[i * stride] == mx) ++cnt;
    for (int i = 0; i < n; ++i) out[i * stride] = in[i * stride] == mx ? 1.0 / cnt : 0.0;
    return;
  }
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = std::exp(in[i * stride] - mx);
    out[i * stride] = e;
    z += e;
  }
  for (int i = 0; i < n; ++i) out[i * stride] /= z;
}

void softmax_backward_strided(const double* y, const double* gy, double* gx, int n,
                              int64_t stride) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += gy[i * stride] * y[i * stride];
  for (int i = 0; i < n; ++i) gx[i * stride] += y[i * stride] * (gy[i * stride] - dot);
}

}  // namespace

Var Tape::softmax_vec(Var x) {
  const Tensor& tx = v(x);
  int n = tx.dim(0);
  Tensor out(tx.shape());
  softmax_strided(tx.ptr(), out.ptr(), n, 1);
  Var r;
  r = make(std::move(out), [x, n, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const auto& node = t.nodes_[static_cast<size_t>(r_id)];
    softmax_backward_strided(node.value.ptr(), node.grad.ptr(), t.g(x).ptr(), n, 1);
  });
  return r;
}

Var Tape::softmax_axis0(Var x) {
  const Tensor& tx = v(x);
  int a = tx.dim(0);
  int64_t plane = static_cast<int64_t>(tx.dim(1)) * tx.dim(2);
  Tensor out(tx.shape());
  for (int64_t i = 0; i < plane; ++i) softmax_strided(tx.ptr() + i, out.ptr() + i, a, plane);
  Var r;
  r = make(std::move(out), [x, a, plane, r_id = static_cast<int>(nodes_.size())](Tape& t) {
    const auto& node = t.nodes_[static_cast<size_t>(r_id)];
    for (int64_t i = 0; i < plane; ++i)
      softmax_backward_strided(node.value.ptr() + i, node.grad.ptr() + i, t.g(x).ptr() + i, a,
                               plane);
  });
  return r;
}

Var Tape::layer_norm_ch(Var x, Var gamma, Var beta, bool normalize) {
  const Tensor& tx = v(x);
  const Tensor& tg = v(gamma);
  const Tensor& tb = v(beta);
  int c = tx.dim(0);
  if (tg.dim(0) != c || tb.dim(0) != c) throw std::runtime_error("layer_norm_ch: mismatch");
  int64_t plane = tx.ndim() == 3 ? static_cast<int64_t>(tx.dim(1)) * tx.dim(2) : 1;
  constexpr double kEps = 1e-6;
  Tensor out(tx.shape());
  Tensor xhat;  // saved standardized values for the backward pass
  if (normalize) xhat = Tensor(tx.shape());
  std::vector<double> inv_std(normalize ? static_cast<size_t>(plane) : 0);
  if (!normalize) {
    for (int ci = 0; ci < c; ++ci)
      for (int64_t i = 0; i < plane; ++i)
        out[ci * plane + i] = tg[ci] * tx[ci * plane + i] + tb[ci];
  } else {
    for (int64_t i = 0; i < plane; ++i) {
      double mu = 0.0;
      for (int ci = 0; ci < c; ++ci) mu += tx[ci * plane + i];
      mu /= c;
      double var = 0.0;
      for (int ci = 0; ci < c; ++ci) {
        double d = tx[ci * plane + i] - mu;
        var += d * d;
      }
      var /= c;
      double is = 1.0 / std::sqrt(var + kEps);
      inv_std[static_cast<size_t>(i)] = is;
      for (int ci = 0; ci < c; ++ci) {
        double xh = (tx[ci * plane + i] - mu) * is;
        xhat[ci * plane + i] = xh;
        out[ci * plane + i] = tg[ci] * xh + tb[ci];
      }
    }
  }
  Var r;
  r = make(std::move(out),
           [x, gamma, beta, c, plane, normalize, xh = std::move(xhat), istd = std::move(inv_std),
            r_id = static_cast<int>(nodes_.size())](Tape& t) {
             const Tensor& go = t.nodes_[static_cast<size_t>(r_id)].grad;
             const Tensor& vx = t.v(x);
             const Tensor& vg = t.v(gamma);
             Tensor& gx = t.g(x);
             Tensor& gg = t.g(gamma);
             Tensor& gb = t.g(beta);
             if (!normalize) {
               for (int ci = 0; ci < c; ++ci) {
                 double ag = 0.0, ab = 0.0;
                 for (int64_t i = 0; i < plane; ++i) {
                   double gv = go[ci * plane + i];
                   gx[ci * plane + i] += gv * vg[ci];
                   ag += gv * vx[ci * plane + i];
                   ab += gv;
                 }
                 gg[ci] += ag;
                 gb[ci] += ab;
               }
               return;
             }
             for (int64_t i = 0; i < plane; ++i) {
               double is = istd[static_cast<size_t>(i)];
               double sum_gxh = 0.0, sum_gxh_xh = 0.0;
               for (int ci = 0; ci < c; ++ci) {
                 double gxh = go[ci * plane + i] * vg[ci];
                 sum_gxh += gxh;
                 sum_gxh_xh += gxh * xh[ci * plane + i];
                 gg[ci] += go[ci * plane + i] * xh[ci * plane + i];
                 gb[ci] += go[ci * plane + i];
               }
               for (int ci = 0; ci < c; ++ci) {
                 double gxh = go[ci * plane + i] * vg[ci];
                 gx[ci * plane + i] +=
                     is * (gxh - (sum_gxh + xh[ci * plane + i] * sum_gxh_xh) / c);
               }
             }
           });
  return r;
}

}  // namespace cobev
