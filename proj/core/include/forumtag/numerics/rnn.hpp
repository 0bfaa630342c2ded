#pragma once

#include <vector>

#include "forumtag/numerics/ops.hpp"

// Fused recurrent cells. Each step is a single tape node, which keeps the
// tape short for long sequences.
namespace forumtag::num {

namespace detail {

template <typename T>
std::vector<T> joined(std::span<const T> a, std::span<const T> b) {
  std::vector<T> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

template <typename T>
void add_into(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace detail

// LSTM step. w: [4H x (in+H)] with gate blocks [i, f, g, o]; b: [4H];
// x: [in]; hc: [2H] holding h then c. Returns the next [h; c].
template <typename T>
Var<T> lstm_step(Var<T> w, Var<T> b, Var<T> x, Var<T> hc) {
  Tape<T>& tape = *w.tape;
  const Shape ws = w.shape();
  if (ws.size() != 2 || ws[0] % 4 != 0) throw ShapeError("lstm_step: bad weight " + shape_str(ws));
  const std::size_t h = ws[0] / 4, in = x.size();
  if (ws[1] != in + h || b.size() != 4 * h || hc.size() != 2 * h) {
    throw ShapeError("lstm_step: weight " + shape_str(ws) + " does not fit input " +
                     std::to_string(in) + " and hidden " + std::to_string(h));
  }
  auto hcv = tape.value(hc.id);
  std::vector<T> xh = detail::joined<T>(tape.value(x.id), hcv.subspan(0, h));
  std::vector<T> gates(b.value().begin(), b.value().end());
  kernel::gemv_acc<T>(tape.value(w.id), 4 * h, in + h, xh, gates);
  for (std::size_t j = 0; j < h; ++j) {
    gates[j] = kernel::sigmoid(gates[j]);
    gates[h + j] = kernel::sigmoid(gates[h + j]);
    gates[2 * h + j] = std::tanh(gates[2 * h + j]);
    gates[3 * h + j] = kernel::sigmoid(gates[3 * h + j]);
  }
  Var<T> out = tape.emplace(Shape{2 * h}, detail::any_grad({w, b, x, hc}));
  auto o = tape.value(out.id);
  std::vector<T> tc(h);
  for (std::size_t j = 0; j < h; ++j) {
    const T c = gates[h + j] * hcv[h + j] + gates[j] * gates[2 * h + j];
    tc[j] = std::tanh(c);
    o[h + j] = c;
    o[j] = gates[3 * h + j] * tc[j];
  }
  if (!tape.requires_grad(out.id)) return out;
  tape.on_backward(out, [&tape, w, b, x, hc, out, h, in, xh = std::move(xh),
                         gates = std::move(gates), tc = std::move(tc)] {
    auto g = tape.grad(out.id);
    auto cprev = tape.value(hc.id).subspan(h, h);
    std::vector<T> dz(4 * h), dc_prev(h);
    for (std::size_t j = 0; j < h; ++j) {
      const T i = gates[j], f = gates[h + j], gg = gates[2 * h + j], og = gates[3 * h + j];
      const T dh = g[j];
      const T dc = g[h + j] + dh * og * (T(1) - tc[j] * tc[j]);
      dz[j] = dc * gg * i * (T(1) - i);
      dz[h + j] = dc * cprev[j] * f * (T(1) - f);
      dz[2 * h + j] = dc * i * (T(1) - gg * gg);
      dz[3 * h + j] = dh * tc[j] * og * (T(1) - og);
      dc_prev[j] = dc * f;
    }
    if (tape.requires_grad(w.id)) kernel::outer_acc<T>(dz, xh, tape.grad(w.id));
    if (tape.requires_grad(b.id)) detail::add_into<T>(tape.grad(b.id), dz);
    if (tape.requires_grad(x.id) || tape.requires_grad(hc.id)) {
      std::vector<T> dxh(in + h, T(0));
      kernel::gemv_t_acc<T>(tape.value(w.id), 4 * h, in + h, dz, dxh);
      const std::span<const T> d(dxh);
      if (tape.requires_grad(x.id)) detail::add_into<T>(tape.grad(x.id), d.subspan(0, in));
      if (tape.requires_grad(hc.id)) {
        auto ghc = tape.grad(hc.id);
        detail::add_into<T>(ghc.subspan(0, h), d.subspan(in, h));
        detail::add_into<T>(ghc.subspan(h, h), std::span<const T>(dc_prev));
      }
    }
  });
  return out;
}

// GRU step:
//   z, r = sigmoid(wzr [x; h] + bzr)
//   n = tanh(wx x + uh (r * h) + bn)
//   h' = (1 - z) * h + z * n
// wzr: [2H x (in+H)], bzr: [2H], wx: [H x in], uh: [H x H], bn: [H].
template <typename T>
Var<T> gru_step(Var<T> wzr, Var<T> bzr, Var<T> wx, Var<T> uh, Var<T> bn, Var<T> x, Var<T> hprev) {
  Tape<T>& tape = *wzr.tape;
  const std::size_t h = hprev.size(), in = x.size();
  if (wzr.shape() != Shape{2 * h, in + h} || bzr.size() != 2 * h || wx.shape() != Shape{h, in} ||
      uh.shape() != Shape{h, h} || bn.size() != h) {
    throw ShapeError("gru_step: parameters do not fit input " + std::to_string(in) +
                     " and hidden " + std::to_string(h));
  }
  auto hv = tape.value(hprev.id);
  std::vector<T> xh = detail::joined<T>(tape.value(x.id), hv);
  std::vector<T> zr(bzr.value().begin(), bzr.value().end());
  kernel::gemv_acc<T>(tape.value(wzr.id), 2 * h, in + h, xh, zr);
  for (auto& v : zr) v = kernel::sigmoid(v);
  std::vector<T> rh(h);
  for (std::size_t j = 0; j < h; ++j) rh[j] = zr[h + j] * hv[j];
  std::vector<T> n(bn.value().begin(), bn.value().end());
  kernel::gemv_acc<T>(tape.value(wx.id), h, in, tape.value(x.id), n);
  kernel::gemv_acc<T>(tape.value(uh.id), h, h, rh, n);
  for (auto& v : n) v = std::tanh(v);
  Var<T> out = tape.emplace(Shape{h}, detail::any_grad({wzr, bzr, wx, uh, bn, x, hprev}));
  auto o = tape.value(out.id);
  for (std::size_t j = 0; j < h; ++j) o[j] = (T(1) - zr[j]) * hv[j] + zr[j] * n[j];
  if (!tape.requires_grad(out.id)) return out;
  tape.on_backward(out, [&tape, wzr, bzr, wx, uh, bn, x, hprev, out, h, in, xh = std::move(xh),
                         zr = std::move(zr), rh = std::move(rh), n = std::move(n)] {
    auto g = tape.grad(out.id);
    auto hv = tape.value(hprev.id);
    std::vector<T> da(h), dzr(2 * h), dh(h, T(0)), dx(in, T(0));
    for (std::size_t j = 0; j < h; ++j) {
      const T z = zr[j];
      dzr[j] = g[j] * (n[j] - hv[j]) * z * (T(1) - z);
      da[j] = g[j] * z * (T(1) - n[j] * n[j]);
      dh[j] = g[j] * (T(1) - z);
    }
    if (tape.requires_grad(wx.id)) kernel::outer_acc<T>(da, tape.value(x.id), tape.grad(wx.id));
    if (tape.requires_grad(bn.id)) detail::add_into<T>(tape.grad(bn.id), da);
    if (tape.requires_grad(uh.id)) kernel::outer_acc<T>(da, rh, tape.grad(uh.id));
    kernel::gemv_t_acc<T>(tape.value(wx.id), h, in, da, dx);
    std::vector<T> drh(h, T(0));
    kernel::gemv_t_acc<T>(tape.value(uh.id), h, h, da, drh);
    for (std::size_t j = 0; j < h; ++j) {
      const T r = zr[h + j];
      dzr[h + j] = drh[j] * hv[j] * r * (T(1) - r);
      dh[j] += drh[j] * r;
    }
    if (tape.requires_grad(wzr.id)) kernel::outer_acc<T>(dzr, xh, tape.grad(wzr.id));
    if (tape.requires_grad(bzr.id)) detail::add_into<T>(tape.grad(bzr.id), dzr);
    std::vector<T> dxh(in + h, T(0));
    kernel::gemv_t_acc<T>(tape.value(wzr.id), 2 * h, in + h, dzr, dxh);
    for (std::size_t j = 0; j < in; ++j) dx[j] += dxh[j];
    for (std::size_t j = 0; j < h; ++j) dh[j] += dxh[in + j];
    if (tape.requires_grad(x.id)) detail::add_into<T>(tape.grad(x.id), std::span<const T>(dx));
    if (tape.requires_grad(hprev.id)) {
      detail::add_into<T>(tape.grad(hprev.id), std::span<const T>(dh));
    }
  });
  return out;
}

}  // namespace forumtag::num
