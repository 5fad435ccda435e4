#include "omrn/gru.hpp"

#include <vector>

#include "omrn/vecops.hpp"

namespace omrn {

template <typename T>
void GruDirParams<T>::resize(std::size_t hidden, std::size_t input) {
  W_z.resize({hidden, input});
  W_r.resize({hidden, input});
  W_h.resize({hidden, input});
  U_z.resize({hidden, hidden});
  U_r.resize({hidden, hidden});
  U_h.resize({hidden, hidden});
  b_z.resize({hidden});
  b_r.resize({hidden});
  b_h.resize({hidden});
}

namespace {

// One direction over the index order given by `order` (forward: 0..steps-1,
// backward: steps-1..0).  States land in trace rows indexed by the original
// step, so out[m] always refers to word m.
template <typename T>
void run_direction(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                   const GruDirParams<T>& p, const std::vector<std::size_t>& order,
                   GruDirTrace<T>& tr) {
  tr.z.resize({steps, hidden});
  tr.r.resize({steps, hidden});
  tr.hcand.resize({steps, hidden});
  tr.uh.resize({steps, hidden});
  tr.h.resize({steps, hidden});
  std::vector<T> h(hidden, T(0)), tmp(hidden);
  for (std::size_t m : order) {
    const T* xm = x + m * input;
    T* z = tr.z.data() + m * hidden;
    T* r = tr.r.data() + m * hidden;
    T* hc = tr.hcand.data() + m * hidden;
    T* uh = tr.uh.data() + m * hidden;
    matvec(z, p.W_z.data(), xm, hidden, input);
    matvec_acc(z, p.U_z.data(), h.data(), hidden, hidden);
    matvec(r, p.W_r.data(), xm, hidden, input);
    matvec_acc(r, p.U_r.data(), h.data(), hidden, hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      z[i] = sigmoid(z[i] + p.b_z[i]);
      r[i] = sigmoid(r[i] + p.b_r[i]);
    }
    matvec(uh, p.U_h.data(), h.data(), hidden, hidden);
    matvec(tmp.data(), p.W_h.data(), xm, hidden, input);
    for (std::size_t i = 0; i < hidden; ++i) {
      hc[i] = std::tanh(tmp[i] + r[i] * uh[i] + p.b_h[i]);
      h[i] = (T(1) - z[i]) * h[i] + z[i] * hc[i];
    }
    for (std::size_t i = 0; i < hidden; ++i) tr.h.data()[m * hidden + i] = h[i];
  }
}

// Reverse sweep of one direction.  g_state carries dL/dh across steps; the
// previous state of step `order[j]` is the state stored at `order[j-1]`.
template <typename T>
void back_direction(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                    const GruDirParams<T>& p, const std::vector<std::size_t>& order,
                    const GruDirTrace<T>& tr, const T* g_out, std::size_t g_stride,
                    std::size_t g_offset, GruDirParams<T>& g, T* g_x) {
  std::vector<T> g_state(hidden, T(0));
  std::vector<T> g_prev(hidden), g_pz(hidden), g_pr(hidden), g_ph(hidden), g_uh(hidden);
  std::vector<T> hprev(hidden);
  for (std::size_t j = order.size(); j-- > 0;) {
    const std::size_t m = order[j];
    const T* xm = x + m * input;
    const T* z = tr.z.data() + m * hidden;
    const T* r = tr.r.data() + m * hidden;
    const T* hc = tr.hcand.data() + m * hidden;
    const T* uh = tr.uh.data() + m * hidden;
    if (j > 0) {
      const T* hp = tr.h.data() + order[j - 1] * hidden;
      for (std::size_t i = 0; i < hidden; ++i) hprev[i] = hp[i];
    } else {
      for (std::size_t i = 0; i < hidden; ++i) hprev[i] = T(0);
    }
    for (std::size_t i = 0; i < hidden; ++i) g_state[i] += g_out[m * g_stride + g_offset + i];

    for (std::size_t i = 0; i < hidden; ++i) {
      const T gh = g_state[i];
      const T g_z = gh * (hc[i] - hprev[i]);
      const T g_hc = gh * z[i];
      g_prev[i] = gh * (T(1) - z[i]);
      g_ph[i] = g_hc * (T(1) - hc[i] * hc[i]);
      g_pz[i] = g_z * z[i] * (T(1) - z[i]);
      const T g_r = g_ph[i] * uh[i];
      g_uh[i] = g_ph[i] * r[i];
      g_pr[i] = g_r * r[i] * (T(1) - r[i]);
    }
    outer_acc(g.W_h.data(), g_ph.data(), xm, hidden, input);
    outer_acc(g.U_h.data(), g_uh.data(), hprev.data(), hidden, hidden);
    outer_acc(g.W_z.data(), g_pz.data(), xm, hidden, input);
    outer_acc(g.U_z.data(), g_pz.data(), hprev.data(), hidden, hidden);
    outer_acc(g.W_r.data(), g_pr.data(), xm, hidden, input);
    outer_acc(g.U_r.data(), g_pr.data(), hprev.data(), hidden, hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      g.b_h[i] += g_ph[i];
      g.b_z[i] += g_pz[i];
      g.b_r[i] += g_pr[i];
    }
    if (g_x) {
      T* gx = g_x + m * input;
      matvec_t_acc(gx, p.W_h.data(), g_ph.data(), hidden, input);
      matvec_t_acc(gx, p.W_z.data(), g_pz.data(), hidden, input);
      matvec_t_acc(gx, p.W_r.data(), g_pr.data(), hidden, input);
    }
    for (std::size_t i = 0; i < hidden; ++i) g_state[i] = g_prev[i];
    matvec_t_acc(g_state.data(), p.U_h.data(), g_uh.data(), hidden, hidden);
    matvec_t_acc(g_state.data(), p.U_z.data(), g_pz.data(), hidden, hidden);
    matvec_t_acc(g_state.data(), p.U_r.data(), g_pr.data(), hidden, hidden);
  }
}

std::vector<std::size_t> iota_order(std::size_t steps, bool reversed) {
  std::vector<std::size_t> order(steps);
  for (std::size_t i = 0; i < steps; ++i) order[i] = reversed ? steps - 1 - i : i;
  return order;
}

}  // namespace

template <typename T>
void bigru_forward(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                   const BiGruParams<T>& p, BiGruTrace<T>& trace) {
  run_direction(x, steps, input, hidden, p.fw, iota_order(steps, false), trace.fw);
  run_direction(x, steps, input, hidden, p.bw, iota_order(steps, true), trace.bw);
  trace.out.resize({steps, 2 * hidden});
  for (std::size_t m = 0; m < steps; ++m) {
    T* o = trace.out.data() + m * 2 * hidden;
    const T* hf = trace.fw.h.data() + m * hidden;
    const T* hb = trace.bw.h.data() + m * hidden;
    for (std::size_t i = 0; i < hidden; ++i) o[i] = hf[i];
    for (std::size_t i = 0; i < hidden; ++i) o[hidden + i] = hb[i];
  }
}

template <typename T>
void bigru_backward(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                    const BiGruParams<T>& p, const BiGruTrace<T>& trace, const T* g_out,
                    BiGruParams<T>& grads, T* g_x) {
  back_direction(x, steps, input, hidden, p.fw, iota_order(steps, false), trace.fw, g_out,
                 2 * hidden, 0, grads.fw, g_x);
  back_direction(x, steps, input, hidden, p.bw, iota_order(steps, true), trace.bw, g_out,
                 2 * hidden, hidden, grads.bw, g_x);
}

template struct GruDirParams<float>;
template struct GruDirParams<double>;
template void bigru_forward<float>(const float*, std::size_t, std::size_t, std::size_t,
                                   const BiGruParams<float>&, BiGruTrace<float>&);
template void bigru_forward<double>(const double*, std::size_t, std::size_t, std::size_t,
                                    const BiGruParams<double>&, BiGruTrace<double>&);
template void bigru_backward<float>(const float*, std::size_t, std::size_t, std::size_t,
                                    const BiGruParams<float>&, const BiGruTrace<float>&,
                                    const float*, BiGruParams<float>&, float*);
template void bigru_backward<double>(const double*, std::size_t, std::size_t, std::size_t,
                                     const BiGruParams<double>&, const BiGruTrace<double>&,
                                     const double*, BiGruParams<double>&, double*);

}  // namespace omrn
