#pragma once

#include <cstddef>
#include <string>

#include "omrn/tensor.hpp"

namespace omrn {

// One direction of a GRU:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   hcand = tanh(W_h x + r * (U_h h) + b_h)
//   h' = (1 - z) * h + z * hcand
// with a zero initial state.
template <typename T>
struct GruDirParams {
  Tensor<T> W_z, W_r, W_h;  // [hidden, input]
  Tensor<T> U_z, U_r, U_h;  // [hidden, hidden]
  Tensor<T> b_z, b_r, b_h;  // [hidden]

  void resize(std::size_t hidden, std::size_t input);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".W_z", W_z);
    f(prefix + ".W_r", W_r);
    f(prefix + ".W_h", W_h);
    f(prefix + ".U_z", U_z);
    f(prefix + ".U_r", U_r);
    f(prefix + ".U_h", U_h);
    f(prefix + ".b_z", b_z);
    f(prefix + ".b_r", b_r);
    f(prefix + ".b_h", b_h);
  }
};

template <typename T>
struct BiGruParams {
  GruDirParams<T> fw, bw;

  void resize(std::size_t hidden, std::size_t input) {
    fw.resize(hidden, input);
    bw.resize(hidden, input);
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    fw.visit(prefix + ".fw", f);
    bw.visit(prefix + ".bw", f);
  }
};

// Per-step activations needed for backpropagation through time.
template <typename T>
struct GruDirTrace {
  Tensor<T> z, r, hcand, uh, h;  // each [steps, hidden]; uh = U_h h_prev
};

template <typename T>
struct BiGruTrace {
  GruDirTrace<T> fw, bw;
  Tensor<T> out;  // [steps, 2*hidden]: forward state then backward state
};

// Runs both directions over x: [steps, input] and fills the trace; out[m] is
// the concatenation of the forward state after consuming word m and the
// backward state after consuming words m..steps-1.
template <typename T>
void bigru_forward(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                   const BiGruParams<T>& p, BiGruTrace<T>& trace);

// Backpropagates g_out: [steps, 2*hidden] through the trace, accumulating
// parameter gradients into `grads` and, when g_x is non-null, input gradients
// into g_x: [steps, input].
template <typename T>
void bigru_backward(const T* x, std::size_t steps, std::size_t input, std::size_t hidden,
                    const BiGruParams<T>& p, const BiGruTrace<T>& trace, const T* g_out,
                    BiGruParams<T>& grads, T* g_x);

}  // namespace omrn
