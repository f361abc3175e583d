#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "recnn/layers.hpp"

namespace recnn {

// Shapes: hidden state [h] or [h, N]; input features [d] or [d, N], one
// column per batch element. Weight tensors are [h, d] (input) and [h, h]
// (recurrent). Biases are empty tensors when a cell is built without them.

/// h_t = phi(U h_{t-1} + W f_t + b)
struct FCRNNCell {
  Tensor U;
  Tensor W;
  Tensor b;
  Activation phi = Activation::tanh;

  static FCRNNCell glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases,
                          Activation phi = Activation::tanh);

  std::size_t hidden() const { return U.dim(0); }
  std::size_t input() const { return W.dim(1); }
  bool has_bias() const { return !b.empty(); }
  std::vector<NamedTensor> parameters();

  Var step(Binding& bind, const Var& h_prev, const Var& f) const;
};

/// Peephole LSTM. The input and forget gates read c_{t-1}; the output gate
/// reads the freshly updated c_t. Peephole weights are diagonal (vectors).
///   c~_t = tanh(W_ci f + W_ch h_{t-1} + b_c)
///   i_t  = sigm(W_ii f + W_ih h_{t-1} + w_ic * c_{t-1} + b_i)
///   f_t  = sigm(W_fi f + W_fh h_{t-1} + w_fc * c_{t-1} + b_f)
///   c_t  = i_t * c~_t + f_t * c_{t-1}
///   o_t  = sigm(W_oi f + W_oh h_{t-1} + w_oc * c_t + b_o)
///   h_t  = o_t * tanh(c_t)
struct LSTMCell {
  Tensor W_oi, W_ci, W_ii, W_fi;
  Tensor W_oh, W_ch, W_ih, W_fh;
  Tensor w_oc, w_ic, w_fc;
  Tensor b_o, b_c, b_i, b_f;

  static LSTMCell glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases);

  std::size_t hidden() const { return W_oh.dim(0); }
  std::size_t input() const { return W_oi.dim(1); }
  bool has_bias() const { return !b_o.empty(); }
  std::vector<NamedTensor> parameters();

  struct State {
    Var h;
    Var c;
  };
  State step(Binding& bind, const Var& h_prev, const Var& c_prev, const Var& f) const;
};

/// GRU with the interpolation h_t = (1 - u_t) * h_{t-1} + u_t * h~_t, so the
/// update gate scales the candidate.
///   u_t  = sigm(W_ui f + W_uh h_{t-1} + b_u)
///   r_t  = sigm(W_ri f + W_rh h_{t-1} + b_r)
///   h~_t = tanh(U (r_t * h_{t-1}) + W f + b_h)
struct GRUCell {
  Tensor W_ui, W_ri, W;
  Tensor W_uh, W_rh, U;
  Tensor b_u, b_r, b_h;

  static GRUCell glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases);

  std::size_t hidden() const { return U.dim(0); }
  std::size_t input() const { return W.dim(1); }
  bool has_bias() const { return !b_u.empty(); }
  std::vector<NamedTensor> parameters();

  Var step(Binding& bind, const Var& h_prev, const Var& f) const;
};

enum class CellType { fc, lstm, gru };

CellType parse_cell_type(std::string_view name);
std::string_view to_string(CellType type);

using RecurrentCell = std::variant<FCRNNCell, LSTMCell, GRUCell>;

RecurrentCell make_cell(CellType type, Rng& rng, std::size_t input, std::size_t hidden,
                        bool biases, Activation fc_activation = Activation::tanh);

CellType cell_type(const RecurrentCell& cell);
std::size_t hidden_size(const RecurrentCell& cell);
std::size_t input_size(const RecurrentCell& cell);
std::vector<NamedTensor> parameters(RecurrentCell& cell);
std::size_t param_count(const RecurrentCell& cell);

/// Steps the cell over `features` from a zero state (and zero memory cell
/// for the LSTM); returns the final hidden state.
Var unroll(Binding& bind, const RecurrentCell& cell, std::span<const Var> features);

/// Bi-temporal runner: exactly two feature sets [f_T1, f_T2]; returns h_2.
Var run_sequence(Binding& bind, const RecurrentCell& cell, std::span<const Var> features);

}  // namespace recnn
