#include "recnn/recurrent.hpp"

#include <string>

#include "recnn/error.hpp"
#include "recnn/ops.hpp"
#include "recnn/optim.hpp"

namespace recnn {

namespace {

struct Columns {
  Var var;
  bool was_vector;
};

Columns as_columns(const Var& v) {
  const Shape& s = v.shape();
  if (s.size() == 1) return {reshape(v, {s[0], 1}), true};
  if (s.size() == 2) return {v, false};
  throw DimensionError("recurrent cell expects a vector or matrix, got " + to_string(s));
}

Var restore(const Var& v, bool was_vector) {
  return was_vector ? reshape(v, {v.shape()[0]}) : v;
}

void check_dims(const char* cell, const Var& h, const Var& f, std::size_t hidden,
                std::size_t input) {
  const Shape& hs = h.shape();
  const Shape& fs = f.shape();
  if (fs[0] != input) {
    throw DimensionError(std::string(cell) + ": input feature size " + std::to_string(fs[0]) +
                         " does not match cell input size " + std::to_string(input));
  }
  if (hs[0] != hidden) {
    throw DimensionError(std::string(cell) + ": state size " + std::to_string(hs[0]) +
                         " does not match hidden size " + std::to_string(hidden));
  }
  if (hs[1] != fs[1]) {
    throw DimensionError(std::string(cell) + ": batch mismatch between state " + to_string(hs) +
                         " and input " + to_string(fs));
  }
}

// W_in f + W_h h (+ b)
Var affine(Binding& bind, const Tensor& w_in, const Var& f, const Tensor& w_h, const Var& h,
           const Tensor& b) {
  Var z = add(matmul(bind(w_in), f), matmul(bind(w_h), h));
  if (!b.empty()) z = add(z, replicate_cols(bind(b), f.shape()[1]));
  return z;
}

Var peephole(Binding& bind, const Tensor& w, const Var& c) {
  return mul(replicate_cols(bind(w), c.shape()[1]), c);
}

Tensor maybe_bias(bool biases, std::size_t hidden) {
  return biases ? Tensor({hidden}, 0.0) : Tensor();
}

void push(std::vector<NamedTensor>& out, const char* name, Tensor& t) {
  if (!t.empty()) out.push_back({name, &t});
}

}  // namespace

FCRNNCell FCRNNCell::glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases,
                            Activation phi) {
  if (phi != Activation::tanh && phi != Activation::sigmoid) {
    throw ValidationError("FC-RNN activation must be tanh or sigmoid");
  }
  FCRNNCell cell;
  cell.U = glorot_uniform(rng, hidden, hidden, {hidden, hidden});
  cell.W = glorot_uniform(rng, input, hidden, {hidden, input});
  cell.b = maybe_bias(biases, hidden);
  cell.phi = phi;
  return cell;
}

std::vector<NamedTensor> FCRNNCell::parameters() {
  std::vector<NamedTensor> out;
  push(out, "U", U);
  push(out, "W", W);
  push(out, "b", b);
  return out;
}

Var FCRNNCell::step(Binding& bind, const Var& h_prev, const Var& f) const {
  auto [h, hv] = as_columns(h_prev);
  auto [x, xv] = as_columns(f);
  check_dims("fc-rnn", h, x, hidden(), input());
  Var z = affine(bind, W, x, U, h, b);
  return restore(apply_activation(z, phi), xv && hv);
}

LSTMCell LSTMCell::glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases) {
  LSTMCell cell;
  for (Tensor* w : {&cell.W_oi, &cell.W_ci, &cell.W_ii, &cell.W_fi})
    *w = glorot_uniform(rng, input, hidden, {hidden, input});
  for (Tensor* w : {&cell.W_oh, &cell.W_ch, &cell.W_ih, &cell.W_fh})
    *w = glorot_uniform(rng, hidden, hidden, {hidden, hidden});
  // Diagonal peepholes drawn as the diagonal of an h x h matrix.
  for (Tensor* w : {&cell.w_oc, &cell.w_ic, &cell.w_fc})
    *w = glorot_uniform(rng, hidden, hidden, {hidden});
  for (Tensor* b : {&cell.b_o, &cell.b_c, &cell.b_i, &cell.b_f}) *b = maybe_bias(biases, hidden);
  return cell;
}

std::vector<NamedTensor> LSTMCell::parameters() {
  std::vector<NamedTensor> out;
  push(out, "W_oi", W_oi);
  push(out, "W_ci", W_ci);
  push(out, "W_ii", W_ii);
  push(out, "W_fi", W_fi);
  push(out, "W_oh", W_oh);
  push(out, "W_ch", W_ch);
  push(out, "W_ih", W_ih);
  push(out, "W_fh", W_fh);
  push(out, "w_oc", w_oc);
  push(out, "w_ic", w_ic);
  push(out, "w_fc", w_fc);
  push(out, "b_o", b_o);
  push(out, "b_c", b_c);
  push(out, "b_i", b_i);
  push(out, "b_f", b_f);
  return out;
}

LSTMCell::State LSTMCell::step(Binding& bind, const Var& h_prev, const Var& c_prev,
                               const Var& f) const {
  auto [h, hv] = as_columns(h_prev);
  auto [c, cv] = as_columns(c_prev);
  auto [x, xv] = as_columns(f);
  check_dims("lstm", h, x, hidden(), input());
  if (c.shape() != h.shape()) {
    throw DimensionError("lstm: memory cell " + to_string(c.shape()) +
                         " does not match hidden state " + to_string(h.shape()));
  }
  const Var candidate = tanh(affine(bind, W_ci, x, W_ch, h, b_c));
  const Var in_gate = sigmoid(add(affine(bind, W_ii, x, W_ih, h, b_i), peephole(bind, w_ic, c)));
  const Var forget = sigmoid(add(affine(bind, W_fi, x, W_fh, h, b_f), peephole(bind, w_fc, c)));
  const Var c_new = add(mul(in_gate, candidate), mul(forget, c));
  const Var out_gate =
      sigmoid(add(affine(bind, W_oi, x, W_oh, h, b_o), peephole(bind, w_oc, c_new)));
  const Var h_new = mul(out_gate, tanh(c_new));
  const bool vec = hv && cv && xv;
  return {restore(h_new, vec), restore(c_new, vec)};
}

GRUCell GRUCell::glorot(Rng& rng, std::size_t input, std::size_t hidden, bool biases) {
  GRUCell cell;
  for (Tensor* w : {&cell.W_ui, &cell.W_ri, &cell.W})
    *w = glorot_uniform(rng, input, hidden, {hidden, input});
  for (Tensor* w : {&cell.W_uh, &cell.W_rh, &cell.U})
    *w = glorot_uniform(rng, hidden, hidden, {hidden, hidden});
  for (Tensor* b : {&cell.b_u, &cell.b_r, &cell.b_h}) *b = maybe_bias(biases, hidden);
  return cell;
}

std::vector<NamedTensor> GRUCell::parameters() {
  std::vector<NamedTensor> out;
  push(out, "W_ui", W_ui);
  push(out, "W_ri", W_ri);
  push(out, "W", W);
  push(out, "W_uh", W_uh);
  push(out, "W_rh", W_rh);
  push(out, "U", U);
  push(out, "b_u", b_u);
  push(out, "b_r", b_r);
  push(out, "b_h", b_h);
  return out;
}

Var GRUCell::step(Binding& bind, const Var& h_prev, const Var& f) const {
  auto [h, hv] = as_columns(h_prev);
  auto [x, xv] = as_columns(f);
  check_dims("gru", h, x, hidden(), input());
  const Var update = sigmoid(affine(bind, W_ui, x, W_uh, h, b_u));
  const Var reset = sigmoid(affine(bind, W_ri, x, W_rh, h, b_r));
  Var z = add(matmul(bind(U), mul(reset, h)), matmul(bind(W), x));
  if (!b_h.empty()) z = add(z, replicate_cols(bind(b_h), x.shape()[1]));
  const Var candidate = tanh(z);
  const Var h_new = add(mul(one_minus(update), h), mul(update, candidate));
  return restore(h_new, hv && xv);
}

CellType parse_cell_type(std::string_view name) {
  if (name == "fc" || name == "fcrnn" || name == "rnn") return CellType::fc;
  if (name == "lstm") return CellType::lstm;
  if (name == "gru") return CellType::gru;
  throw ValidationError("unknown recurrent cell '" + std::string(name) + "' (fc|lstm|gru)");
}

std::string_view to_string(CellType type) {
  switch (type) {
    case CellType::fc: return "fc";
    case CellType::lstm: return "lstm";
    case CellType::gru: return "gru";
  }
  return "fc";
}

RecurrentCell make_cell(CellType type, Rng& rng, std::size_t input, std::size_t hidden,
                        bool biases, Activation fc_activation) {
  if (input == 0 || hidden == 0) throw ValidationError("cell sizes must be >= 1");
  switch (type) {
    case CellType::fc: return FCRNNCell::glorot(rng, input, hidden, biases, fc_activation);
    case CellType::lstm: return LSTMCell::glorot(rng, input, hidden, biases);
    case CellType::gru: return GRUCell::glorot(rng, input, hidden, biases);
  }
  throw ValidationError("unknown cell type");
}

CellType cell_type(const RecurrentCell& cell) {
  return static_cast<CellType>(cell.index());
}

std::size_t hidden_size(const RecurrentCell& cell) {
  return std::visit([](const auto& c) { return c.hidden(); }, cell);
}

std::size_t input_size(const RecurrentCell& cell) {
  return std::visit([](const auto& c) { return c.input(); }, cell);
}

std::vector<NamedTensor> parameters(RecurrentCell& cell) {
  return std::visit([](auto& c) { return c.parameters(); }, cell);
}

std::size_t param_count(const RecurrentCell& cell) {
  auto copy = cell;
  std::size_t n = 0;
  for (const auto& p : parameters(copy)) n += p.tensor->size();
  return n;
}

Var unroll(Binding& bind, const RecurrentCell& cell, std::span<const Var> features) {
  if (features.empty()) throw ValidationError("recurrent sequence must not be empty");
  Tape& tape = bind.tape();
  const std::size_t h = hidden_size(cell);
  const Shape& fs = features.front().shape();
  const Shape state_shape = fs.size() == 1 ? Shape{h} : Shape{h, fs.size() > 1 ? fs[1] : 1};
  Var state = tape.constant(Tensor(state_shape, 0.0));
  Var memory = tape.constant(Tensor(state_shape, 0.0));
  for (const auto& f : features) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, LSTMCell>) {
            auto next = c.step(bind, state, memory, f);
            state = next.h;
            memory = next.c;
          } else {
            state = c.step(bind, state, f);
          }
        },
        cell);
  }
  return state;
}

Var run_sequence(Binding& bind, const RecurrentCell& cell, std::span<const Var> features) {
  if (features.size() != 2) {
    throw ValidationError("bi-temporal sequence must have exactly 2 steps, got " +
                          std::to_string(features.size()));
  }
  return unroll(bind, cell, features);
}

}  // namespace recnn
