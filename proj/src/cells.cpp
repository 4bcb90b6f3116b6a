#include "mmseq/cells.hpp"

#include <cmath>
#include <string>

#include "mmseq/error.hpp"
#include "mmseq/kernels.hpp"

namespace mmseq {

namespace {

void check_len(const Vec& v, std::size_t want, const char* what, const char* op) {
  if (v.size() != want) {
    throw ShapeError(std::string(op) + ": " + what + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(want));
  }
}

void check_tape_len(const Vec& v, std::size_t want, const char* what, const char* op) {
  if (v.size() != want) {
    throw ConfigError(std::string(op) + ": tape field " + what + " has length " +
                      std::to_string(v.size()) + ", parameters expect " + std::to_string(want));
  }
}

}  // namespace

LstmParams add_lstm_params(ParameterStore& store, const std::string& prefix,
                           std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const std::size_t h = hidden_dim;
  p.w_xi = store.add(prefix + ".w_xi", h, input_dim);
  p.w_hi = store.add(prefix + ".w_hi", h, h);
  p.w_ci = store.add(prefix + ".w_ci", h, h);
  p.b_i = store.add(prefix + ".b_i", h, 1);
  p.w_xf = store.add(prefix + ".w_xf", h, input_dim);
  p.w_hf = store.add(prefix + ".w_hf", h, h);
  p.w_cf = store.add(prefix + ".w_cf", h, h);
  p.b_f = store.add(prefix + ".b_f", h, 1);
  p.w_xc = store.add(prefix + ".w_xc", h, input_dim);
  p.w_hc = store.add(prefix + ".w_hc", h, h);
  p.b_c = store.add(prefix + ".b_c", h, 1);
  p.w_xo = store.add(prefix + ".w_xo", h, input_dim);
  p.w_ho = store.add(prefix + ".w_ho", h, h);
  p.w_co = store.add(prefix + ".w_co", h, h);
  p.b_o = store.add(prefix + ".b_o", h, 1);
  return p;
}

GruParams add_gru_params(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim, bool with_readout) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const std::size_t joint = hidden_dim + input_dim;
  p.w_reset = store.add(prefix + ".w_reset", hidden_dim, joint);
  p.w_update = store.add(prefix + ".w_update", hidden_dim, joint);
  p.w_cand = store.add(prefix + ".w_cand", hidden_dim, joint);
  if (with_readout) {
    p.w_readout = store.add(prefix + ".w_readout", hidden_dim, hidden_dim);
    p.has_readout = true;
  }
  return p;
}

void init_lstm_params(ParameterStore& store, const LstmParams& p, const InitScheme& scheme,
                      SeedStream& seeds) {
  for (ParamId id : {p.w_xi, p.w_hi, p.w_ci, p.w_xf, p.w_hf, p.w_cf, p.w_xc, p.w_hc, p.w_xo,
                     p.w_ho, p.w_co}) {
    Matrix& m = store.value(id);
    m = init_matrix(m.rows, m.cols, scheme, seeds.next());
  }
}

void init_gru_params(ParameterStore& store, const GruParams& p, const InitScheme& scheme,
                     SeedStream& seeds) {
  Matrix& r = store.value(p.w_reset);
  r = init_matrix(r.rows, r.cols, scheme, seeds.next());
  Matrix& z = store.value(p.w_update);
  z = init_matrix(z.rows, z.cols, scheme, seeds.next());
  Matrix& c = store.value(p.w_cand);
  c = init_matrix(c.rows, c.cols, scheme, seeds.next());
  if (p.has_readout) {
    Matrix& o = store.value(p.w_readout);
    o = init_matrix(o.rows, o.cols, scheme, seeds.next());
  }
}

LstmStepResult lstm_step(const ParameterStore& store, const LstmParams& p, const Vec& x,
                         const Vec& h_prev, const Vec& c_prev, LstmStepTape* tape) {
  check_len(x, p.input_dim, "x", "lstm_step");
  check_len(h_prev, p.hidden_dim, "h_prev", "lstm_step");
  check_len(c_prev, p.hidden_dim, "c_prev", "lstm_step");
  const std::size_t h = p.hidden_dim;

  Vec a_i = store.value(p.b_i).data;
  kernels::matvec_acc(store.value(p.w_xi), x.data(), a_i.data());
  kernels::matvec_acc(store.value(p.w_hi), h_prev.data(), a_i.data());
  kernels::matvec_acc(store.value(p.w_ci), c_prev.data(), a_i.data());

  Vec a_f = store.value(p.b_f).data;
  kernels::matvec_acc(store.value(p.w_xf), x.data(), a_f.data());
  kernels::matvec_acc(store.value(p.w_hf), h_prev.data(), a_f.data());
  kernels::matvec_acc(store.value(p.w_cf), c_prev.data(), a_f.data());

  Vec a_c = store.value(p.b_c).data;
  kernels::matvec_acc(store.value(p.w_xc), x.data(), a_c.data());
  kernels::matvec_acc(store.value(p.w_hc), h_prev.data(), a_c.data());

  Vec gate_i(h), gate_f(h), cand(h), c(h);
  for (std::size_t j = 0; j < h; ++j) {
    gate_i[j] = sigmoid(a_i[j]);
    gate_f[j] = sigmoid(a_f[j]);
    cand[j] = std::tanh(a_c[j]);
    c[j] = gate_f[j] * c_prev[j] + gate_i[j] * cand[j];
  }

  // the output gate reads the fresh cell state
  Vec a_o = store.value(p.b_o).data;
  kernels::matvec_acc(store.value(p.w_xo), x.data(), a_o.data());
  kernels::matvec_acc(store.value(p.w_ho), h_prev.data(), a_o.data());
  kernels::matvec_acc(store.value(p.w_co), c.data(), a_o.data());

  Vec gate_o(h), tanh_c(h);
  LstmStepResult out;
  out.h.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    gate_o[j] = sigmoid(a_o[j]);
    tanh_c[j] = std::tanh(c[j]);
    out.h[j] = gate_o[j] * tanh_c[j];
  }
  out.c = c;

  if (tape) {
    tape->x = x;
    tape->h_prev = h_prev;
    tape->c_prev = c_prev;
    tape->gate_i = std::move(gate_i);
    tape->gate_f = std::move(gate_f);
    tape->cand = std::move(cand);
    tape->gate_o = std::move(gate_o);
    tape->c = c;
    tape->tanh_c = std::move(tanh_c);
  }
  return out;
}

LstmStepGrad lstm_backward(const ParameterStore& store, const LstmParams& p,
                           const LstmStepTape& tape, const Vec& dh, const Vec& dc_in,
                           Gradients& grads) {
  check_tape_len(tape.x, p.input_dim, "x", "lstm_backward");
  check_tape_len(tape.h_prev, p.hidden_dim, "h_prev", "lstm_backward");
  check_len(dh, p.hidden_dim, "dh", "lstm_backward");
  check_len(dc_in, p.hidden_dim, "dc", "lstm_backward");
  const std::size_t h = p.hidden_dim;

  // output gate first: its pre-activation consumed c_t
  Vec da_o(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double d_gate = dh[j] * tape.tanh_c[j];
    da_o[j] = d_gate * tape.gate_o[j] * (1.0 - tape.gate_o[j]);
  }

  Vec dc(h);
  for (std::size_t j = 0; j < h; ++j) {
    dc[j] = dh[j] * tape.gate_o[j] * (1.0 - tape.tanh_c[j] * tape.tanh_c[j]) + dc_in[j];
  }
  kernels::matvec_t_acc(store.value(p.w_co), da_o.data(), dc.data());

  Vec da_i(h), da_f(h), da_c(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double di = dc[j] * tape.cand[j];
    const double df = dc[j] * tape.c_prev[j];
    const double dg = dc[j] * tape.gate_i[j];
    da_i[j] = di * tape.gate_i[j] * (1.0 - tape.gate_i[j]);
    da_f[j] = df * tape.gate_f[j] * (1.0 - tape.gate_f[j]);
    da_c[j] = dg * (1.0 - tape.cand[j] * tape.cand[j]);
  }

  LstmStepGrad out;
  out.dx.assign(p.input_dim, 0.0);
  out.dh_prev.assign(h, 0.0);
  out.dc_prev.assign(h, 0.0);

  kernels::matvec_t_acc(store.value(p.w_xi), da_i.data(), out.dx.data());
  kernels::matvec_t_acc(store.value(p.w_xf), da_f.data(), out.dx.data());
  kernels::matvec_t_acc(store.value(p.w_xc), da_c.data(), out.dx.data());
  kernels::matvec_t_acc(store.value(p.w_xo), da_o.data(), out.dx.data());

  kernels::matvec_t_acc(store.value(p.w_hi), da_i.data(), out.dh_prev.data());
  kernels::matvec_t_acc(store.value(p.w_hf), da_f.data(), out.dh_prev.data());
  kernels::matvec_t_acc(store.value(p.w_hc), da_c.data(), out.dh_prev.data());
  kernels::matvec_t_acc(store.value(p.w_ho), da_o.data(), out.dh_prev.data());

  for (std::size_t j = 0; j < h; ++j) out.dc_prev[j] = dc[j] * tape.gate_f[j];
  kernels::matvec_t_acc(store.value(p.w_ci), da_i.data(), out.dc_prev.data());
  kernels::matvec_t_acc(store.value(p.w_cf), da_f.data(), out.dc_prev.data());

  kernels::outer_acc(grads.at(p.w_xi), da_i.data(), tape.x.data());
  kernels::outer_acc(grads.at(p.w_hi), da_i.data(), tape.h_prev.data());
  kernels::outer_acc(grads.at(p.w_ci), da_i.data(), tape.c_prev.data());
  kernels::outer_acc(grads.at(p.w_xf), da_f.data(), tape.x.data());
  kernels::outer_acc(grads.at(p.w_hf), da_f.data(), tape.h_prev.data());
  kernels::outer_acc(grads.at(p.w_cf), da_f.data(), tape.c_prev.data());
  kernels::outer_acc(grads.at(p.w_xc), da_c.data(), tape.x.data());
  kernels::outer_acc(grads.at(p.w_hc), da_c.data(), tape.h_prev.data());
  kernels::outer_acc(grads.at(p.w_xo), da_o.data(), tape.x.data());
  kernels::outer_acc(grads.at(p.w_ho), da_o.data(), tape.h_prev.data());
  kernels::outer_acc(grads.at(p.w_co), da_o.data(), tape.c.data());

  for (std::size_t j = 0; j < h; ++j) {
    grads.at(p.b_i).data[j] += da_i[j];
    grads.at(p.b_f).data[j] += da_f[j];
    grads.at(p.b_c).data[j] += da_c[j];
    grads.at(p.b_o).data[j] += da_o[j];
  }
  return out;
}

Vec gru_step(const ParameterStore& store, const GruParams& p, const Vec& x, const Vec& h_prev,
             GruStepTape* tape) {
  check_len(x, p.input_dim, "x", "gru_step");
  check_len(h_prev, p.hidden_dim, "h_prev", "gru_step");
  const std::size_t h = p.hidden_dim;

  Vec joint = concat(h_prev, x);
  Vec a_r(h, 0.0), a_z(h, 0.0);
  kernels::matvec_acc(store.value(p.w_reset), joint.data(), a_r.data());
  kernels::matvec_acc(store.value(p.w_update), joint.data(), a_z.data());

  Vec gate_r(h), gate_z(h);
  for (std::size_t j = 0; j < h; ++j) {
    gate_r[j] = sigmoid(a_r[j]);
    gate_z[j] = sigmoid(a_z[j]);
  }

  Vec gated(h);
  for (std::size_t j = 0; j < h; ++j) gated[j] = gate_r[j] * h_prev[j];
  Vec joint_cand = concat(gated, x);

  Vec a_c(h, 0.0);
  kernels::matvec_acc(store.value(p.w_cand), joint_cand.data(), a_c.data());
  Vec cand(h), out(h);
  for (std::size_t j = 0; j < h; ++j) {
    cand[j] = std::tanh(a_c[j]);
    out[j] = (1.0 - gate_z[j]) * h_prev[j] + gate_z[j] * cand[j];
  }

  if (tape) {
    tape->x = x;
    tape->h_prev = h_prev;
    tape->joint = std::move(joint);
    tape->gate_r = std::move(gate_r);
    tape->gate_z = std::move(gate_z);
    tape->joint_cand = std::move(joint_cand);
    tape->cand = std::move(cand);
  }
  return out;
}

Vec gru_readout(const Matrix& w_o, const Vec& h) {
  if (w_o.cols != h.size()) {
    throw ShapeError("gru_readout: W_o is " + std::to_string(w_o.rows) + "x" +
                     std::to_string(w_o.cols) + " but h has length " + std::to_string(h.size()));
  }
  Vec y(w_o.rows, 0.0);
  kernels::matvec_acc(w_o, h.data(), y.data());
  for (double& v : y) v = sigmoid(v);
  return y;
}

GruStepGrad gru_backward(const ParameterStore& store, const GruParams& p, const GruStepTape& tape,
                         const Vec& dh, Gradients& grads) {
  check_tape_len(tape.x, p.input_dim, "x", "gru_backward");
  check_tape_len(tape.h_prev, p.hidden_dim, "h_prev", "gru_backward");
  check_len(dh, p.hidden_dim, "dh", "gru_backward");
  const std::size_t h = p.hidden_dim;
  const std::size_t in = p.input_dim;

  Vec da_z(h), da_c(h);
  GruStepGrad out;
  out.dh_prev.assign(h, 0.0);
  out.dx.assign(in, 0.0);

  for (std::size_t j = 0; j < h; ++j) {
    const double dz = dh[j] * (tape.cand[j] - tape.h_prev[j]);
    const double dcand = dh[j] * tape.gate_z[j];
    da_z[j] = dz * tape.gate_z[j] * (1.0 - tape.gate_z[j]);
    da_c[j] = dcand * (1.0 - tape.cand[j] * tape.cand[j]);
    out.dh_prev[j] = dh[j] * (1.0 - tape.gate_z[j]);
  }

  // through the candidate's [r * h_prev, x] input
  Vec d_joint_cand(h + in, 0.0);
  kernels::matvec_t_acc(store.value(p.w_cand), da_c.data(), d_joint_cand.data());

  Vec da_r(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double dr = d_joint_cand[j] * tape.h_prev[j];
    da_r[j] = dr * tape.gate_r[j] * (1.0 - tape.gate_r[j]);
    out.dh_prev[j] += d_joint_cand[j] * tape.gate_r[j];
  }
  for (std::size_t j = 0; j < in; ++j) out.dx[j] += d_joint_cand[h + j];

  Vec d_joint(h + in, 0.0);
  kernels::matvec_t_acc(store.value(p.w_reset), da_r.data(), d_joint.data());
  kernels::matvec_t_acc(store.value(p.w_update), da_z.data(), d_joint.data());
  for (std::size_t j = 0; j < h; ++j) out.dh_prev[j] += d_joint[j];
  for (std::size_t j = 0; j < in; ++j) out.dx[j] += d_joint[h + j];

  kernels::outer_acc(grads.at(p.w_reset), da_r.data(), tape.joint.data());
  kernels::outer_acc(grads.at(p.w_update), da_z.data(), tape.joint.data());
  kernels::outer_acc(grads.at(p.w_cand), da_c.data(), tape.joint_cand.data());
  return out;
}

}  // namespace mmseq
