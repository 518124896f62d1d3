#pragma once

#include "occupancy/autodiff.hpp"
#include "occupancy/gradcheck.hpp"
#include "occupancy/random.hpp"

#include <string>
#include <vector>

namespace occupancy::nn {

using ad::NamedTensor;
using ad::Tape;
using ad::Var;

// Uniform in [-bound, bound]; parameters are created with requires_grad set.
Tensor init_uniform(Shape shape, double bound, Rng& rng);

// y = x W + b over the last axis of x.
struct Linear {
    Tensor weight;  // [in x out]
    Tensor bias;    // [out]
    bool has_bias = true;

    static Linear create(std::size_t in, std::size_t out, Rng& rng, bool bias = true);
    std::size_t in() const { return weight.extent(0); }
    std::size_t out() const { return weight.extent(1); }
    Var forward(Tape& tape, Var x);
    void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

// Standard LSTM cell with a forget gate. Gate order everywhere: i, f, g, o.
struct LstmCell {
    Tensor w_i, w_f, w_g, w_o;  // [input x hidden]
    Tensor u_i, u_f, u_g, u_o;  // [hidden x hidden]
    Tensor b_i, b_f, b_g, b_o;  // [hidden]; b_f initialised to 1

    static LstmCell create(std::size_t input, std::size_t hidden, Rng& rng);
    std::size_t input() const { return w_i.extent(0); }
    std::size_t hidden() const { return w_i.extent(1); }
    void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

struct LstmState {
    Var h;  // [1 x H]
    Var c;  // [1 x H]
};

// One step: x_t is [1 x F] (or [F]).
LstmState lstm_cell_step(Tape& tape, Var x_t, LstmState prev, LstmCell& cell);

// Runs the cell over the rows of x ([T x F]) from zero state. Row t of the
// result is the hidden state at time t regardless of scan direction.
Var lstm_sequence(Tape& tape, Var x, LstmCell& cell, bool reverse);

// Row t = Concat(forward h_t, backward h_t); [T x 2H].
Var bilstm_forward(Tape& tape, Var x, LstmCell& fwd, LstmCell& bwd);

struct BiLstm {
    LstmCell fwd;
    LstmCell bwd;

    static BiLstm create(std::size_t input, std::size_t hidden, Rng& rng);
    std::size_t output_width() const { return 2 * fwd.hidden(); }
    Var forward(Tape& tape, Var x) { return bilstm_forward(tape, x, fwd, bwd); }
    void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

// Fixed sinusoidal table [T x width]: sin at even columns, cos at odd ones,
// frequency 1 / 10000^(2m / width) for column pair m.
Tensor positional_encoding(std::size_t length, std::size_t width);

struct AttentionHead {
    Tensor w_q, w_k, w_v;  // [width x head_dim]
};

// Post-norm encoder block: X'' = LN(X' + MHSA(X')), out = LN(X'' + FFN(X'')).
struct EncoderBlock {
    std::vector<AttentionHead> heads;
    Tensor w_o;  // [(heads * head_dim) x width], no bias
    Linear ffn_in;
    Linear ffn_out;
    Tensor ln1_gamma, ln1_beta;
    Tensor ln2_gamma, ln2_beta;

    static EncoderBlock create(std::size_t width, std::size_t n_heads, std::size_t head_dim, std::size_t ffn_width,
                               Rng& rng);
    std::size_t width() const { return w_o.extent(1); }
    std::size_t head_dim() const { return heads.front().w_q.extent(1); }
    void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

// Unmasked scaled dot-product attention over all T positions. When
// `weights` is given, the per-head [T x T] attention matrices are appended.
Var multi_head_self_attention(Tape& tape, Var x, EncoderBlock& block, std::vector<Tensor>* weights = nullptr);
Var feed_forward(Tape& tape, Var x, EncoderBlock& block);
Var encoder_block(Tape& tape, Var x, EncoderBlock& block);

// Additive attention over time steps:
//   e_t = v . tanh(H_t W_a + b_a),  alpha = softmax(e),  c = sum_t alpha_t H_t
// and row t of the output is Concat(H_t, c).
struct TemporalAttention {
    Tensor w_a;  // [D x D]
    Tensor b_a;  // [D]
    Tensor v;    // [D x 1]

    static TemporalAttention create(std::size_t width, Rng& rng);
    void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

Var temporal_attention(Tape& tape, Var h, TemporalAttention& attn, Tensor* weights = nullptr);

} // namespace occupancy::nn
