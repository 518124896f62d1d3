#include "occupancy/layers.hpp"

#include <cmath>

namespace occupancy::nn {

Tensor init_uniform(Shape shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    t.set_requires_grad(true);
    return t;
}

namespace {
Tensor filled(Shape shape, double value) {
    Tensor t(std::move(shape), value);
    t.set_requires_grad(true);
    return t;
}

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }
} // namespace

// ---- Linear ----------------------------------------------------------------

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng, bool bias) {
    Linear l;
    l.weight = init_uniform({in, out}, inv_sqrt(in), rng);
    l.has_bias = bias;
    if (bias) l.bias = init_uniform({out}, inv_sqrt(in), rng);
    return l;
}

Var Linear::forward(Tape& tape, Var x) {
    if (x.value().last() != in()) {
        throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
    }
    Var y = ad::matmul(x, tape.leaf(weight));
    return has_bias ? ad::add(y, tape.leaf(bias)) : y;
}

void Linear::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
    out.push_back({prefix + ".weight", &weight});
    if (has_bias) out.push_back({prefix + ".bias", &bias});
}

// ---- LSTM ------------------------------------------------------------------

LstmCell LstmCell::create(std::size_t input, std::size_t hidden, Rng& rng) {
    LstmCell c;
    const double bw = inv_sqrt(input);
    const double bu = inv_sqrt(hidden);
    c.w_i = init_uniform({input, hidden}, bw, rng);
    c.w_f = init_uniform({input, hidden}, bw, rng);
    c.w_g = init_uniform({input, hidden}, bw, rng);
    c.w_o = init_uniform({input, hidden}, bw, rng);
    c.u_i = init_uniform({hidden, hidden}, bu, rng);
    c.u_f = init_uniform({hidden, hidden}, bu, rng);
    c.u_g = init_uniform({hidden, hidden}, bu, rng);
    c.u_o = init_uniform({hidden, hidden}, bu, rng);
    c.b_i = init_uniform({hidden}, bu, rng);
    c.b_f = filled({hidden}, 1.0);
    c.b_g = init_uniform({hidden}, bu, rng);
    c.b_o = init_uniform({hidden}, bu, rng);
    return c;
}

void LstmCell::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
    out.push_back({prefix + ".w_i", &w_i});
    out.push_back({prefix + ".w_f", &w_f});
    out.push_back({prefix + ".w_g", &w_g});
    out.push_back({prefix + ".w_o", &w_o});
    out.push_back({prefix + ".u_i", &u_i});
    out.push_back({prefix + ".u_f", &u_f});
    out.push_back({prefix + ".u_g", &u_g});
    out.push_back({prefix + ".u_o", &u_o});
    out.push_back({prefix + ".b_i", &b_i});
    out.push_back({prefix + ".b_f", &b_f});
    out.push_back({prefix + ".b_g", &b_g});
    out.push_back({prefix + ".b_o", &b_o});
}

namespace {

struct FusedGates {
    Var w;  // [F x 4H]
    Var u;  // [H x 4H]
    Var b;  // [4H]
};

FusedGates fuse(Tape& tape, LstmCell& cell) {
    return {ad::concat_last({tape.leaf(cell.w_i), tape.leaf(cell.w_f), tape.leaf(cell.w_g), tape.leaf(cell.w_o)}),
            ad::concat_last({tape.leaf(cell.u_i), tape.leaf(cell.u_f), tape.leaf(cell.u_g), tape.leaf(cell.u_o)}),
            ad::concat_last({tape.leaf(cell.b_i), tape.leaf(cell.b_f), tape.leaf(cell.b_g), tape.leaf(cell.b_o)})};
}

// z holds the four gate pre-activations side by side. c_prev may be absent
// (zero initial state).
LstmState step_from_preactivation(Var z, const Var* c_prev, std::size_t hidden) {
    Var i = ad::sigmoid(ad::slice_last(z, 0, hidden));
    Var g = ad::tanh(ad::slice_last(z, 2 * hidden, hidden));
    Var o = ad::sigmoid(ad::slice_last(z, 3 * hidden, hidden));
    Var c = ad::mul(i, g);
    if (c_prev) {
        Var f = ad::sigmoid(ad::slice_last(z, hidden, hidden));
        c = ad::add(ad::mul(f, *c_prev), c);
    }
    Var h = ad::mul(o, ad::tanh(c));
    return {h, c};
}

} // namespace

LstmState lstm_cell_step(Tape& tape, Var x_t, LstmState prev, LstmCell& cell) {
    const std::size_t H = cell.hidden();
    if (x_t.value().size() != cell.input() || prev.h.value().size() != H || prev.c.value().size() != H) {
        throw ShapeError("lstm_cell_step: x " + shape_str(x_t.shape()) + ", h " + shape_str(prev.h.shape()) +
                         ", c " + shape_str(prev.c.shape()) + " do not fit cell with input " +
                         std::to_string(cell.input()) + " and hidden " + std::to_string(H));
    }
    FusedGates gates = fuse(tape, cell);
    Var x = ad::reshape(x_t, {1, cell.input()});
    Var h = ad::reshape(prev.h, {1, H});
    Var c = ad::reshape(prev.c, {1, H});
    Var z = ad::add(ad::add(ad::matmul(x, gates.w), ad::matmul(h, gates.u)), gates.b);
    return step_from_preactivation(z, &c, H);
}

Var lstm_sequence(Tape& tape, Var x, LstmCell& cell, bool reverse) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || xv.extent(1) != cell.input()) {
        throw ShapeError("lstm: input " + shape_str(xv.shape()) + " does not match cell input width " +
                         std::to_string(cell.input()));
    }
    const std::size_t T = xv.extent(0);
    const std::size_t H = cell.hidden();
    FusedGates gates = fuse(tape, cell);
    Var xw = ad::add(ad::matmul(x, gates.w), gates.b);  // [T x 4H]

    std::vector<Var> hs(T);
    LstmState state{};
    for (std::size_t k = 0; k < T; ++k) {
        const std::size_t t = reverse ? T - 1 - k : k;
        Var z = ad::rows(xw, t, 1);
        if (k == 0) {
            state = step_from_preactivation(z, nullptr, H);
        } else {
            z = ad::add(z, ad::matmul(state.h, gates.u));
            state = step_from_preactivation(z, &state.c, H);
        }
        hs[t] = state.h;
    }
    return T == 1 ? hs[0] : ad::concat_rows(hs);
}

Var bilstm_forward(Tape& tape, Var x, LstmCell& fwd, LstmCell& bwd) {
    if (x.value().rank() != 2 || x.value().extent(0) == 0) throw ShapeError("bilstm: expected a [T x F] sequence");
    Var f = lstm_sequence(tape, x, fwd, false);
    Var b = lstm_sequence(tape, x, bwd, true);
    return ad::concat_last({f, b});
}

BiLstm BiLstm::create(std::size_t input, std::size_t hidden, Rng& rng) {
    BiLstm b;
    b.fwd = LstmCell::create(input, hidden, rng);
    b.bwd = LstmCell::create(input, hidden, rng);
    return b;
}

void BiLstm::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
    fwd.collect(prefix + ".fwd", out);
    bwd.collect(prefix + ".bwd", out);
}

// ---- transformer encoder -----------------------------------------------------

Tensor positional_encoding(std::size_t length, std::size_t width) {
    Tensor pe({length, width});
    for (std::size_t p = 0; p < length; ++p) {
        for (std::size_t col = 0; col < width; ++col) {
            const std::size_t m = col / 2;
            const double angle = static_cast<double>(p) /
                                 std::pow(10000.0, static_cast<double>(2 * m) / static_cast<double>(width));
            pe.at(p, col) = (col % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

EncoderBlock EncoderBlock::create(std::size_t width, std::size_t n_heads, std::size_t head_dim, std::size_t ffn_width,
                                  Rng& rng) {
    if (width == 0 || n_heads == 0 || head_dim == 0 || ffn_width == 0) {
        throw std::invalid_argument("encoder block extents must be >= 1");
    }
    EncoderBlock b;
    const double bw = inv_sqrt(width);
    for (std::size_t u = 0; u < n_heads; ++u) {
        AttentionHead h;
        h.w_q = init_uniform({width, head_dim}, bw, rng);
        h.w_k = init_uniform({width, head_dim}, bw, rng);
        h.w_v = init_uniform({width, head_dim}, bw, rng);
        b.heads.push_back(std::move(h));
    }
    b.w_o = init_uniform({n_heads * head_dim, width}, inv_sqrt(n_heads * head_dim), rng);
    b.ffn_in = Linear::create(width, ffn_width, rng);
    b.ffn_out = Linear::create(ffn_width, width, rng);
    b.ln1_gamma = filled({width}, 1.0);
    b.ln1_beta = filled({width}, 0.0);
    b.ln2_gamma = filled({width}, 1.0);
    b.ln2_beta = filled({width}, 0.0);
    return b;
}

void EncoderBlock::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
    for (std::size_t u = 0; u < heads.size(); ++u) {
        const std::string p = prefix + ".head" + std::to_string(u);
        out.push_back({p + ".w_q", &heads[u].w_q});
        out.push_back({p + ".w_k", &heads[u].w_k});
        out.push_back({p + ".w_v", &heads[u].w_v});
    }
    out.push_back({prefix + ".w_o", &w_o});
    ffn_in.collect(prefix + ".ffn_in", out);
    ffn_out.collect(prefix + ".ffn_out", out);
    out.push_back({prefix + ".ln1.gamma", &ln1_gamma});
    out.push_back({prefix + ".ln1.beta", &ln1_beta});
    out.push_back({prefix + ".ln2.gamma", &ln2_gamma});
    out.push_back({prefix + ".ln2.beta", &ln2_beta});
}

Var multi_head_self_attention(Tape& tape, Var x, EncoderBlock& block, std::vector<Tensor>* weights) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || xv.extent(1) != block.width()) {
        throw ShapeError("attention: input " + shape_str(xv.shape()) + " does not match model width " +
                         std::to_string(block.width()));
    }
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(block.head_dim()));
    std::vector<Var> outputs;
    outputs.reserve(block.heads.size());
    for (auto& head : block.heads) {
        Var q = ad::matmul(x, tape.leaf(head.w_q));
        Var k = ad::matmul(x, tape.leaf(head.w_k));
        Var v = ad::matmul(x, tape.leaf(head.w_v));
        Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_scale);
        Var attn = ad::softmax_last(scores);
        if (weights) weights->push_back(attn.value());
        outputs.push_back(ad::matmul(attn, v));
    }
    Var concat = outputs.size() == 1 ? outputs.front() : ad::concat_last(outputs);
    return ad::matmul(concat, tape.leaf(block.w_o));
}

Var feed_forward(Tape& tape, Var x, EncoderBlock& block) {
    return block.ffn_out.forward(tape, ad::relu(block.ffn_in.forward(tape, x)));
}

Var encoder_block(Tape& tape, Var x, EncoderBlock& block) {
    Var attended = multi_head_self_attention(tape, x, block);
    Var x2 = ad::layer_norm(ad::add(x, attended), tape.leaf(block.ln1_gamma), tape.leaf(block.ln1_beta));
    Var ff = feed_forward(tape, x2, block);
    return ad::layer_norm(ad::add(x2, ff), tape.leaf(block.ln2_gamma), tape.leaf(block.ln2_beta));
}

// ---- temporal attention ------------------------------------------------------

TemporalAttention TemporalAttention::create(std::size_t width, Rng& rng) {
    TemporalAttention a;
    const double bw = inv_sqrt(width);
    a.w_a = init_uniform({width, width}, bw, rng);
    a.b_a = init_uniform({width}, bw, rng);
    a.v = init_uniform({width, 1}, bw, rng);
    return a;
}

void TemporalAttention::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
    out.push_back({prefix + ".w_a", &w_a});
    out.push_back({prefix + ".b_a", &b_a});
    out.push_back({prefix + ".v", &v});
}

Var temporal_attention(Tape& tape, Var h, TemporalAttention& attn, Tensor* weights) {
    const Tensor& hv = h.value();
    if (hv.rank() != 2 || hv.extent(1) != attn.w_a.extent(0)) {
        throw ShapeError("temporal attention: input " + shape_str(hv.shape()) + " does not match width " +
                         std::to_string(attn.w_a.extent(0)));
    }
    const std::size_t T = hv.extent(0);
    Var proj = ad::tanh(ad::add(ad::matmul(h, tape.leaf(attn.w_a)), tape.leaf(attn.b_a)));
    Var scores = ad::transpose(ad::matmul(proj, tape.leaf(attn.v)));  // [1 x T]
    Var alpha = ad::softmax_last(scores);
    if (weights) *weights = alpha.value();
    Var context = ad::matmul(alpha, h);  // [1 x D]
    return ad::concat_last({h, ad::repeat_rows(context, T)});
}

} // namespace occupancy::nn
