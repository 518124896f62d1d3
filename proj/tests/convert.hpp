#pragma once

#include "occupancy/layers.hpp"
#include "oracles.hpp"

namespace oracle {

inline Encoder from(const occupancy::nn::EncoderBlock& b) {
    Encoder e;
    for (const auto& h : b.heads) e.heads.push_back({to_mat(h.w_q), to_mat(h.w_k), to_mat(h.w_v)});
    e.wo = to_mat(b.w_o);
    e.w1 = to_mat(b.ffn_in.weight);
    e.b1 = to_vec(b.ffn_in.bias);
    e.w2 = to_mat(b.ffn_out.weight);
    e.b2 = to_vec(b.ffn_out.bias);
    e.g1 = to_vec(b.ln1_gamma);
    e.be1 = to_vec(b.ln1_beta);
    e.g2 = to_vec(b.ln2_gamma);
    e.be2 = to_vec(b.ln2_beta);
    return e;
}

inline Lstm from(const occupancy::nn::LstmCell& c) {
    return {to_mat(c.w_i), to_mat(c.w_f), to_mat(c.w_g), to_mat(c.w_o), to_mat(c.u_i), to_mat(c.u_f),
            to_mat(c.u_g), to_mat(c.u_o), to_vec(c.b_i), to_vec(c.b_f), to_vec(c.b_g), to_vec(c.b_o)};
}

inline double max_abs_diff(const Mat& a, const occupancy::Tensor& b) {
    double worst = 0.0;
    const std::size_t cols = b.last();
    if (a.size() != b.leading()) return INFINITY;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (a[r].size() != cols) return INFINITY;
        for (std::size_t c = 0; c < cols; ++c) worst = std::max(worst, std::abs(a[r][c] - b.data()[r * cols + c]));
    }
    return worst;
}

} // namespace oracle
