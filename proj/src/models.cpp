#include "occupancy/models.hpp"

#include <cmath>

namespace occupancy::models {

namespace {
constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::hybrid_concat, "hybrid_concat"},
    {Variant::bilstm_then_transformer, "bilstm_then_transformer"},
    {Variant::transformer_then_bilstm, "transformer_then_bilstm"},
    {Variant::bilstm_attention, "bilstm_attention"},
};
} // namespace

std::string_view variant_name(Variant v) {
    for (const auto& [var, name] : kVariantNames)
        if (var == v) return name;
    return "unknown";
}

Variant parse_variant(std::string_view name) {
    for (const auto& [var, n] : kVariantNames)
        if (n == name) return var;
    std::string msg = "unknown variant '" + std::string(name) + "'; valid variants:";
    for (const auto& [var, n] : kVariantNames) msg += " " + std::string(n);
    throw std::invalid_argument(msg);
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {Variant::hybrid_concat, Variant::bilstm_then_transformer,
                                           Variant::transformer_then_bilstm, Variant::bilstm_attention};
    return v;
}

void ModelConfig::validate() const {
    auto need = [](std::size_t v, const char* what) {
        if (v < 1) throw std::invalid_argument(std::string("model config: ") + what + " must be >= 1");
    };
    need(input_features, "input_features");
    need(seq_len, "seq_len");
    need(lstm_hidden, "lstm_hidden");
    need(model_width, "model_width");
    need(heads, "heads");
    need(head_dim, "head_dim");
    need(ffn_width, "ffn_width");
    need(blocks, "blocks");
    if (dropout && !(*dropout >= 0.0 && *dropout < 1.0)) {
        throw std::invalid_argument("model config: dropout must lie in [0, 1)");
    }
}

Model Model::build(const ModelConfig& config) {
    config.validate();
    Model m;
    m.config_ = config;
    Rng rng(config.seed);
    const std::size_t F = config.input_features, H = config.lstm_hidden, W = config.model_width;
    auto make_encoder = [&] {
        for (std::size_t b = 0; b < config.blocks; ++b)
            m.encoder_.push_back(nn::EncoderBlock::create(W, config.heads, config.head_dim, config.ffn_width, rng));
    };
    std::size_t head_in = 0;
    switch (config.variant) {
    case Variant::hybrid_concat:
        m.bilstm_ = nn::BiLstm::create(F, H, rng);
        m.input_proj_ = nn::Linear::create(F, W, rng);
        make_encoder();
        head_in = 2 * H + W;
        break;
    case Variant::bilstm_then_transformer:
        m.bilstm_ = nn::BiLstm::create(F, H, rng);
        m.input_proj_ = nn::Linear::create(2 * H, W, rng);
        make_encoder();
        head_in = W;
        break;
    case Variant::transformer_then_bilstm:
        m.input_proj_ = nn::Linear::create(F, W, rng);
        make_encoder();
        m.bilstm_ = nn::BiLstm::create(W, H, rng);
        head_in = 2 * H;
        break;
    case Variant::bilstm_attention:
        m.bilstm_ = nn::BiLstm::create(F, H, rng);
        m.attention_ = nn::TemporalAttention::create(2 * H, rng);
        head_in = 4 * H;
        break;
    }
    m.head_ = nn::Linear::create(head_in, 1, rng);
    return m;
}

Var Model::transformer_branch(Tape& tape, Var x, const ForwardOptions& opts) {
    Var h = input_proj_->forward(tape, x);
    if (opts.add_positional_encoding) {
        h = ad::add(h, tape.constant(nn::positional_encoding(h.value().extent(0), h.value().extent(1))));
    }
    for (auto& block : encoder_) h = nn::encoder_block(tape, h, block);
    return h;
}

Var Model::forward(Tape& tape, const Tensor& x, const ForwardOptions& opts) {
    if (x.rank() != 2 || x.extent(0) != config_.seq_len || x.extent(1) != config_.input_features) {
        throw ShapeError("model expects input [" + std::to_string(config_.seq_len) + "x" +
                         std::to_string(config_.input_features) + "], got " + shape_str(x.shape()));
    }
    Var in = tape.constant(x);
    Var features;
    switch (config_.variant) {
    case Variant::hybrid_concat:
        features = ad::concat_last({bilstm_->forward(tape, in), transformer_branch(tape, in, opts)});
        break;
    case Variant::bilstm_then_transformer:
        features = transformer_branch(tape, bilstm_->forward(tape, in), opts);
        break;
    case Variant::transformer_then_bilstm:
        features = bilstm_->forward(tape, transformer_branch(tape, in, opts));
        break;
    case Variant::bilstm_attention:
        features = nn::temporal_attention(tape, bilstm_->forward(tape, in), *attention_);
        break;
    }
    if (opts.training && config_.dropout && *config_.dropout > 0.0) {
        if (!opts.dropout_rng) throw std::invalid_argument("dropout enabled but no generator supplied");
        const double keep = 1.0 - *config_.dropout;
        Tensor mask(features.shape());
        for (auto& v : mask.data()) v = opts.dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        features = ad::mul(features, tape.constant(std::move(mask)));
    }
    Var logits = head_.forward(tape, features);  // [T x 1]
    return ad::reshape(ad::sigmoid(logits), {config_.seq_len});
}

std::vector<double> Model::predict_proba(const Tensor& x) {
    Tape tape;
    Var y = forward(tape, x);
    const auto d = y.value().data();
    return {d.begin(), d.end()};
}

std::vector<int> Model::predict(const Tensor& x, double threshold) {
    const auto p = predict_proba(x);
    return threshold_labels(p, threshold);
}

std::vector<NamedTensor> Model::parameters() {
    std::vector<NamedTensor> out;
    if (bilstm_ && config_.variant != Variant::transformer_then_bilstm) bilstm_->collect("bilstm", out);
    if (input_proj_) input_proj_->collect("input_proj", out);
    for (std::size_t b = 0; b < encoder_.size(); ++b) encoder_[b].collect("encoder" + std::to_string(b), out);
    if (bilstm_ && config_.variant == Variant::transformer_then_bilstm) bilstm_->collect("bilstm", out);
    if (attention_) attention_->collect("attention", out);
    head_.collect("head", out);
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : const_cast<Model*>(this)->parameters()) n += p.tensor->size();
    return n;
}

void Model::zero_grads() {
    for (auto& p : parameters()) p.tensor->zero_grad();
}

std::vector<int> threshold_labels(std::span<const double> probs, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
    std::vector<int> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
    return out;
}

} // namespace occupancy::models
