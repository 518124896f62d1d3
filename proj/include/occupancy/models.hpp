#pragma once

#include "occupancy/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace occupancy::models {

using ad::NamedTensor;
using ad::Tape;
using ad::Var;

enum class Variant {
    hybrid_concat,            // Concat(BiLSTM(X), Encoder(X)) -> head
    bilstm_then_transformer,  // Encoder(BiLSTM(X)) -> head
    transformer_then_bilstm,  // BiLSTM(Encoder(X)) -> head
    bilstm_attention,         // TemporalAttention(BiLSTM(X)) -> head
};

std::string_view variant_name(Variant v);
// Throws std::invalid_argument listing the valid names.
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

struct ModelConfig {
    Variant variant = Variant::hybrid_concat;
    std::size_t input_features = 9;  // F
    std::size_t seq_len = 24;        // T
    std::size_t lstm_hidden = 64;    // H
    std::size_t model_width = 64;    // F'
    std::size_t heads = 4;           // U
    std::size_t head_dim = 16;       // d_k
    std::size_t ffn_width = 128;     // d_ff
    std::size_t blocks = 1;
    std::uint64_t seed = 0;
    std::optional<double> dropout;   // applied to the fused features in training mode only

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct ForwardOptions {
    bool training = false;
    Rng* dropout_rng = nullptr;  // required when training with dropout
    bool add_positional_encoding = true;
};

class Model {
public:
    static Model build(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    // Per-timestep occupancy probabilities, shape [T].
    Var forward(Tape& tape, const Tensor& x, const ForwardOptions& opts = {});
    std::vector<double> predict_proba(const Tensor& x);
    std::vector<int> predict(const Tensor& x, double threshold = 0.5);

    // Stable, named ordering; pointers are valid until the model is moved.
    std::vector<NamedTensor> parameters();
    std::size_t parameter_count() const;
    void zero_grads();

    // Width of the feature vector fed to the classification head.
    std::size_t head_input_width() const { return head_.in(); }

    // Components, exposed for tests and ablations.
    std::optional<nn::BiLstm>& bilstm() { return bilstm_; }
    std::optional<nn::Linear>& input_projection() { return input_proj_; }
    std::vector<nn::EncoderBlock>& encoder() { return encoder_; }
    std::optional<nn::TemporalAttention>& temporal_attention() { return attention_; }
    nn::Linear& head() { return head_; }

private:
    Var transformer_branch(Tape& tape, Var x, const ForwardOptions& opts);

    ModelConfig config_;
    std::optional<nn::BiLstm> bilstm_;
    std::optional<nn::Linear> input_proj_;  // F -> F' or 2H -> F'
    std::vector<nn::EncoderBlock> encoder_;
    std::optional<nn::TemporalAttention> attention_;
    nn::Linear head_;
};

// Hard labels: 1 iff p >= threshold. threshold must lie in (0, 1).
std::vector<int> threshold_labels(std::span<const double> probs, double threshold = 0.5);

// ---- checkpoints -------------------------------------------------------------

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainingMeta {
    std::size_t epochs = 0;
    double final_loss = 0.0;
    // Input normalisation fitted on the training data, if any.
    std::vector<double> norm_mean;
    std::vector<double> norm_std;
};

inline constexpr std::string_view kCheckpointMagic = "occupancy-checkpoint";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(Model& model, const TrainingMeta& meta, const std::filesystem::path& path);

struct LoadedCheckpoint {
    Model model;
    TrainingMeta meta;
};

// When `expected` is given, the stored variant must match it.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected = std::nullopt);

// Plain-text `key = value` rendering of a config (the checkpoint header body).
std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig& config);

} // namespace occupancy::models
