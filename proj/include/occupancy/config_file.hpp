#pragma once

#include "occupancy/models.hpp"
#include "occupancy/training.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace occupancy {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    models::ModelConfig model;
    training::TrainConfig train;
    double threshold = 0.5;
};

// Flat `key = value` lines; '#' starts a comment. Every key must be known:
//   variant lstm_hidden model_width heads head_dim ffn_width blocks seed dropout
//   epochs batch_size learning_rate beta1 beta2 adam_eps clip_norm train_seed
//   patience threshold
// "none" clears the optional keys (dropout, clip_norm, patience).
RunConfig parse_run_config(const std::string& text, RunConfig base = {}, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Every key with its resolved value, in the order listed above.
std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& c);

} // namespace occupancy
