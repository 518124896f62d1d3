#include "occupancy/config_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace occupancy {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> s = {
        {"variant",
         [](RunConfig& c, const std::string&, const std::string& v) {
             try {
                 c.model.variant = models::parse_variant(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"lstm_hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.lstm_hidden = parse_number<std::size_t>(k, v); }},
        {"model_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.model_width = parse_number<std::size_t>(k, v); }},
        {"heads", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.heads = parse_number<std::size_t>(k, v); }},
        {"head_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.head_dim = parse_number<std::size_t>(k, v); }},
        {"ffn_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.ffn_width = parse_number<std::size_t>(k, v); }},
        {"blocks", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.blocks = parse_number<std::size_t>(k, v); }},
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.seed = parse_number<std::uint64_t>(k, v); }},
        {"dropout",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "none") c.model.dropout.reset();
             else c.model.dropout = parse_number<double>(k, v);
         }},
        {"epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = parse_number<std::size_t>(k, v); }},
        {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = parse_number<std::size_t>(k, v); }},
        {"learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.learning_rate = parse_number<double>(k, v); }},
        {"beta1", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.beta1 = parse_number<double>(k, v); }},
        {"beta2", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.beta2 = parse_number<double>(k, v); }},
        {"adam_eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam_eps = parse_number<double>(k, v); }},
        {"clip_norm",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "none") c.train.clip_norm.reset();
             else c.train.clip_norm = parse_number<double>(k, v);
         }},
        {"train_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(k, v); }},
        {"patience",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "none") c.train.patience.reset();
             else c.train.patience = parse_number<std::size_t>(k, v);
         }},
        {"threshold", [](RunConfig& c, const std::string& k, const std::string& v) { c.threshold = parse_number<double>(k, v); }},
    };
    return s;
}

} // namespace

RunConfig parse_run_config(const std::string& text, RunConfig base, const std::string& origin) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError(where + "missing value for " + key);
        if (auto it = seen.find(key); it != seen.end()) {
            throw ConfigError(where + "duplicate key " + key + " (first on line " + std::to_string(it->second) + ")");
        }
        seen[key] = lineno;
        bool found = false;
        for (const auto& [name, set] : setters()) {
            if (name != key) continue;
            try {
                set(base, key, value);
            } catch (const ConfigError& e) {
                throw ConfigError(where + e.what());
            }
            found = true;
            break;
        }
        if (!found) throw ConfigError(where + "unknown key '" + key + "'");
    }
    try {
        base.model.validate();
        base.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!(base.threshold > 0.0 && base.threshold < 1.0)) throw ConfigError(origin + ": threshold must lie in (0, 1)");
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str(), std::move(base), path.string());
}

std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& c) {
    const auto& m = c.model;
    const auto& t = c.train;
    return {
        {"variant", std::string(models::variant_name(m.variant))},
        {"lstm_hidden", std::to_string(m.lstm_hidden)},
        {"model_width", std::to_string(m.model_width)},
        {"heads", std::to_string(m.heads)},
        {"head_dim", std::to_string(m.head_dim)},
        {"ffn_width", std::to_string(m.ffn_width)},
        {"blocks", std::to_string(m.blocks)},
        {"seed", std::to_string(m.seed)},
        {"dropout", m.dropout ? fmt(*m.dropout) : "none"},
        {"epochs", std::to_string(t.epochs)},
        {"batch_size", std::to_string(t.batch_size)},
        {"learning_rate", fmt(t.learning_rate)},
        {"beta1", fmt(t.beta1)},
        {"beta2", fmt(t.beta2)},
        {"adam_eps", fmt(t.adam_eps)},
        {"clip_norm", t.clip_norm ? fmt(*t.clip_norm) : "none"},
        {"train_seed", std::to_string(t.seed)},
        {"patience", t.patience ? std::to_string(*t.patience) : "none"},
        {"threshold", fmt(c.threshold)},
    };
}

} // namespace occupancy
