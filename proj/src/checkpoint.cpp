#include "occupancy/models.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace occupancy::models {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_u64(out, e);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    explicit Reader(std::string_view buf) : buf_(buf) {}

    bool at_end() const { return pos_ == buf_.size(); }

    std::string_view line() {
        const auto nl = buf_.find('\n', pos_);
        if (nl == std::string_view::npos) throw CheckpointError("corrupt checkpoint: truncated header");
        auto l = buf_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return l;
    }

    std::uint64_t uint(int bytes) {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }

    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw CheckpointError("corrupt checkpoint: truncated tensor data");
    }

    std::string_view buf_;
    std::size_t pos_ = 0;
};

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw CheckpointError("corrupt checkpoint: bad value for " + key);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw CheckpointError("corrupt checkpoint: bad value for " + key);
    return out;
}

} // namespace

std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig& c) {
    return {
        {"variant", std::string(variant_name(c.variant))},
        {"input_features", std::to_string(c.input_features)},
        {"seq_len", std::to_string(c.seq_len)},
        {"lstm_hidden", std::to_string(c.lstm_hidden)},
        {"model_width", std::to_string(c.model_width)},
        {"heads", std::to_string(c.heads)},
        {"head_dim", std::to_string(c.head_dim)},
        {"ffn_width", std::to_string(c.ffn_width)},
        {"blocks", std::to_string(c.blocks)},
        {"seed", std::to_string(c.seed)},
        {"dropout", c.dropout ? format_double(*c.dropout) : "none"},
    };
}

void save_checkpoint(Model& model, const TrainingMeta& meta, const std::filesystem::path& path) {
    auto params = model.parameters();
    const bool has_norm = !meta.norm_mean.empty();
    if (has_norm && meta.norm_mean.size() != meta.norm_std.size()) {
        throw std::invalid_argument("normalisation mean/std length mismatch");
    }
    std::string out;
    out += std::string(kCheckpointMagic) + "\n";
    out += "version = " + std::to_string(kCheckpointVersion) + "\n";
    for (const auto& [k, v] : config_entries(model.config())) out += k + " = " + v + "\n";
    out += "meta.epochs = " + std::to_string(meta.epochs) + "\n";
    out += "meta.final_loss = " + format_double(meta.final_loss) + "\n";
    out += "tensors = " + std::to_string(params.size() + (has_norm ? 2 : 0)) + "\n";
    out += "end\n";
    for (const auto& p : params) put_tensor(out, p.name, *p.tensor);
    if (has_norm) {
        put_tensor(out, "norm.mean", Tensor::vector(meta.norm_mean));
        put_tensor(out, "norm.std", Tensor::vector(meta.norm_std));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();
    Reader r(buf);

    if (r.line() != kCheckpointMagic) throw CheckpointError("corrupt checkpoint: bad magic in " + path.string());
    std::map<std::string, std::string> kv;
    for (;;) {
        const auto l = r.line();
        if (l == "end") break;
        const auto eq = l.find(" = ");
        if (eq == std::string_view::npos) throw CheckpointError("corrupt checkpoint: bad header line '" + std::string(l) + "'");
        kv[std::string(l.substr(0, eq))] = std::string(l.substr(eq + 3));
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw CheckpointError("corrupt checkpoint: missing header key " + key);
        return it->second;
    };
    const auto version = parse_size("version", get("version"));
    if (version != static_cast<std::size_t>(kCheckpointVersion)) {
        throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }

    ModelConfig cfg;
    try {
        cfg.variant = parse_variant(get("variant"));
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    if (expected && *expected != cfg.variant) {
        throw CheckpointError("checkpoint holds variant " + std::string(variant_name(cfg.variant)) + " but " +
                              std::string(variant_name(*expected)) + " was requested");
    }
    cfg.input_features = parse_size("input_features", get("input_features"));
    cfg.seq_len = parse_size("seq_len", get("seq_len"));
    cfg.lstm_hidden = parse_size("lstm_hidden", get("lstm_hidden"));
    cfg.model_width = parse_size("model_width", get("model_width"));
    cfg.heads = parse_size("heads", get("heads"));
    cfg.head_dim = parse_size("head_dim", get("head_dim"));
    cfg.ffn_width = parse_size("ffn_width", get("ffn_width"));
    cfg.blocks = parse_size("blocks", get("blocks"));
    cfg.seed = parse_size("seed", get("seed"));
    if (get("dropout") != "none") cfg.dropout = parse_double("dropout", get("dropout"));

    TrainingMeta meta;
    meta.epochs = parse_size("meta.epochs", get("meta.epochs"));
    meta.final_loss = parse_double("meta.final_loss", get("meta.final_loss"));
    const std::size_t n_tensors = parse_size("tensors", get("tensors"));

    std::map<std::string, Tensor> stored;
    for (std::size_t k = 0; k < n_tensors; ++k) {
        const auto name_len = r.uint(4);
        std::string name(r.bytes(name_len));
        const auto rank = r.uint(4);
        if (rank > 8) throw CheckpointError("corrupt checkpoint: implausible rank for " + name);
        Shape shape;
        for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(r.uint(8));
        const std::size_t n = shape_numel(shape);
        if (n == 0 || n > buf.size()) throw CheckpointError("corrupt checkpoint: bad shape for " + name);
        std::vector<double> data(n);
        for (auto& v : data) v = std::bit_cast<double>(r.uint(8));
        stored.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    if (!r.at_end()) throw CheckpointError("corrupt checkpoint: trailing bytes");

    LoadedCheckpoint out{Model::build(cfg), meta};
    for (auto& p : out.model.parameters()) {
        auto it = stored.find(p.name);
        if (it == stored.end()) throw CheckpointError("checkpoint is missing parameter " + p.name);
        if (it->second.shape() != p.tensor->shape()) {
            throw CheckpointError("parameter " + p.name + " has shape " + shape_str(it->second.shape()) +
                                  ", expected " + shape_str(p.tensor->shape()));
        }
        std::copy(it->second.data().begin(), it->second.data().end(), p.tensor->data().begin());
        stored.erase(it);
    }
    if (auto it = stored.find("norm.mean"); it != stored.end()) {
        out.meta.norm_mean.assign(it->second.data().begin(), it->second.data().end());
        stored.erase(it);
    }
    if (auto it = stored.find("norm.std"); it != stored.end()) {
        out.meta.norm_std.assign(it->second.data().begin(), it->second.data().end());
        stored.erase(it);
    }
    if (!stored.empty()) throw CheckpointError("checkpoint has unexpected tensor " + stored.begin()->first);
    return out;
}

} // namespace occupancy::models
