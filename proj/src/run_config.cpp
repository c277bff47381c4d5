#include "lld/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace lld {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) {
            return d;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

int64_t parse_int(const std::string& key, const std::string& v) {
    int64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<int64_t> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(parse_int(key, item));
        }
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& v) {
    if (v.empty()) {
        return {};
    }
    fs::path p(v);
    if (p.is_relative() && !base.empty()) {
        p = base / p;
    }
    return fs::absolute(p).lexically_normal();
}

}  // namespace

torch::ScalarType RunConfig::dtype() const {
    if (precision == "float32") {
        return torch::kFloat32;
    }
    if (precision == "float64") {
        return torch::kFloat64;
    }
    throw ConfigError("precision must be float32 or float64, got '" + precision + "'");
}

void RunConfig::apply_environment() {
    if (const char* out = std::getenv("LLD_OUTPUT_DIR"); out && *out) {
        output_dir = fs::absolute(out).lexically_normal();
    }
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    RunConfig cfg;
    cfg.checkpoint_dir = resolve(base_dir, cfg.checkpoint_dir.string());
    cfg.output_dir = resolve(base_dir, cfg.output_dir.string());
    auto& t = cfg.train;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"dataset_root", [&](auto&, auto& v) { cfg.dataset_root = resolve(base_dir, v); }},
        {"checkpoint_dir", [&](auto&, auto& v) { cfg.checkpoint_dir = resolve(base_dir, v); }},
        {"output_dir", [&](auto&, auto& v) { cfg.output_dir = resolve(base_dir, v); }},
        {"precision", [&](auto&, auto& v) { cfg.precision = v; }},
        {"base_width", [&](auto& k, auto& v) { cfg.model.base_width = parse_int(k, v); }},
        {"attention", [&](auto& k, auto& v) { cfg.model.attention = parse_bool(k, v); }},
        {"T", [&](auto& k, auto& v) { cfg.schedule.T = parse_int(k, v); }},
        {"beta_start", [&](auto& k, auto& v) { cfg.schedule.beta_start = parse_double(k, v); }},
        {"beta_end", [&](auto& k, auto& v) { cfg.schedule.beta_end = parse_double(k, v); }},
        {"alpha", [&](auto& k, auto& v) { t.alpha = parse_double(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { t.batch_size = parse_int(k, v); }},
        {"patch_size", [&](auto& k, auto& v) { t.patch_size = parse_int(k, v); }},
        {"stage1_iters", [&](auto& k, auto& v) { t.stage1_iters = parse_int(k, v); }},
        {"stage2_iters", [&](auto& k, auto& v) { t.stage2_iters = parse_int(k, v); }},
        {"lr0", [&](auto& k, auto& v) { t.lr0 = parse_double(k, v); }},
        {"lr_milestones", [&](auto& k, auto& v) { t.lr_milestones = parse_int_list(k, v); }},
        {"lr_factor", [&](auto& k, auto& v) { t.lr_factor = parse_double(k, v); }},
        {"ema_decay", [&](auto& k, auto& v) { t.ema_decay = parse_double(k, v); }},
        {"ema_warmup", [&](auto& k, auto& v) { t.ema_warmup = parse_bool(k, v); }},
        {"adam_beta1", [&](auto& k, auto& v) { t.adam_beta1 = parse_double(k, v); }},
        {"adam_beta2", [&](auto& k, auto& v) { t.adam_beta2 = parse_double(k, v); }},
        {"adam_eps", [&](auto& k, auto& v) { t.adam_eps = parse_double(k, v); }},
        {"grad_clip", [&](auto& k, auto& v) { t.grad_clip = parse_double(k, v); }},
        {"seed", [&](auto& k, auto& v) { t.seed = static_cast<uint64_t>(parse_int(k, v)); }},
        {"use_dgnet", [&](auto& k, auto& v) { t.use_dgnet = parse_bool(k, v); }},
        {"use_color_map", [&](auto& k, auto& v) { t.use_color_map = parse_bool(k, v); }},
        {"hflip", [&](auto& k, auto& v) { t.hflip = parse_bool(k, v); }},
        {"center_data", [&](auto& k, auto& v) { t.center_data = parse_bool(k, v); }},
        {"checkpoint_every", [&](auto& k, auto& v) { t.checkpoint_every = parse_int(k, v); }},
    };

    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        it->second(key, value);
    }

    (void)cfg.dtype();
    try {
        cfg.train.validate();
        NoiseSchedule{cfg.schedule};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.model.base_width < 1) {
        throw ConfigError("base_width must be positive");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), fs::absolute(path).parent_path());
}

std::string to_text(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    const auto& t = c.train;
    out << "dataset_root = " << c.dataset_root.string() << '\n'
        << "checkpoint_dir = " << c.checkpoint_dir.string() << '\n'
        << "output_dir = " << c.output_dir.string() << '\n'
        << "precision = " << c.precision << '\n'
        << "base_width = " << c.model.base_width << '\n'
        << "attention = " << (c.model.attention ? "true" : "false") << '\n'
        << "T = " << c.schedule.T << '\n'
        << "beta_start = " << c.schedule.beta_start << '\n'
        << "beta_end = " << c.schedule.beta_end << '\n'
        << "alpha = " << t.alpha << '\n'
        << "batch_size = " << t.batch_size << '\n'
        << "patch_size = " << t.patch_size << '\n'
        << "stage1_iters = " << t.stage1_iters << '\n'
        << "stage2_iters = " << t.stage2_iters << '\n'
        << "lr0 = " << t.lr0 << '\n'
        << "lr_milestones = ";
    for (size_t i = 0; i < t.lr_milestones.size(); ++i) {
        out << (i ? "," : "") << t.lr_milestones[i];
    }
    out << '\n'
        << "lr_factor = " << t.lr_factor << '\n'
        << "ema_decay = " << t.ema_decay << '\n'
        << "ema_warmup = " << (t.ema_warmup ? "true" : "false") << '\n'
        << "adam_beta1 = " << t.adam_beta1 << '\n'
        << "adam_beta2 = " << t.adam_beta2 << '\n'
        << "adam_eps = " << t.adam_eps << '\n'
        << "grad_clip = " << t.grad_clip << '\n'
        << "seed = " << t.seed << '\n'
        << "use_dgnet = " << (t.use_dgnet ? "true" : "false") << '\n'
        << "use_color_map = " << (t.use_color_map ? "true" : "false") << '\n'
        << "hflip = " << (t.hflip ? "true" : "false") << '\n'
        << "center_data = " << (t.center_data ? "true" : "false") << '\n'
        << "checkpoint_every = " << t.checkpoint_every << '\n';
    return out.str();
}

}  // namespace lld
