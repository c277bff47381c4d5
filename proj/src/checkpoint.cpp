#include "lld/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <vector>

#include "lld/hash.hpp"

namespace fs = std::filesystem;

namespace lld {

namespace {

std::string dtype_name(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32:
            return "float32";
        case torch::kFloat64:
            return "float64";
        default:
            throw std::runtime_error("checkpoint: unsupported dtype " + std::string(c10::toString(t)));
    }
}

torch::ScalarType dtype_from(const std::string& name) {
    if (name == "float32") {
        return torch::kFloat32;
    }
    if (name == "float64") {
        return torch::kFloat64;
    }
    throw std::runtime_error("checkpoint: unknown dtype '" + name + "'");
}

void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) {
        throw std::runtime_error("checkpoint: truncated file");
    }
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

nlohmann::json read_header(std::istream& in, const fs::path& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    const auto len = read_u64(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) {
        throw std::runtime_error("checkpoint: truncated header in " + path.string());
    }
    auto header = nlohmann::json::parse(text);
    if (header.value("format", "") != "lldiffusion-checkpoint") {
        throw std::runtime_error("checkpoint: unexpected format tag in " + path.string());
    }
    const auto version = header.at("version").get<uint32_t>();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
    }
    return header;
}

}  // namespace

void save_checkpoint(const fs::path& path, const TrainState& state, const nlohmann::json& extra) {
    NamedTensors tensors = state.nets.named_parameters();
    for (auto& p : prefixed("ema.denoiser.", *state.ema)) {
        tensors.push_back(std::move(p));
    }
    for (const auto& p : state.adam_state) {
        tensors.push_back(p);
    }

    nlohmann::json table = nlohmann::json::array();
    std::vector<torch::Tensor> payload;
    uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        auto c = t.detach().cpu().contiguous();
        table.push_back({{"name", name},
                         {"dtype", dtype_name(c.scalar_type())},
                         {"shape", c.sizes().vec()},
                         {"offset", offset},
                         {"nbytes", c.nbytes()}});
        offset += c.nbytes();
        payload.push_back(std::move(c));
    }

    nlohmann::json header = {
        {"format", "lldiffusion-checkpoint"},
        {"version", kCheckpointVersion},
        {"stage", state.stage},
        {"iteration", state.iteration},
        {"stage_start", state.stage_start},
        {"adam_steps", state.adam_steps},
        {"use_color_map", state.use_color_map},
        {"center_data", state.center_data},
        {"schedule",
         {{"T", state.schedule.T}, {"beta_start", state.schedule.beta_start}, {"beta_end", state.schedule.beta_end}}},
        {"model", {{"base_width", state.nets.config.base_width}, {"attention", state.nets.config.attention}}},
        {"dtype", dtype_name(state.nets.dtype())},
        {"extra", extra},
        {"tensors", table},
    };
    const auto text = header.dump();

    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(kCheckpointMagic, 8);
        write_u64(out, text.size());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& c : payload) {
            out.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.nbytes()));
        }
        if (!out) {
            throw std::runtime_error("failed writing checkpoint " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

nlohmann::json read_checkpoint_header(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint " + path.string());
    }
    return read_header(in, path);
}

TrainState load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint " + path.string());
    }
    const auto header = read_header(in, path);
    std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    NamedTensors tensors;
    for (const auto& e : header.at("tensors")) {
        const auto offset = e.at("offset").get<uint64_t>();
        const auto nbytes = e.at("nbytes").get<uint64_t>();
        if (offset + nbytes > blob.size()) {
            throw std::runtime_error("checkpoint: tensor '" + e.at("name").get<std::string>() +
                                     "' extends past the end of " + path.string());
        }
        auto shape = e.at("shape").get<std::vector<int64_t>>();
        auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(e.at("dtype").get<std::string>())));
        if (t.nbytes() != nbytes) {
            throw std::runtime_error("checkpoint: size mismatch for tensor '" + e.at("name").get<std::string>() + "'");
        }
        std::memcpy(t.data_ptr(), blob.data() + offset, nbytes);
        tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }

    ModelConfig model;
    model.base_width = header.at("model").at("base_width").get<int64_t>();
    model.attention = header.at("model").at("attention").get<bool>();
    ScheduleConfig schedule;
    schedule.T = header.at("schedule").at("T").get<int64_t>();
    schedule.beta_start = header.at("schedule").at("beta_start").get<double>();
    schedule.beta_end = header.at("schedule").at("beta_end").get<double>();
    const auto dtype = dtype_from(header.at("dtype").get<std::string>());

    TrainState state = TrainState::initialize(model, schedule, 0, dtype);
    assign_parameters(*state.nets.encoder, "encoder.", tensors);
    assign_parameters(*state.nets.dgnet, "dgnet.", tensors);
    assign_parameters(*state.nets.denoiser, "denoiser.", tensors);
    assign_parameters(*state.ema, "ema.denoiser.", tensors);
    state.stage = header.at("stage").get<int>();
    state.iteration = header.at("iteration").get<int64_t>();
    state.stage_start = header.at("stage_start").get<int64_t>();
    state.adam_steps = header.at("adam_steps").get<int64_t>();
    state.use_color_map = header.at("use_color_map").get<bool>();
    state.center_data = header.at("center_data").get<bool>();
    for (auto& [name, t] : tensors) {
        if (name.rfind("adam.", 0) == 0) {
            state.adam_state.emplace_back(name, t);
        }
    }
    if (state.stage == 2) {
        freeze(state.nets.encoder);
        for (auto& p : state.nets.dgnet->parameters()) {
            p.set_requires_grad(false);
        }
    }
    return state;
}

std::string checkpoint_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex64(fnv1a64(std::as_bytes(std::span(bytes.data(), bytes.size()))));
}

}  // namespace lld
