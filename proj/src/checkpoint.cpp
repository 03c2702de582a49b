#include "srlbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace srlbench::ad {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as native doubles and assume little-endian");

void write_u32(std::ostream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

nlohmann::json read_header(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: bad magic bytes");
    }
    const uint32_t header_len = read_u32(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), header_len);
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    nlohmann::json header = nlohmann::json::parse(header_str);
    const int version = header.at("format_version").get<int>();
    if (version != kFormatVersion) {
        throw std::runtime_error("checkpoint: format version " + std::to_string(version) +
                                 " unsupported (reader supports " + std::to_string(kFormatVersion) + ")");
    }
    return header;
}

}  // namespace

void save_checkpoint(const std::string& path, const nn::NamedParams& params) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& [name, t] : params) {
        plist.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}});
    }
    header["params"] = plist;
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, static_cast<uint32_t>(header_str.size()));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [name, t] : params) {
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

nn::NamedParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    const nlohmann::json header = read_header(in);

    nn::NamedParams out;
    for (const auto& p : header.at("params")) {
        const std::string name = p.at("name").get<std::string>();
        const Shape shape = p.at("shape").get<Shape>();
        if (p.at("dtype").get<std::string>() != "f64") {
            throw std::runtime_error("checkpoint: unsupported dtype for " + name);
        }
        Tensor t = Tensor::zeros(shape);
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.data().size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated blob for " + name);
        out.emplace_back(name, t);
    }
    return out;
}

void load_checkpoint_into(const std::string& path, const nn::NamedParams& params) {
    nn::NamedParams loaded = load_checkpoint(path);
    if (loaded.size() != params.size()) {
        throw std::runtime_error("checkpoint: expected " + std::to_string(params.size()) +
                                 " params, file has " + std::to_string(loaded.size()));
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (loaded[i].first != params[i].first) {
            throw std::runtime_error("checkpoint: parameter name mismatch: " + loaded[i].first +
                                     " vs " + params[i].first);
        }
        if (loaded[i].second.shape() != params[i].second.shape()) {
            throw std::runtime_error("checkpoint: shape mismatch for " + loaded[i].first);
        }
        Tensor dst = params[i].second;
        dst.data() = loaded[i].second.data();
    }
}

}  // namespace srlbench::ad
