#include "srlbench/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "srlbench/hash.hpp"
#include "srlbench/json_io.hpp"

namespace srlbench::data {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'D', 'A', 'T', 'A', '\0'};
constexpr uint32_t kFormatVersion = 1;

struct Writer {
    std::string buf;
    void bytes(const void* p, size_t n) { buf.append(static_cast<const char*>(p), n); }
    void u8(uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void i8(int8_t v) { buf.push_back(static_cast<char>(v)); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

struct Reader {
    const uint8_t* p;
    size_t len;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > len) throw TruncatedError("dataset: file truncated (needed " +
                                                std::to_string(n) + " bytes at offset " +
                                                std::to_string(pos) + ")");
    }
    void bytes(void* out, size_t n) {
        need(n);
        std::memcpy(out, p + pos, n);
        pos += n;
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    int8_t i8() { return static_cast<int8_t>(u8()); }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

void write_record(Writer& w, const TransitionRecord& r) {
    Writer body;
    body.u32(static_cast<uint32_t>(r.episode_id));
    body.u32(static_cast<uint32_t>(r.step_index));
    body.u8(static_cast<uint8_t>(r.action));
    body.i8(static_cast<int8_t>(r.reward));
    body.u8(static_cast<uint8_t>(r.gt_state.size()));
    body.u8(0);
    for (double v : r.gt_state) body.f64(v);
    for (double v : r.next_gt_state) body.f64(v);
    body.u32(static_cast<uint32_t>(r.obs.size()));
    body.bytes(r.obs.data(), r.obs.size());
    body.u32(static_cast<uint32_t>(r.next_obs.size()));
    body.bytes(r.next_obs.data(), r.next_obs.size());

    w.u32(static_cast<uint32_t>(body.buf.size()));
    w.bytes(body.buf.data(), body.buf.size());
}

TransitionRecord read_record(Reader& rd) {
    const uint32_t rec_len = rd.u32();
    rd.need(rec_len);
    const size_t end = rd.pos + rec_len;

    TransitionRecord r;
    r.episode_id = static_cast<int>(rd.u32());
    r.step_index = static_cast<int>(rd.u32());
    r.action = rd.u8();
    r.reward = rd.i8();
    const int gt_dim = rd.u8();
    rd.u8();  // pad
    r.gt_state.resize(gt_dim);
    for (auto& v : r.gt_state) v = rd.f64();
    r.next_gt_state.resize(gt_dim);
    for (auto& v : r.next_gt_state) v = rd.f64();
    const uint32_t obs_len = rd.u32();
    r.obs.resize(obs_len);
    rd.bytes(r.obs.data(), obs_len);
    const uint32_t next_len = rd.u32();
    r.next_obs.resize(next_len);
    rd.bytes(r.next_obs.data(), next_len);
    if (rd.pos != end) throw FormatError("dataset: record length mismatch");
    return r;
}

}  // namespace

Dataset collect(const env::NavConfig& cfg, int64_t n_samples, uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("collect: n_samples must be at least 1");
    env::NavConfig ecfg = cfg;
    ecfg.render_observations = true;
    env::NavEnv e(ecfg);
    Rng action_rng(mix_seed(seed, 0xAC7104));

    Dataset ds;
    ds.header.env_config = ecfg;
    ds.header.sample_count = n_samples;
    ds.header.collection_seed = seed;
    ds.records.reserve(static_cast<size_t>(n_samples));

    int episode = 0;
    while (static_cast<int64_t>(ds.records.size()) < n_samples) {
        env::StepResult prev = e.reset(mix_seed(seed, static_cast<uint64_t>(episode)));
        int step_index = 0;
        while (!prev.done && static_cast<int64_t>(ds.records.size()) < n_samples) {
            const int action = action_rng.uniform_int(env::NavEnv::kNumActions);
            env::StepResult next = e.step(action);
            TransitionRecord r;
            r.obs = prev.observation;
            r.next_obs = next.observation;
            r.action = action;
            r.reward = next.reward;
            r.episode_id = episode;
            r.step_index = step_index;
            r.gt_state = prev.gt_state;
            r.next_gt_state = next.gt_state;
            ds.records.push_back(std::move(r));
            prev = std::move(next);
            ++step_index;
        }
        ++episode;
    }
    ds.split_marker = static_cast<int64_t>(ds.records.size());
    return ds;
}

void save(const Dataset& dataset, const std::string& path) {
    Writer w;
    w.bytes(kMagic, 8);
    w.u32(kFormatVersion);

    nlohmann::json header;
    header["format_version"] = dataset.header.format_version;
    header["env"] = to_json(dataset.header.env_config);
    header["sample_count"] = dataset.header.sample_count;
    header["collection_seed"] = dataset.header.collection_seed;
    header["split_marker"] = dataset.split_marker;
    const std::string hs = header.dump();
    w.u32(static_cast<uint32_t>(hs.size()));
    w.bytes(hs.data(), hs.size());

    w.u64(dataset.records.size());
    for (const auto& r : dataset.records) write_record(w, r);

    const uint32_t crc = crc32(reinterpret_cast<const uint8_t*>(w.buf.data()), w.buf.size());
    w.u32(crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw std::runtime_error("dataset: write failed: " + path);
}

Dataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset: cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();

    if (buf.size() < 8 + 4 + 4 + 8 + 4) throw TruncatedError("dataset: file too short");
    Reader rd{reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 4};

    char magic[8];
    rd.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("dataset: bad magic bytes");
    const uint32_t version = rd.u32();
    if (version != kFormatVersion) {
        throw VersionError("dataset: format version " + std::to_string(version) +
                           " unsupported (reader supports " + std::to_string(kFormatVersion) + ")");
    }

    const uint32_t header_len = rd.u32();
    rd.need(header_len);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(rd.pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset: malformed header JSON: ") + e.what());
    }
    rd.pos += header_len;

    Dataset ds;
    ds.header.format_version = header.at("format_version").get<int>();
    ds.header.env_config = nav_config_from_json(header.at("env"));
    ds.header.sample_count = header.at("sample_count").get<int64_t>();
    ds.header.collection_seed = header.at("collection_seed").get<uint64_t>();
    ds.split_marker = header.at("split_marker").get<int64_t>();

    const uint64_t count = rd.u64();
    ds.records.reserve(count);
    for (uint64_t i = 0; i < count; ++i) ds.records.push_back(read_record(rd));
    if (rd.pos != rd.len) throw FormatError("dataset: trailing bytes before checksum");

    const uint32_t stored = static_cast<uint32_t>(static_cast<uint8_t>(buf[buf.size() - 4])) |
                            (static_cast<uint32_t>(static_cast<uint8_t>(buf[buf.size() - 3])) << 8) |
                            (static_cast<uint32_t>(static_cast<uint8_t>(buf[buf.size() - 2])) << 16) |
                            (static_cast<uint32_t>(static_cast<uint8_t>(buf[buf.size() - 1])) << 24);
    const uint32_t actual = crc32(reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 4);
    if (stored != actual) throw ChecksumError("dataset: CRC32 mismatch");

    if (ds.split_marker < 0 || ds.split_marker > static_cast<int64_t>(ds.records.size())) {
        throw FormatError("dataset: split marker out of range");
    }
    return ds;
}

void split_by_episode(Dataset& dataset, double val_fraction) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("split: val_fraction must be in (0, 1)");
    }
    const int64_t n = static_cast<int64_t>(dataset.records.size());
    if (n < 2) throw std::invalid_argument("split: dataset too small to split");

    // interior episode boundaries
    std::vector<int64_t> boundaries;
    for (int64_t i = 1; i < n; ++i) {
        if (dataset.records[i].episode_id != dataset.records[i - 1].episode_id) boundaries.push_back(i);
    }
    if (boundaries.empty()) {
        throw std::invalid_argument("split: dataset has a single episode; cannot produce both sides");
    }
    const int64_t target_train = n - std::llround(val_fraction * static_cast<double>(n));
    int64_t best = boundaries.front();
    for (int64_t b : boundaries) {
        if (std::llabs(b - target_train) < std::llabs(best - target_train)) best = b;
    }
    dataset.split_marker = best;
}

}  // namespace srlbench::data
