#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "srlbench/dataset.hpp"
#include "srlbench/norm.hpp"

using namespace srlbench;
namespace fs = std::filesystem;

namespace {

env::NavConfig small_cfg() {
    env::NavConfig cfg;
    cfg.max_steps = 25;
    cfg.seed = 5;
    return cfg;
}

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

bool same_records(const data::Dataset& a, const data::Dataset& b) {
    if (a.records.size() != b.records.size() || a.split_marker != b.split_marker) return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.obs != y.obs || x.next_obs != y.next_obs || x.action != y.action ||
            x.reward != y.reward || x.episode_id != y.episode_id || x.step_index != y.step_index ||
            x.gt_state != y.gt_state || x.next_gt_state != y.next_gt_state) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("collect is deterministic and well-formed") {
    const auto cfg = small_cfg();
    const data::Dataset a = data::collect(cfg, 100, 7);
    const data::Dataset b = data::collect(cfg, 100, 7);
    CHECK(same_records(a, b));
    CHECK(a.records.size() == 100);

    std::set<std::pair<int, int>> keys;
    for (const auto& r : a.records) {
        CHECK(r.action >= 0);
        CHECK(r.action < 4);
        CHECK((r.reward == -1 || r.reward == 0 || r.reward == 1));
        CHECK(keys.insert({r.episode_id, r.step_index}).second);  // unique
        for (double v : r.gt_state) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    // consecutive within episodes
    for (size_t i = 1; i < a.records.size(); ++i) {
        if (a.records[i].episode_id == a.records[i - 1].episode_id) {
            CHECK(a.records[i].step_index == a.records[i - 1].step_index + 1);
            CHECK(a.records[i].obs == a.records[i - 1].next_obs);
        } else {
            CHECK(a.records[i].step_index == 0);
        }
    }
}

TEST_CASE("random policy action frequencies stay within 3 sigma") {
    const auto cfg = small_cfg();
    const data::Dataset ds = data::collect(cfg, 10000, 11);
    double counts[4] = {0, 0, 0, 0};
    for (const auto& r : ds.records) counts[r.action] += 1.0;
    const double expect = 2500.0;
    const double sigma = std::sqrt(10000.0 * 0.25 * 0.75);
    for (double c : counts) CHECK(std::abs(c - expect) <= 3.0 * sigma);
}

TEST_CASE("save/load round-trips bitwise") {
    const auto cfg = small_cfg();
    data::Dataset ds = data::collect(cfg, 100, 3);
    data::split_by_episode(ds, 0.25);
    const std::string path = temp_path("srlbench_ds_roundtrip.bin");
    data::save(ds, path);
    const data::Dataset loaded = data::load(path);
    CHECK(same_records(ds, loaded));
    CHECK(loaded.header.sample_count == ds.header.sample_count);
    CHECK(loaded.header.collection_seed == ds.header.collection_seed);

    // save(load(x)) is byte-identical
    const std::string path2 = temp_path("srlbench_ds_roundtrip2.bin");
    data::save(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("corrupt files raise distinct errors") {
    const auto cfg = small_cfg();
    data::Dataset ds = data::collect(cfg, 30, 3);
    const std::string path = temp_path("srlbench_ds_corrupt.bin");
    data::save(ds, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();

    SUBCASE("bad magic -> format error") {
        std::string corrupted = bytes;
        corrupted[0] = 'X';
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << corrupted;
        out.close();
        CHECK_THROWS_AS(data::load(path), data::FormatError);
    }
    SUBCASE("newer version -> version error naming both versions") {
        std::string corrupted = bytes;
        corrupted[8] = 9;  // version field
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << corrupted;
        out.close();
        CHECK_THROWS_WITH_AS(data::load(path), doctest::Contains("9"), data::VersionError);
        try {
            data::load(path);
        } catch (const data::VersionError& e) {
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }
    SUBCASE("truncated file -> truncation error") {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << bytes.substr(0, bytes.size() / 2);
        out.close();
        CHECK_THROWS_AS(data::load(path), data::TruncatedError);
    }
    SUBCASE("payload bit flip -> checksum error") {
        std::string corrupted = bytes;
        corrupted[bytes.size() / 2] ^= 0x10;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << corrupted;
        out.close();
        CHECK_THROWS_AS(data::load(path), data::ChecksumError);
    }
    fs::remove(path);
}

TEST_CASE("whole-episode split") {
    env::NavConfig cfg = small_cfg();
    cfg.max_steps = 10;
    data::Dataset ds = data::collect(cfg, 200, 9);  // 20 equal episodes
    data::split_by_episode(ds, 0.1);
    CHECK(ds.split_marker == 180);  // 2 of 20 episodes in val
    CHECK(ds.train().size() + ds.val().size() == ds.records.size());

    std::set<int> train_eps, val_eps;
    for (const auto& r : ds.train()) train_eps.insert(r.episode_id);
    for (const auto& r : ds.val()) val_eps.insert(r.episode_id);
    for (int e : val_eps) CHECK(train_eps.count(e) == 0);

    SUBCASE("single-episode dataset cannot split") {
        data::Dataset one = data::collect(cfg, 10, 2);
        CHECK_THROWS_AS(data::split_by_episode(one, 0.5), std::invalid_argument);
    }
    SUBCASE("val fraction bounds") {
        CHECK_THROWS_AS(data::split_by_episode(ds, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(data::split_by_episode(ds, 1.0), std::invalid_argument);
    }
}

TEST_CASE("streaming normalization matches two-pass statistics") {
    Rng rng(13);
    const int n = 100000, d = 4;
    std::vector<std::vector<double>> samples;
    data::NormStats stats(data::NormMode::running_meanstd, d);
    for (int i = 0; i < n; ++i) {
        std::vector<double> s(d);
        for (auto& v : s) v = rng.normal() * 3.0 + 7.0;
        stats.update(std::span<const double>(s));
        samples.push_back(std::move(s));
    }
    for (int k = 0; k < d; ++k) {
        double mean = 0.0;
        for (const auto& s : samples) mean += s[static_cast<size_t>(k)];
        mean /= n;
        double var = 0.0;
        for (const auto& s : samples) {
            var += (s[static_cast<size_t>(k)] - mean) * (s[static_cast<size_t>(k)] - mean);
        }
        var /= n;
        CHECK(stats.mean[static_cast<size_t>(k)] == doctest::Approx(mean).epsilon(1e-10));
        CHECK(stats.variance(k) == doctest::Approx(var).epsilon(1e-10));
    }
}

TEST_CASE("normalization examples") {
    SUBCASE("constant stream normalizes to zero") {
        data::NormStats stats(data::NormMode::running_meanstd, 1);
        for (int i = 0; i < 10; ++i) {
            const std::vector<double> s = {42.0};
            stats.update(std::span<const double>(s));
        }
        CHECK(stats.mean[0] == 42.0);
        std::vector<double> out(1);
        const std::vector<double> x = {42.0};
        stats.normalize(std::span<const double>(x), std::span<double>(out));
        CHECK(out[0] == 0.0);
    }
    SUBCASE("1,2,3,4 stream") {
        data::NormStats stats(data::NormMode::running_meanstd, 1);
        for (double v : {1.0, 2.0, 3.0, 4.0}) {
            const std::vector<double> s = {v};
            stats.update(std::span<const double>(s));
        }
        CHECK(stats.mean[0] == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(stats.variance(0) == doctest::Approx(1.25).epsilon(1e-15));
    }
    SUBCASE("pixel mode maps 255 to 1") {
        data::NormStats stats(data::NormMode::pixel_scale, 0);
        env::Image img = {255, 255, 255};
        const std::vector<double> out = stats.normalize_image(img);
        CHECK(out == std::vector<double>{1.0, 1.0, 1.0});
    }
}
