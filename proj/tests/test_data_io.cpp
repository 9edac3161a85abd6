#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mpvad/data_io.hpp"

using namespace mpvad;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "mpvad_data_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

SynthConfig micro_config(const std::string& root) {
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.num_clips = 4;
    cfg.frames_per_clip = 40;
    cfg.frame_size = 32;
    cfg.root = root;
    return cfg;
}

VideoClip make_clip(int frames, int size = 16) {
    VideoClip clip;
    clip.id = "mem";
    for (int t = 0; t < frames; ++t) clip.frames.emplace_back(std::vector<int>{1, size, size});
    return clip;
}

}  // namespace

TEST_CASE("window counting follows max(0, T - P) and the stride rule") {
    VideoClip c10 = make_clip(10);
    auto w = windows(c10, 8, 1);
    REQUIRE(w.size() == 2);
    CHECK(w[0].target_index == 8);
    CHECK(w[1].target_index == 9);

    CHECK(windows(make_clip(8), 8, 1).empty());

    VideoClip c12 = make_clip(12);
    auto w2 = windows(c12, 4, 4);
    REQUIRE(w2.size() == 2);
    CHECK(w2[0].target_index == 4);
    CHECK(w2[1].target_index == 8);

    for (int t = 9; t <= 30; ++t)
        CHECK(windows(make_clip(t), 8, 1).size() == static_cast<size_t>(t - 8));

    CHECK_THROWS_AS(windows(c10, 8, 0), ValidationError);
}

TEST_CASE("sliding windows expose the right frames") {
    VideoClip clip = make_clip(10);
    for (int t = 0; t < 10; ++t) clip.frames[static_cast<size_t>(t)].fill(static_cast<float>(t));
    auto w = windows(clip, 3, 1);
    REQUIRE(!w.empty());
    const SlidingWindow& first = w.front();
    CHECK(first.target_index == 3);
    CHECK(first.target()[0] == 3.0f);
    CHECK(first.input(0)[0] == 0.0f);
    CHECK(first.input(2)[0] == 2.0f);
}

TEST_CASE("synthetic generation is byte-identical across runs") {
    auto d1 = fresh_dir("det1");
    auto d2 = fresh_dir("det2");
    generate_synthetic(micro_config(d1.string()));
    generate_synthetic(micro_config(d2.string()));

    size_t files = 0;
    for (auto& e : fs::recursive_directory_iterator(d1)) {
        if (!e.is_regular_file()) continue;
        ++files;
        fs::path rel = fs::relative(e.path(), d1);
        CHECK(fs::exists(d2 / rel));
        CHECK(slurp(e.path()) == slurp(d2 / rel));
    }
    CHECK(files > 4 * 40);  // frames + labels + manifest
}

TEST_CASE("synthetic split layout and labels") {
    auto dir = fresh_dir("layout");
    SynthConfig cfg = micro_config(dir.string());
    DatasetManifest m = generate_synthetic(cfg);
    CHECK(m.train_clips.size() == 4);
    CHECK(m.test_clips.size() == 2);
    CHECK(m.channels == 1);

    // Labels only in the test split.
    for (const auto& id : m.train_clips) CHECK(!fs::exists(fs::path(m.root) / id / "labels.txt"));
    int total_anomalous = 0;
    for (const auto& id : m.test_clips) {
        VideoClip clip = load_clip(m, id);
        REQUIRE(clip.labels.has_value());
        CHECK(clip.labels->size() == static_cast<size_t>(cfg.frames_per_clip));
        for (int y : *clip.labels) total_anomalous += y;
    }
    CHECK(total_anomalous > 0);

    // Train clips load without labels, frames normalized into [-1,1].
    VideoClip train0 = load_clip(m, m.train_clips[0]);
    CHECK(!train0.labels.has_value());
    CHECK(train0.length() == cfg.frames_per_clip);
    for (const auto& f : train0.frames) {
        CHECK(f.shape == std::vector<int>{1, 32, 32});
        for (float v : f.data) {
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("anomaly_rate zero gives all-zero test labels") {
    auto dir = fresh_dir("clean");
    SynthConfig cfg = micro_config(dir.string());
    cfg.anomaly_rate = 0.0;
    DatasetManifest m = generate_synthetic(cfg);
    for (const auto& id : m.test_clips) {
        VideoClip clip = load_clip(m, id);
        REQUIRE(clip.labels.has_value());
        for (int y : *clip.labels) CHECK(y == 0);
    }
}

TEST_CASE("load_clip error paths") {
    auto dir = fresh_dir("errors");
    SynthConfig cfg = micro_config(dir.string());
    cfg.num_clips = 2;
    DatasetManifest m = generate_synthetic(cfg);

    CHECK_THROWS_AS(load_clip(m, "train/clip_xyz"), NotFoundError);

    // Corrupt frame names the file.
    fs::path frame = fs::path(m.root) / m.train_clips[0] / "frame_00000.png";
    std::ofstream(frame, std::ios::trunc) << "garbage";
    try {
        load_clip(m, m.train_clips[0]);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(std::string(e.what()).find("frame_00000.png") != std::string::npos);
    }

    // Label count mismatch.
    fs::path labels = fs::path(m.root) / m.test_clips[0] / "labels.txt";
    std::ofstream(labels, std::ios::app) << "0\n";
    CHECK_THROWS_AS(load_clip(m, m.test_clips[0]), ValidationError);
}

TEST_CASE("load_clip resizes and keeps the endpoint mapping") {
    auto dir = fresh_dir("resize");
    fs::create_directories(dir / "train/clip_000");
    ImageU8 img;
    img.channels = 1;
    img.height = 10;
    img.width = 8;
    img.pixels.assign(80, 0);
    for (size_t i = 0; i < 40; ++i) img.pixels[i] = 255;  // top half white
    write_png((dir / "train/clip_000/frame_00000.png").string(), img);
    write_png((dir / "train/clip_000/frame_00001.png").string(), img);

    DatasetManifest m;
    m.root = dir.string();
    m.frame_size = 16;
    m.channels = 1;
    m.train_clips = {"train/clip_000"};
    VideoClip clip = load_clip(m, "train/clip_000");
    CHECK(clip.length() == 2);
    CHECK(clip.frames[0].shape == std::vector<int>{1, 16, 16});
    // 255 -> +1, 0 -> -1 away from the interpolated seam.
    CHECK(clip.frames[0].at(0, 0, 0) == doctest::Approx(1.0f));
    CHECK(clip.frames[0].at(0, 15, 15) == doctest::Approx(-1.0f));
}

TEST_CASE("manifest json round trip") {
    auto dir = fresh_dir("manifest");
    DatasetManifest m;
    m.root = dir.string();
    m.frame_size = 48;
    m.channels = 3;
    m.train_clips = {"train/a", "train/b"};
    m.test_clips = {"test/a"};
    save_manifest(m, (dir / "manifest.json").string());
    DatasetManifest back = load_manifest((dir / "manifest.json").string());
    CHECK(back.frame_size == 48);
    CHECK(back.channels == 3);
    CHECK(back.train_clips == m.train_clips);
    CHECK(back.test_clips == m.test_clips);
    CHECK(back.root == dir.string());

    CHECK_THROWS_AS(load_manifest((dir / "nope.json").string()), NotFoundError);
}

TEST_CASE("synth config validation") {
    SynthConfig cfg;
    cfg.root = "/tmp/x";
    cfg.frame_size = 16;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    SynthConfig cfg2;
    cfg2.root = "/tmp/x";
    cfg2.anomaly_kinds = {"teleport"};
    CHECK_THROWS_AS(cfg2.validate(), ConfigError);

    SynthConfig cfg3;
    CHECK_THROWS_AS(cfg3.validate(), ConfigError);  // missing root
}
