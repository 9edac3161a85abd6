#include <algorithm>
#include <filesystem>
#include <fstream>

#include "mpvad/data_io.hpp"
#include "mpvad/rng.hpp"

namespace fs = std::filesystem;

namespace mpvad {

namespace {

// Sub-pixel fixed point for positions and velocities.
constexpr long kFP = 16;

enum ShapeKind { kSquare = 0, kCircle = 1, kTriangle = 2 };  // triangle: anomalies only

struct Shape {
    int kind = kSquare;
    int half = 5;       // half extent in pixels
    long px = 0, py = 0, vx = 0, vy = 0;  // fixed point
    int intensity = 200;
};

struct Segment {
    int begin = 0, end = 0;  // [begin, end)
    std::string kind;
    Shape extra;             // the unseen shape, for "new_shape"
};

bool inside(const Shape& s, int cx, int cy, int i, int j) {
    int dx = j - cx, dy = i - cy;
    switch (s.kind) {
        case kSquare: return std::abs(dx) <= s.half && std::abs(dy) <= s.half;
        case kCircle: return dx * dx + dy * dy <= s.half * s.half;
        case kTriangle: {
            int r = dy + s.half;  // 0 at apex (top), 2*half at base
            return r >= 0 && r <= 2 * s.half && std::abs(dx) * 2 <= r;
        }
    }
    return false;
}

void paint(std::vector<uint8_t>& px, int size, const Shape& s) {
    int cx = static_cast<int>(s.px / kFP), cy = static_cast<int>(s.py / kFP);
    int lo_i = std::max(0, cy - s.half), hi_i = std::min(size - 1, cy + s.half);
    int lo_j = std::max(0, cx - s.half), hi_j = std::min(size - 1, cx + s.half);
    for (int i = lo_i; i <= hi_i; ++i)
        for (int j = lo_j; j <= hi_j; ++j)
            if (inside(s, cx, cy, i, j))
                px[static_cast<size_t>(i) * size + j] = static_cast<uint8_t>(s.intensity);
}

void advance(Shape& s, int size, long mult_num) {
    long lo_x = s.half * kFP, hi_x = (size - 1 - s.half) * kFP;
    long lo_y = lo_x, hi_y = hi_x;
    s.px += s.vx * mult_num;
    s.py += s.vy * mult_num;
    while (s.px < lo_x || s.px > hi_x) {
        if (s.px < lo_x) s.px = 2 * lo_x - s.px;
        if (s.px > hi_x) s.px = 2 * hi_x - s.px;
        s.vx = -s.vx;
    }
    while (s.py < lo_y || s.py > hi_y) {
        if (s.py < lo_y) s.py = 2 * lo_y - s.py;
        if (s.py > hi_y) s.py = 2 * hi_y - s.py;
        s.vy = -s.vy;
    }
}

Shape random_shape(Rng& rng, int size, bool normal_kind) {
    Shape s;
    s.kind = normal_kind ? static_cast<int>(rng.next_int(0, 1)) : kTriangle;
    s.half = static_cast<int>(rng.next_int(std::max(3, size / 16), std::max(4, size / 9)));
    s.px = rng.next_int(s.half, size - 1 - s.half) * kFP;
    s.py = rng.next_int(s.half, size - 1 - s.half) * kFP;
    auto vel = [&rng]() {
        long mag = rng.next_int(12, 40);  // 0.75 .. 2.5 px/frame
        return rng.next_int(0, 1) ? mag : -mag;
    };
    s.vx = vel();
    s.vy = vel();
    s.intensity = static_cast<int>(rng.next_int(140, 250));
    return s;
}

std::vector<Segment> plan_segments(Rng& rng, const SynthConfig& cfg, int clip_index) {
    std::vector<Segment> segs;
    int total = static_cast<int>(cfg.anomaly_rate * cfg.frames_per_clip + 0.5);
    std::vector<std::string> kinds(cfg.anomaly_kinds.begin(), cfg.anomaly_kinds.end());
    if (kinds.empty()) return segs;
    int remaining = total;
    int seg_index = 0;
    const int margin = 12;  // leave the scored prefix and clip tail clean
    while (remaining >= 10) {
        int len = static_cast<int>(rng.next_int(14, 26));
        len = std::min(len, remaining);
        int max_start = cfg.frames_per_clip - len - 4;
        if (max_start <= margin) break;
        bool placed = false;
        for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
            int start = static_cast<int>(rng.next_int(margin, max_start));
            bool clash = false;
            for (const auto& s : segs)
                if (start < s.end + 4 && s.begin < start + len + 4) clash = true;
            if (clash) continue;
            Segment seg;
            seg.begin = start;
            seg.end = start + len;
            seg.kind = kinds[static_cast<size_t>((clip_index * 131 + seg_index) % kinds.size())];
            if (seg.kind == "new_shape") seg.extra = random_shape(rng, cfg.frame_size, false);
            segs.push_back(seg);
            placed = true;
        }
        if (!placed) break;
        remaining -= len;
        ++seg_index;
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& a, const Segment& b) { return a.begin < b.begin; });
    return segs;
}

void write_clip(const SynthConfig& cfg, const std::string& split, int clip_index,
                const fs::path& dir, bool with_anomalies) {
    Rng rng(derive_seed(cfg.seed, "synth/" + split, static_cast<uint64_t>(clip_index)));
    const int size = cfg.frame_size;

    int num_shapes = static_cast<int>(rng.next_int(2, 3));
    std::vector<Shape> shapes;
    for (int i = 0; i < num_shapes; ++i) shapes.push_back(random_shape(rng, size, true));

    std::vector<Segment> segs =
        with_anomalies ? plan_segments(rng, cfg, clip_index) : std::vector<Segment>{};
    std::vector<int> labels(static_cast<size_t>(cfg.frames_per_clip), 0);

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());

    std::vector<uint8_t> px(static_cast<size_t>(size) * size);
    for (int f = 0; f < cfg.frames_per_clip; ++f) {
        const Segment* active = nullptr;
        for (const auto& s : segs)
            if (f >= s.begin && f < s.end) active = &s;

        if (f > 0) {
            bool reverse = active && active->kind == "reverse";
            bool speed = active && active->kind == "speed_jump";
            for (size_t si = 0; si < shapes.size(); ++si) {
                long mult = 1;
                if (reverse) mult = -1;
                if (speed && si == 0) mult = 3;
                advance(shapes[si], size, mult);
            }
        }

        // Static gradient background.
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                px[static_cast<size_t>(i) * size + j] =
                    static_cast<uint8_t>(24 + (i * 20) / size + (j * 8) / size);
        for (const auto& s : shapes) paint(px, size, s);

        if (active) {
            labels[static_cast<size_t>(f)] = 1;
            if (active->kind == "new_shape") {
                Shape extra = active->extra;
                // Deterministic trajectory within the segment.
                for (int step = active->begin; step < f; ++step) advance(extra, size, 1);
                paint(px, size, extra);
            }
        }

        // Per-pixel sensor noise, integer and seed-determined.
        for (auto& v : px) {
            int n = static_cast<int>(rng.next_int(-4, 4));
            v = static_cast<uint8_t>(std::clamp(static_cast<int>(v) + n, 0, 255));
        }

        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.png", f);
        ImageU8 img;
        img.channels = 1;
        img.height = size;
        img.width = size;
        img.pixels = px;
        write_png((dir / name).string(), img);
    }

    if (with_anomalies || split == "test") {
        std::ofstream lf(dir / "labels.txt", std::ios::trunc);
        if (!lf) throw IoError((dir / "labels.txt").string() + ": cannot write labels");
        for (int v : labels) lf << v << "\n";
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (frame_size < 32) throw ConfigError("synth: frame_size must be >= 32");
    if (frames_per_clip < 9) throw ConfigError("synth: frames_per_clip must be >= 9");
    if (num_clips < 1) throw ConfigError("synth: num_clips must be >= 1");
    if (anomaly_rate < 0.0 || anomaly_rate > 0.8)
        throw ConfigError("synth: anomaly_rate must be in [0, 0.8]");
    for (const auto& k : anomaly_kinds)
        if (k != "speed_jump" && k != "new_shape" && k != "reverse")
            throw ConfigError("synth: unknown anomaly kind '" + k + "'");
    if (root.empty()) throw ConfigError("synth: output root path required");
}

DatasetManifest generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    fs::path root(cfg.root);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError(cfg.root + ": " + ec.message());

    DatasetManifest m;
    m.root = cfg.root;
    m.frame_size = cfg.frame_size;
    m.channels = 1;

    const int test_clips = std::max(1, cfg.num_clips / 2);
    for (int i = 0; i < cfg.num_clips; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "train/clip_%03d", i);
        write_clip(cfg, "train", i, root / id, false);
        m.train_clips.emplace_back(id);
    }
    for (int i = 0; i < test_clips; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "test/clip_%03d", i);
        write_clip(cfg, "test", i, root / id, true);
        m.test_clips.emplace_back(id);
    }
    save_manifest(m, (root / "manifest.json").string());
    return m;
}

}  // namespace mpvad
