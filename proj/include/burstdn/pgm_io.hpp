#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "burstdn/burst.hpp"
#include "burstdn/error.hpp"
#include "burstdn/image.hpp"

namespace burstdn {

// 16-bit binary PGM ("P5"), big-endian samples per the format. Loads 8-bit
// files too (maxval < 256 means one byte per sample).
struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 65535;
    std::vector<uint16_t> samples;
};

namespace detail {

struct PgmReader {
    std::vector<char> bytes;
    size_t pos = 0;
    std::string path;

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path + ": " + what + " at byte " + std::to_string(pos));
    }

    int peek() const { return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos]) : -1; }

    void skip_space_and_comments() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(peek()))
                ++pos;
            if (peek() == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
                continue;
            }
            return;
        }
    }

    long read_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(peek()))
            fail("expected integer");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(peek())) {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
        }
        return v;
    }
};

} // namespace detail

inline PgmImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path + ": cannot open file");
    detail::PgmReader r;
    r.path = path;
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    if (r.bytes.size() < 2)
        r.fail("truncated header");
    if (r.bytes[0] != 'P' || r.bytes[1] != '5') {
        const std::string magic(r.bytes.data(), std::min<size_t>(2, r.bytes.size()));
        throw FormatError(path + ": bad magic '" + magic + "' (expected P5)");
    }
    r.pos = 2;

    PgmImage img;
    img.width = static_cast<int>(r.read_int());
    img.height = static_cast<int>(r.read_int());
    img.maxval = static_cast<int>(r.read_int());
    if (img.width < 1 || img.height < 1)
        r.fail("bad dimensions");
    if (img.maxval < 1 || img.maxval > 65535)
        r.fail("maxval out of range (1..65535)");
    if (r.pos >= r.bytes.size() || !std::isspace(r.peek()))
        r.fail("expected whitespace before pixel data");
    ++r.pos;

    const size_t count = static_cast<size_t>(img.width) * img.height;
    const int bytes_per = img.maxval < 256 ? 1 : 2;
    if (r.bytes.size() - r.pos < count * bytes_per) {
        r.pos = r.bytes.size();
        r.fail("truncated pixel data");
    }
    img.samples.resize(count);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(r.bytes.data()) + r.pos;
    if (bytes_per == 1) {
        for (size_t i = 0; i < count; ++i)
            img.samples[i] = p[i];
    } else {
        for (size_t i = 0; i < count; ++i)
            img.samples[i] = static_cast<uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    }
    return img;
}

inline void save_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError(path + ": cannot open for writing");
    out << "P5\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
    if (img.maxval < 256) {
        for (uint16_t s : img.samples)
            out.put(static_cast<char>(s & 0xFF));
    } else {
        for (uint16_t s : img.samples) {
            out.put(static_cast<char>(s >> 8));
            out.put(static_cast<char>(s & 0xFF));
        }
    }
    if (!out)
        throw FormatError(path + ": write failed");
}

// Metadata sidecar stored as burst.json next to the frames.
struct BurstMeta {
    double sigma_s = 0.0;
    double sigma_r = 0.0;
    double gain = 1.0;
    double black_level = 0.0;
    double white_level = 65535.0;
    std::string layout = "gray"; // gray | rggb
    int bit_depth = 16;
    int n_frames = 1;

    NoiseParams noise_params() const { return {sigma_s, sigma_r}; }
    BayerLayout bayer_layout() const {
        if (layout == "gray") return BayerLayout::Gray;
        if (layout == "rggb") return BayerLayout::BayerRGGB;
        throw FormatError("burst metadata: unknown layout '" + layout + "'");
    }
    int maxval() const { return (1 << bit_depth) - 1; }
};

inline BurstMeta parse_burst_meta(const nlohmann::json& j) {
    BurstMeta m;
    for (const char* key : {"sigma_s", "sigma_r", "gain", "black_level", "white_level",
                            "layout", "bit_depth"})
        if (!j.contains(key))
            throw FormatError(std::string("burst metadata: missing key '") + key + "'");
    m.sigma_s = j.at("sigma_s").get<double>();
    m.sigma_r = j.at("sigma_r").get<double>();
    m.gain = j.at("gain").get<double>();
    m.black_level = j.at("black_level").get<double>();
    m.white_level = j.at("white_level").get<double>();
    m.layout = j.at("layout").get<std::string>();
    m.bit_depth = j.at("bit_depth").get<int>();
    m.n_frames = j.value("n_frames", 1);
    if (m.bit_depth < 1 || m.bit_depth > 16)
        throw FormatError("burst metadata: bit_depth out of range");
    if (!(m.white_level > m.black_level))
        throw FormatError("burst metadata: white_level must exceed black_level");
    return m;
}

inline nlohmann::json burst_meta_json(const BurstMeta& m) {
    return nlohmann::json{{"sigma_s", m.sigma_s},       {"sigma_r", m.sigma_r},
                          {"gain", m.gain},             {"black_level", m.black_level},
                          {"white_level", m.white_level}, {"layout", m.layout},
                          {"bit_depth", m.bit_depth},   {"n_frames", m.n_frames}};
}

// raw-linear value = (sample - black) / (white - black); saving quantizes and
// clamps to the stored bit depth, so in-range values round-trip exactly.
inline ImagePlane decode_plane(const PgmImage& img, const BurstMeta& meta) {
    ImagePlane out(img.width, img.height, Domain::RawLinear);
    const double inv = 1.0 / (meta.white_level - meta.black_level);
    for (size_t i = 0; i < out.size(); ++i)
        out.samples[i] = static_cast<float>((img.samples[i] - meta.black_level) * inv);
    return out;
}

inline PgmImage encode_plane(const ImagePlane& plane, const BurstMeta& meta) {
    PgmImage img;
    img.width = plane.width;
    img.height = plane.height;
    img.maxval = meta.maxval();
    img.samples.resize(plane.size());
    const double range = meta.white_level - meta.black_level;
    for (size_t i = 0; i < plane.size(); ++i) {
        const double s = std::lround(plane.samples[i] * range + meta.black_level);
        img.samples[i] = static_cast<uint16_t>(std::clamp(s, 0.0, static_cast<double>(img.maxval)));
    }
    return img;
}

namespace detail {

inline std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d.pgm", index);
    return buf;
}

} // namespace detail

// Burst directory: burst.json + frame_000.pgm (reference) .. frame_NNN.pgm.
inline void save_burst(const std::string& dir, const Burst& burst, BurstMeta meta) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    meta.sigma_s = burst.params.sigma_s;
    meta.sigma_r = burst.params.sigma_r;
    meta.layout = burst.layout == BayerLayout::BayerRGGB ? "rggb" : "gray";
    meta.n_frames = burst.frame_count();
    std::ofstream js(fs::path(dir) / "burst.json");
    js << burst_meta_json(meta).dump(2) << "\n";

    save_pgm((fs::path(dir) / detail::frame_name(0)).string(), encode_plane(burst.reference, meta));
    for (size_t i = 0; i < burst.alternates.size(); ++i)
        save_pgm((fs::path(dir) / detail::frame_name(static_cast<int>(i) + 1)).string(),
                 encode_plane(burst.alternates[i], meta));
}

inline Burst load_burst(const std::string& dir, BurstMeta* meta_out = nullptr) {
    namespace fs = std::filesystem;
    const fs::path meta_path = fs::path(dir) / "burst.json";
    std::ifstream js(meta_path);
    if (!js)
        throw FormatError(meta_path.string() + ": missing burst metadata sidecar");
    nlohmann::json j;
    try {
        js >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
    const BurstMeta meta = parse_burst_meta(j);
    if (meta_out)
        *meta_out = meta;

    Burst burst;
    burst.params = meta.noise_params();
    burst.layout = meta.bayer_layout();
    burst.reference = decode_plane(load_pgm((fs::path(dir) / detail::frame_name(0)).string()), meta);
    for (int i = 1; i < meta.n_frames; ++i)
        burst.alternates.push_back(
            decode_plane(load_pgm((fs::path(dir) / detail::frame_name(i)).string()), meta));
    burst.validate();
    return burst;
}

} // namespace burstdn
