#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "posef/core/binary_io.hpp"

namespace posef::gan {

struct VideoShape {
    std::size_t frames = 8;
    std::size_t height = 16;
    std::size_t width = 20;
    std::size_t channels = 3;

    std::size_t voxels() const { return frames * height * width; }
    std::size_t size() const { return voxels() * channels; }
    std::string str() const {
        return std::to_string(frames) + "x" + std::to_string(height) + "x" + std::to_string(width) + "x" +
               std::to_string(channels);
    }
    friend bool operator==(const VideoShape&, const VideoShape&) = default;
};

// Frames x height x width x channels, channel fastest.
struct Video {
    VideoShape shape;
    std::vector<double> values;

    Video() = default;
    explicit Video(VideoShape s, double fill = 0.0) : shape(s), values(s.size(), fill) {}

    std::size_t index(std::size_t f, std::size_t y, std::size_t x, std::size_t c) const {
        return ((f * shape.height + y) * shape.width + x) * shape.channels + c;
    }
    double& at(std::size_t f, std::size_t y, std::size_t x, std::size_t c) { return values[index(f, y, x, c)]; }
    double at(std::size_t f, std::size_t y, std::size_t x, std::size_t c) const { return values[index(f, y, x, c)]; }

    bool in_unit_range() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return v >= -1.0 && v <= 1.0; });
    }

    friend bool operator==(const Video&, const Video&) = default;
};

inline constexpr const char* kVideoMagic = "PFVID1";

// "PFVID1", u32 F, H, W, C, then f32 values, little-endian.
inline void write_video(std::ostream& os, const Video& v) {
    os.write(kVideoMagic, 6);
    io::write_u32(os, static_cast<std::uint32_t>(v.shape.frames));
    io::write_u32(os, static_cast<std::uint32_t>(v.shape.height));
    io::write_u32(os, static_cast<std::uint32_t>(v.shape.width));
    io::write_u32(os, static_cast<std::uint32_t>(v.shape.channels));
    for (double x : v.values) io::write_f32(os, static_cast<float>(x));
}

inline Video read_video(std::istream& is) {
    io::expect_magic(is, kVideoMagic, "video");
    VideoShape s;
    s.frames = io::read_u32(is);
    s.height = io::read_u32(is);
    s.width = io::read_u32(is);
    s.channels = io::read_u32(is);
    if (s.size() == 0) throw std::runtime_error("video: zero-sized dimensions");
    Video v(s);
    for (double& x : v.values) x = io::read_f32(is);
    return v;
}

// A file can hold several videos back to back.
inline void save_videos(const std::filesystem::path& path, const std::vector<Video>& videos) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write video file " + path.string());
    for (const auto& v : videos) write_video(os, v);
}

inline std::vector<Video> load_videos(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read video file " + path.string());
    std::vector<Video> out;
    while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_video(is));
    return out;
}

// Binary PGM (P5) of channel-averaged frame f, [-1, 1] mapped to [0, 255].
inline void write_pgm_frame(const std::filesystem::path& path, const Video& v, std::size_t f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "P5\n" << v.shape.width << " " << v.shape.height << "\n255\n";
    for (std::size_t y = 0; y < v.shape.height; ++y)
        for (std::size_t x = 0; x < v.shape.width; ++x) {
            double s = 0;
            for (std::size_t c = 0; c < v.shape.channels; ++c) s += v.at(f, y, x, c);
            s /= static_cast<double>(v.shape.channels);
            const long level = std::lround((std::clamp(s, -1.0, 1.0) + 1.0) * 127.5);
            os.put(static_cast<char>(static_cast<unsigned char>(level)));
        }
}

// One PGM per frame: <stem>_f00.pgm, <stem>_f01.pgm, ...
inline std::vector<std::filesystem::path> dump_pgm_frames(const std::filesystem::path& stem, const Video& v) {
    std::vector<std::filesystem::path> out;
    for (std::size_t f = 0; f < v.shape.frames; ++f) {
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "_f%02zu.pgm", f);
        out.push_back(stem.string() + suffix);
        write_pgm_frame(out.back(), v, f);
    }
    return out;
}

}  // namespace posef::gan
