#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "posef/core/autodiff.hpp"
#include "posef/core/binary_io.hpp"

namespace posef::ad {

inline constexpr const char* kCheckpointMagic = "PFCK1";

// Layout: "PFCK1", then per parameter: u32 name length, name bytes, u32 rank,
// u32 extents, f64 values. All integers and reals little-endian.
inline void write_checkpoint(std::ostream& os, const ParameterSet& params) {
    os.write(kCheckpointMagic, 5);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        const Tensor& t = params[i];
        io::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        io::write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) io::write_u32(os, static_cast<std::uint32_t>(e));
        for (double v : t.values()) io::write_f64(os, v);
    }
}

inline ParameterSet read_checkpoint(std::istream& is) {
    io::expect_magic(is, kCheckpointMagic, "checkpoint");
    ParameterSet params;
    while (is.peek() != std::char_traits<char>::eof()) {
        const std::uint32_t len = io::read_u32(is);
        std::string name(len, '\0');
        if (!io::read_bytes(is, name.data(), len)) throw std::runtime_error("checkpoint: truncated parameter name");
        const std::uint32_t rank = io::read_u32(is);
        if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad rank for " + name);
        Shape shape(rank);
        for (auto& e : shape) e = io::read_u32(is);
        std::vector<double> values(shape_numel(shape));
        for (double& v : values) v = io::read_f64(is);
        params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return params;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    write_checkpoint(os, params);
}

inline ParameterSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
    return read_checkpoint(is);
}

// Copies values from `src` into same-named, same-shaped tensors of `dst`.
inline void assign_parameters(ParameterSet& dst, const ParameterSet& src) {
    if (dst.size() != src.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const Tensor& s = src[dst.name(i)];
        if (s.shape() != dst[i].shape())
            throw std::runtime_error("checkpoint: shape mismatch for " + dst.name(i) + ": " + shape_str(s.shape()) +
                                     " vs " + shape_str(dst[i].shape()));
        dst[i] = s;
    }
}

}  // namespace posef::ad
