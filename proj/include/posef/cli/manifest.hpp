#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posef/core/settings.hpp"

namespace posef::cli {

// SHA-1 over "blob <size>\0<bytes>", the same id `git hash-object` prints.
inline std::string git_blob_sha1(const std::string& bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw std::runtime_error("sha1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::string file_blob_sha1(const std::filesystem::path& p) { return git_blob_sha1(read_file(p)); }

// What a command consumed and produced. Paths are recorded as given so
// the manifest does not depend on the working directory.
struct RunRecord {
    std::string command;
    std::uint64_t seed = 0;
    Settings settings;
    nlohmann::json flags = nlohmann::json::object();
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;

    // A model path stands for the checkpoint and its JSON sidecar.
    void add_model_input(const std::filesystem::path& p) {
        inputs.push_back(p);
        inputs.push_back(p.string() + ".json");
    }

    nlohmann::json to_json() const {
        nlohmann::json cfg = nlohmann::json::object();
        for (const auto& [k, v] : settings.entries()) cfg[k] = v;
        nlohmann::json in = nlohmann::json::array(), out = nlohmann::json::array();
        for (const auto& p : inputs) in.push_back({{"path", p.generic_string()}, {"sha1", file_blob_sha1(p)}});
        for (const auto& p : outputs) out.push_back({{"path", p.generic_string()}, {"sha1", file_blob_sha1(p)}});
        return {{"posef_manifest", 1}, {"command", command}, {"seed", seed},  {"config", cfg},
                {"flags", flags},      {"inputs", in},       {"outputs", out}};
    }
};

inline std::filesystem::path manifest_path(const std::filesystem::path& out) {
    return out.string() + ".manifest.json";
}

inline void write_manifest(const RunRecord& r, const std::filesystem::path& out) {
    std::ofstream os(manifest_path(out), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + manifest_path(out).string());
    os << r.to_json().dump(2) << '\n';
}

}  // namespace posef::cli
