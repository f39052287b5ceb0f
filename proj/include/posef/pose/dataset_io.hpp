#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "posef/pose/pose.hpp"

namespace posef::pose {

// JSON-lines: an optional header object, then one sequence per line.
//   {"posef_dataset":1,"split":"train","seed":7,"num_classes":3}
//   {"label":1,"branch":0,"context":[...],"poses":[[[x,y],...],...]}

namespace detail {

inline void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

inline std::string escape_json(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace detail

inline std::string dataset_header_line(const DatasetManifest& m) {
    return "{\"posef_dataset\":1,\"split\":" + detail::escape_json(m.split) + ",\"seed\":" + std::to_string(m.seed) +
           ",\"num_classes\":" + std::to_string(m.num_classes) + "}";
}

inline std::string sequence_line(const LabeledSequence& s) {
    std::string out = "{\"label\":";
    out += s.label ? std::to_string(*s.label) : "null";
    if (s.branch) out += ",\"branch\":" + std::to_string(*s.branch);
    out += ",\"context\":[";
    for (std::size_t i = 0; i < s.sequence.context.size(); ++i) {
        if (i) out += ',';
        detail::append_number(out, s.sequence.context[i]);
    }
    out += "],\"poses\":[";
    for (std::size_t f = 0; f < s.sequence.poses.size(); ++f) {
        if (f) out += ',';
        out += '[';
        const Pose& p = s.sequence.poses[f];
        for (std::size_t k = 0; k < kKeypoints; ++k) {
            if (k) out += ',';
            out += '[';
            detail::append_number(out, p.x(k));
            out += ',';
            detail::append_number(out, p.y(k));
            out += ']';
        }
        out += ']';
    }
    out += "]}";
    return out;
}

inline void write_dataset(std::ostream& os, const DatasetManifest& m) {
    os << dataset_header_line(m) << '\n';
    for (const auto& s : m.sequences) os << sequence_line(s) << '\n';
}

inline void save_dataset(const DatasetManifest& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write dataset " + path);
    write_dataset(os, m);
    if (!os) throw std::runtime_error("write failed for dataset " + path);
}

namespace detail {

inline LabeledSequence parse_sequence(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("record is not an object");
    LabeledSequence s;
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw std::invalid_argument("label must be an integer");
        s.label = it->get<int>();
    }
    if (auto it = j.find("branch"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw std::invalid_argument("branch must be an integer");
        s.branch = it->get<int>();
    }
    const auto ctx = j.find("context");
    if (ctx == j.end() || !ctx->is_array()) throw std::invalid_argument("missing context array");
    for (const auto& v : *ctx) {
        if (!v.is_number()) throw std::invalid_argument("context entries must be numbers");
        s.sequence.context.push_back(v.get<double>());
    }
    const auto poses = j.find("poses");
    if (poses == j.end() || !poses->is_array()) throw std::invalid_argument("missing poses array");
    if (poses->size() < 2)
        throw std::invalid_argument("sequence needs at least 2 poses, got " + std::to_string(poses->size()));
    for (std::size_t f = 0; f < poses->size(); ++f) {
        const auto& pj = (*poses)[f];
        if (!pj.is_array() || pj.size() != kKeypoints)
            throw std::invalid_argument("pose " + std::to_string(f) + " has " +
                                        std::to_string(pj.is_array() ? pj.size() : 0) + " keypoints, expected 18");
        Pose p;
        for (std::size_t k = 0; k < kKeypoints; ++k) {
            const auto& kp = pj[k];
            if (!kp.is_array() || kp.size() != 2 || !kp[0].is_number() || !kp[1].is_number())
                throw std::invalid_argument("pose " + std::to_string(f) + " keypoint " + std::to_string(k) +
                                            " is not an [x,y] pair");
            p.x(k) = kp[0].get<double>();
            p.y(k) = kp[1].get<double>();
        }
        if (!p.finite()) throw std::invalid_argument("pose " + std::to_string(f) + " has non-finite coordinates");
        s.sequence.poses.push_back(p);
    }
    return s;
}

}  // namespace detail

inline DatasetManifest read_dataset(std::istream& is, const std::string& origin = "<stream>") {
    DatasetManifest m;
    m.num_classes = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    std::size_t context_dim = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = origin + ": line " + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument(where + "malformed JSON (" + e.what() + ")");
        }
        if (first && j.is_object() && j.contains("posef_dataset")) {
            first = false;
            try {
                m.split = j.value("split", std::string("train"));
                m.seed = j.value("seed", std::uint64_t{0});
                m.num_classes = j.value("num_classes", 0);
            } catch (const nlohmann::json::exception& e) {
                throw std::invalid_argument(where + "bad header (" + e.what() + ")");
            }
            continue;
        }
        first = false;
        LabeledSequence s;
        try {
            s = detail::parse_sequence(j);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(where + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
        if (m.sequences.empty())
            context_dim = s.sequence.context.size();
        else if (s.sequence.context.size() != context_dim)
            throw std::invalid_argument(where + "context has " + std::to_string(s.sequence.context.size()) +
                                        " entries, expected " + std::to_string(context_dim));
        if (s.label && m.num_classes > 0 && (*s.label < 0 || *s.label >= m.num_classes))
            throw std::invalid_argument(where + "label " + std::to_string(*s.label) + " outside [0, " +
                                        std::to_string(m.num_classes) + ")");
        m.sequences.push_back(std::move(s));
    }
    return m;
}

inline DatasetManifest load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read dataset " + path);
    return read_dataset(is, path);
}

}  // namespace posef::pose
