#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "posef/eval/metrics.hpp"

namespace posef::cli {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline eval::ErrorCurve parse_error_curve(const std::string& text, const std::string& origin) {
    eval::ErrorCurve c;
    std::size_t pos = 0, line_no = 0;
    auto fail = [&](const std::string& why) {
        throw SchemaError(origin + ":" + std::to_string(line_no) + ": " + why);
    };
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "n,mean_min_error") fail("expected header 'n,mean_min_error'");
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) fail("expected 2 fields");
        std::size_t n = 0;
        const char* b = line.data();
        auto [p, ec] = std::from_chars(b, b + comma, n);
        if (ec != std::errc() || p != b + comma || n == 0) fail("n must be a positive integer");
        const std::string vs = line.substr(comma + 1);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(vs, &used);
            if (used != vs.size()) fail("bad error value '" + vs + "'");
        } catch (const std::logic_error&) {
            fail("bad error value '" + vs + "'");
        }
        if (!std::isfinite(v)) fail("error value is not finite");
        if (!c.n.empty() && n <= c.n.back()) fail("n must increase");
        c.n.push_back(n);
        c.mean_min_error.push_back(v);
    }
    if (line_no == 0) throw SchemaError(origin + ": empty file");
    if (c.n.empty()) throw SchemaError(origin + ": no data rows");
    return c;
}

inline eval::ErrorCurve load_error_curve(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_error_curve(text, p.string());
}

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace detail

// Error against sample count, log2 x axis. One polyline and one set of
// point markers per curve.
inline std::string error_curves_svg(const std::vector<eval::ErrorCurve>& curves, const std::vector<std::string>& labels) {
    if (curves.empty() || curves.size() != labels.size())
        throw std::invalid_argument("plot: need one label per curve");
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    constexpr double W = 640, H = 420, left = 70, right = 20, top = 20, bottom = 60;
    double xmax = 0.0, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& c : curves) {
        xmax = std::max(xmax, std::log2(static_cast<double>(c.n.back())));
        for (double v : c.mean_min_error) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (xmax <= 0.0) xmax = 1.0;
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    auto px = [&](std::size_t n) { return left + std::log2(static_cast<double>(n)) / xmax * (W - left - right); };
    auto py = [&](double v) { return top + (ymax - v) / (ymax - ymin) * (H - top - bottom); };
    using detail::num;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
    s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    s += "<g stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(H - bottom) + "\" x2=\"" + num(W - right) + "\" y2=\"" +
         num(H - bottom) + "\"/>\n";
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(H - bottom) +
         "\"/>\n</g>\n";
    s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t n = 1; static_cast<double>(n) <= std::exp2(xmax) + 1e-9; n *= 2)
        s += "<text x=\"" + num(px(n)) + "\" y=\"" + num(H - bottom + 16) + "\" text-anchor=\"middle\">" +
             std::to_string(n) + "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = ymin + (ymax - ymin) * i / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" + buf + "</text>\n";
    }
    s += "<text x=\"" + num((left + W - right) / 2) + "\" y=\"" + num(H - 18) +
         "\" text-anchor=\"middle\">number of samples N</text>\n";
    s += "<text x=\"16\" y=\"" + num((top + H - bottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((top + H - bottom) / 2) + ")\">mean min error</text>\n</g>\n";
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const std::string color = palette[k % (sizeof palette / sizeof *palette)];
        const auto& c = curves[k];
        std::string pts;
        for (std::size_t i = 0; i < c.n.size(); ++i) {
            if (i) pts += ' ';
            pts += num(px(c.n[i])) + "," + num(py(c.mean_min_error[i]));
        }
        s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        for (std::size_t i = 0; i < c.n.size(); ++i)
            s += "<circle cx=\"" + num(px(c.n[i])) + "\" cy=\"" + num(py(c.mean_min_error[i])) + "\" r=\"3\" fill=\"" +
                 color + "\"/>\n";
        const double ly = top + 14 + 16 * static_cast<double>(k);
        s += "<text x=\"" + num(W - right - 150) + "\" y=\"" + num(ly) + "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
             color + "\">" + detail::xml_escape(labels[k]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace posef::cli
