#pragma once

// Byte-stable JSON output and the SVG picture of the fundamental annulus.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thetaglue/glue.hpp"
#include "thetaglue/lgmodel.hpp"
#include "thetaglue/params.hpp"
#include "thetaglue/qseries.hpp"

namespace thetaglue {

using json = nlohmann::json;

/// 17 significant digits; non-finite values become null.
inline std::string real_text(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) { os << "{}"; return; }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted keys
            if (!first) os << ",\n";
            first = false;
            os << inner << json(it.key()).dump() << ": ";
            write_json(os, it.value(), indent + 1);
        }
        os << "\n" << pad << "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) { os << "[]"; return; }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ",\n";
            os << inner;
            write_json(os, j[i], indent + 1);
        }
        os << "\n" << pad << "]";
        return;
    }
    case json::value_t::number_float:
        os << real_text(j.get<double>());
        return;
    default:
        os << j.dump();
    }
}

} // namespace detail

inline std::string stable_dump(const json& j) {
    std::ostringstream os;
    detail::write_json(os, j, 0);
    os << "\n";
    return os.str();
}

inline json to_json(complex c) { return json{{"re", c.real()}, {"im", c.imag()}}; }
inline json to_json(const rational& r) { return detail::rational_text(r); }
inline json to_json(const Monomial& m) { return m.to_string(); }

inline json to_json(const std::vector<complex>& v) {
    json a = json::array();
    for (complex c : v) a.push_back(to_json(c));
    return a;
}

inline json to_json(const Discrepancy& d) {
    json j{{"location", d.location}, {"lhs", d.lhs}, {"rhs", d.rhs}};
    j["key"] = nullptr;
    if (d.key) j["key"] = json{{"q_numerators", d.key->q}, {"z", d.key->z}};
    return j;
}

inline json to_json(const CheckResult& r) {
    json j{{"passed", r.passed}, {"detail", r.detail}};
    j["first_discrepancy"] = r.first_discrepancy ? to_json(*r.first_discrepancy) : json(nullptr);
    return j;
}

struct SvgOptions {
    int grid_lines = 4;   // image curves of |z| = const
    int curve_samples = 96;
    double size = 360.0;  // side of each panel
};

namespace detail {

inline std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

} // namespace detail

/// Left panel: the fundamental annulus |q| <= |z| <= 1 in log-radial scale, Y1 and Y2 shaded,
/// branch points marked. Right panel: images of |z| = const under [s1 : s2] in the disc
/// model w -> w / (1 + |w|) of the target line.
inline void emit_svg(std::ostream& os, const KahlerParams& p, const std::vector<complex>& branch,
                     const CoveringMap* covering, const SvgOptions& opt = {}) {
    using detail::fixed;
    const double S = opt.size, cx = S / 2, cy = S / 2, R = S * 0.45, r0 = S * 0.08;
    const double lq = -std::log(std::abs(p.q));
    auto radius = [&](double modulus) { return r0 + (R - r0) * (1.0 + std::log(modulus) / lq); };
    auto place = [&](complex z) {
        const double r = radius(std::abs(z)), a = std::arg(z);
        return std::pair<double, double>{cx + r * std::cos(a), cy - r * std::sin(a)};
    };
    auto ring = [&](double r_out, double r_in, const char* fill, const char* label) {
        const double a = radius(r_out), b = radius(r_in);
        os << "<path fill=\"" << fill << "\" fill-rule=\"evenodd\" stroke=\"none\" class=\"" << label << "\" d=\"";
        for (double r : {a, b})
            os << "M " << fixed(cx + r) << " " << fixed(cy) << " A " << fixed(r) << " " << fixed(r) << " 0 1 0 "
               << fixed(cx - r) << " " << fixed(cy) << " A " << fixed(r) << " " << fixed(r) << " 0 1 0 "
               << fixed(cx + r) << " " << fixed(cy) << " Z ";
        os << "\"/>\n";
    };

    const bool curves = covering != nullptr && opt.grid_lines > 0;
    const double width = curves ? 2 * S : S;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fixed(width) << "\" height=\""
       << fixed(S) << "\" viewBox=\"0 0 " << fixed(width) << " " << fixed(S) << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width) << "\" height=\"" << fixed(S) << "\" fill=\"white\"/>\n";

    const auto y1 = lg_family(1, p).z_plane, y2 = lg_family(2, p).z_plane;
    ring(y1.r_out, y1.r_in, "#9ecae1", "Y1");
    ring(y2.r_out, y2.r_in, "#fdd0a2", "Y2");
    for (double m : {1.0, std::abs(p.q1), std::abs(p.q)})
        os << "<circle cx=\"" << fixed(cx) << "\" cy=\"" << fixed(cy) << "\" r=\"" << fixed(radius(m))
           << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (std::size_t i = 0; i < branch.size(); ++i) {
        const auto [x, y] = place(branch[i]);
        os << "<circle class=\"branch\" cx=\"" << fixed(x) << "\" cy=\"" << fixed(y)
           << "\" r=\"4\" fill=\"#d62728\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
        os << "<text x=\"" << fixed(x + 6) << "\" y=\"" << fixed(y - 6) << "\" font-size=\"10\">" << "b" << i + 1
           << "</text>\n";
    }

    if (curves) {
        const double ox = S + cx;
        os << "<circle cx=\"" << fixed(ox) << "\" cy=\"" << fixed(cy) << "\" r=\"" << fixed(R)
           << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
        for (int g = 1; g <= opt.grid_lines; ++g) {
            const double modulus = std::pow(std::abs(p.q), static_cast<double>(g) / (opt.grid_lines + 1));
            const double hr = radius(modulus);
            os << "<circle cx=\"" << fixed(cx) << "\" cy=\"" << fixed(cy) << "\" r=\"" << fixed(hr)
               << "\" fill=\"none\" stroke=\"#555555\" stroke-dasharray=\"3 3\" stroke-width=\"0.5\"/>\n";
            os << "<polyline class=\"image\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"0.8\" points=\"";
            for (int s = 0; s <= opt.curve_samples; ++s) {
                const complex z = std::polar(modulus, 2.0 * pi * s / opt.curve_samples);
                const auto pt = covering_eval(*covering, z);
                complex d = pt.x0 / std::abs(pt.x0);
                if (std::abs(pt.x1) > 0.0) {
                    const complex w = pt.x0 / pt.x1;
                    d = w / (1.0 + std::abs(w));
                }
                os << (s ? " " : "") << fixed(ox + R * d.real()) << "," << fixed(cy - R * d.imag());
            }
            os << "\"/>\n";
        }
    }
    os << "</svg>\n";
}

} // namespace thetaglue
