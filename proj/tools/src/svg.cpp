#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

namespace mtrack::cli::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

std::string num(double v) { return csv::format_double(std::round(v * 100.0) / 100.0); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    [[nodiscard]] double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    [[nodiscard]] double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void header(std::ostream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << escape(title) << "</text>\n";
}

void axes(std::ostream& out, const Frame& f, const std::string& xlabel) {
    out << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << kHeight - kBottom << "\"/>"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
        << "\"/></g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\">";
    for (int t = 0; t <= 4; ++t) {
        const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0;
        const double yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
        out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
            << csv::format_double(std::round(xv * 1000.0) / 1000.0) << "</text>";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">"
            << csv::format_double(std::round(yv * 1000.0) / 1000.0) << "</text>";
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(xlabel)
        << "</text></g>\n";
}

void save(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << body;
}

}  // namespace

void histogram(const std::filesystem::path& path, std::span<const double> values, const std::string& title,
               std::size_t bins) {
    std::ostringstream out;
    header(out, title);
    if (!values.empty() && bins > 0) {
        auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        double lo = *lo_it;
        double hi = *hi_it;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        std::vector<std::size_t> counts(bins, 0);
        for (double v : values) {
            auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
            ++counts[std::min(b, bins - 1)];
        }
        const double top = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
        const Frame f{lo, hi, 0.0, top};
        out << "<g fill=\"#4c72b0\" stroke=\"white\" stroke-width=\"0.5\">";
        for (std::size_t b = 0; b < bins; ++b) {
            const double a = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
            const double z = lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins);
            const double h = static_cast<double>(counts[b]);
            out << "<rect x=\"" << num(f.px(a)) << "\" y=\"" << num(f.py(h)) << "\" width=\""
                << num(f.px(z) - f.px(a)) << "\" height=\"" << num(f.py(0) - f.py(h)) << "\"/>";
        }
        out << "</g>\n";
        axes(out, f, title);
    }
    out << "</svg>\n";
    save(path, out.str());
}

void lines(const std::filesystem::path& path, std::span<const Series> series, const std::string& title,
           const std::string& xlabel, std::span<const Band> bands) {
    std::ostringstream out;
    header(out, title);
    std::size_t n = 1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        n = std::max(n, s.y.size());
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    for (const auto& b : bands) {
        lo = std::min(lo, b.lo);
        hi = std::max(hi, b.hi);
    }
    if (!(hi > lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    const Frame f{1.0, static_cast<double>(std::max<std::size_t>(n, 2)), lo, hi};
    for (const auto& b : bands) {
        out << "<rect x=\"" << kLeft << "\" y=\"" << num(f.py(b.hi)) << "\" width=\"" << kWidth - kLeft - kRight
            << "\" height=\"" << num(f.py(b.lo) - f.py(b.hi)) << "\" fill=\"" << b.colour
            << "\" fill-opacity=\"0.15\"/>";
        out << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << num(f.py(b.hi) + 14)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << escape(b.label) << "</text>\n";
    }
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-opacity=\"" << num(s.opacity)
            << "\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i)
            out << (i ? " " : "") << num(f.px(static_cast<double>(i + 1))) << ',' << num(f.py(s.y[i]));
        out << "\"/>\n";
    }
    axes(out, f, xlabel);
    out << "</svg>\n";
    save(path, out.str());
}

}  // namespace mtrack::cli::svg
