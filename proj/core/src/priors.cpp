#include "mtrack/priors.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

namespace mtrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct FamilyInfo {
    std::string_view name;
    PriorFamily family;
    std::size_t arity;
};

constexpr std::array<FamilyInfo, 9> kFamilies{{
    {"normal", PriorFamily::normal, 2},
    {"lognormal", PriorFamily::lognormal, 2},
    {"chi_square", PriorFamily::chi_square, 1},
    {"inv_chi_square", PriorFamily::inv_chi_square, 1},
    {"gamma", PriorFamily::gamma, 2},
    {"exponential", PriorFamily::exponential, 1},
    {"uniform", PriorFamily::uniform, 2},
    {"cauchy", PriorFamily::cauchy, 2},
    {"student_t", PriorFamily::student_t, 3},
}};

const double kHalfLog2Pi = 0.5 * std::log(2.0 * kPi);

/// Indices of parameters that must be strictly positive.
std::vector<std::size_t> positive_params(PriorFamily f) {
    switch (f) {
        case PriorFamily::normal:
        case PriorFamily::lognormal:
        case PriorFamily::cauchy: return {1};
        case PriorFamily::chi_square:
        case PriorFamily::inv_chi_square:
        case PriorFamily::exponential: return {0};
        case PriorFamily::gamma: return {0, 1};
        case PriorFamily::student_t: return {0, 2};
        case PriorFamily::uniform: return {};
    }
    return {};
}

}  // namespace

std::string_view to_string(PriorFamily f) noexcept {
    for (const auto& info : kFamilies)
        if (info.family == f) return info.name;
    return "?";
}

double PriorSpec::log_density(double x) const {
    const auto& p = params;
    switch (dist) {
        case PriorFamily::normal: {
            const double z = (x - p[0]) / p[1];
            return -kHalfLog2Pi - std::log(p[1]) - 0.5 * z * z;
        }
        case PriorFamily::lognormal: {
            if (!(x > 0.0)) return kNegInf;
            const double z = (std::log(x) - p[0]) / p[1];
            return -kHalfLog2Pi - std::log(p[1]) - std::log(x) - 0.5 * z * z;
        }
        case PriorFamily::chi_square: {
            if (!(x > 0.0)) return kNegInf;
            const double h = 0.5 * p[0];
            return (h - 1.0) * std::log(x) - 0.5 * x - h * std::log(2.0) - std::lgamma(h);
        }
        case PriorFamily::inv_chi_square: {
            if (!(x > 0.0)) return kNegInf;
            const double h = 0.5 * p[0];
            return -h * std::log(2.0) - std::lgamma(h) - (h + 1.0) * std::log(x) - 0.5 / x;
        }
        case PriorFamily::gamma:
            if (!(x > 0.0)) return kNegInf;
            return p[0] * std::log(p[1]) - std::lgamma(p[0]) + (p[0] - 1.0) * std::log(x) - p[1] * x;
        case PriorFamily::exponential:
            if (!(x >= 0.0)) return kNegInf;
            return std::log(p[0]) - p[0] * x;
        case PriorFamily::uniform:
            if (!(x >= p[0] && x <= p[1])) return kNegInf;
            return -std::log(p[1] - p[0]);
        case PriorFamily::cauchy: {
            const double z = (x - p[0]) / p[1];
            return -std::log(kPi * p[1]) - std::log1p(z * z);
        }
        case PriorFamily::student_t: {
            const double nu = p[0];
            const double z = (x - p[1]) / p[2];
            return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi) -
                   std::log(p[2]) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
        }
    }
    return kNegInf;
}

double PriorSpec::sample(Rng& rng) const {
    const auto& p = params;
    switch (dist) {
        case PriorFamily::normal: return std::normal_distribution<double>(p[0], p[1])(rng);
        case PriorFamily::lognormal: return std::lognormal_distribution<double>(p[0], p[1])(rng);
        case PriorFamily::chi_square: return std::chi_squared_distribution<double>(p[0])(rng);
        case PriorFamily::inv_chi_square: return 1.0 / std::chi_squared_distribution<double>(p[0])(rng);
        case PriorFamily::gamma: return std::gamma_distribution<double>(p[0], 1.0 / p[1])(rng);
        case PriorFamily::exponential: return std::exponential_distribution<double>(p[0])(rng);
        case PriorFamily::uniform: return p[0] + (p[1] - p[0]) * uniform_open(rng);
        case PriorFamily::cauchy: return std::cauchy_distribution<double>(p[0], p[1])(rng);
        case PriorFamily::student_t:
            return p[1] + p[2] * std::student_t_distribution<double>(p[0])(rng);
    }
    return 0.0;
}

PriorSpec parse_prior(std::string_view text) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    skip_ws();
    const std::size_t name_start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
    const std::string_view name = text.substr(name_start, pos - name_start);
    if (name.empty()) throw ParseError("prior: expected a distribution name", name_start);

    const FamilyInfo* info = nullptr;
    for (const auto& f : kFamilies)
        if (f.name == name) info = &f;
    if (!info) throw ParseError("prior: unknown distribution '" + std::string(name) + "'", name_start);

    skip_ws();
    if (pos >= text.size() || text[pos] != '(') throw ParseError("prior: expected '(' after " + std::string(name), pos);
    ++pos;

    std::vector<double> args;
    std::vector<std::size_t> arg_pos;
    bool empty_slot = false;
    for (;;) {
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && text[pos] != ',' && text[pos] != ')') ++pos;
        if (pos >= text.size()) throw ParseError("prior: missing ')'", pos);
        std::string_view token = text.substr(start, pos - start);
        while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
        if (token.empty()) {
            empty_slot = true;
        } else {
            try {
                args.push_back(csv::parse_double(token));
            } catch (const ValidationError&) {
                throw ParseError("prior: '" + std::string(token) + "' is not a number", start);
            }
            arg_pos.push_back(start);
        }
        if (text[pos] == ')') break;
        ++pos;
    }
    const std::size_t close = pos;
    ++pos;
    skip_ws();
    if (pos != text.size()) throw ParseError("prior: trailing characters after ')'", pos);

    if (empty_slot || args.size() != info->arity) {
        throw ParseError("prior: " + std::string(name) + " expects " + std::to_string(info->arity) +
                             " argument(s), got " + std::to_string(args.size()),
                         close);
    }
    for (std::size_t i : positive_params(info->family))
        if (!(args[i] > 0.0))
            throw ParseError("prior: parameter " + std::to_string(i + 1) + " of " + std::string(name) +
                                 " must be positive",
                             arg_pos[i]);
    for (std::size_t i = 0; i < args.size(); ++i)
        if (!std::isfinite(args[i])) throw ParseError("prior: non-finite parameter", arg_pos[i]);
    if (info->family == PriorFamily::uniform && !(args[0] < args[1]))
        throw ParseError("prior: uniform needs lower < upper", arg_pos[1]);

    PriorSpec spec;
    spec.dist = info->family;
    spec.params = std::move(args);
    spec.source = std::string(text);
    return spec;
}

PriorSpec default_prior() { return parse_prior("normal(0,10)"); }

std::vector<PriorSpec> resolve_priors(std::span<const std::optional<std::string>> entries) {
    std::vector<PriorSpec> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e ? parse_prior(*e) : default_prior());
    return out;
}

std::vector<std::optional<std::string>> read_priors_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open priors file " + path.string());
    std::vector<std::optional<std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::size_t a = 0;
        std::size_t b = line.size();
        while (a < b && std::isspace(static_cast<unsigned char>(line[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1]))) --b;
        std::string entry = line.substr(a, b - a);
        if (entry.size() >= 2 && entry.front() == '"' && entry.back() == '"') entry = entry.substr(1, entry.size() - 2);
        if (entry.empty()) continue;
        if (entry == "null" || entry == "NULL")
            out.emplace_back(std::nullopt);
        else
            out.emplace_back(std::move(entry));
    }
    return out;
}

double log_prior(std::span<const double> gamma, std::span<const PriorSpec> priors, Link link) {
    if (gamma.size() != priors.size())
        throw ValidationError("log_prior: " + std::to_string(priors.size()) + " priors for " +
                              std::to_string(gamma.size()) + " parameters");
    if (link == Link::gompertz)
        for (std::size_t k = 1; k < gamma.size(); ++k)
            if (gamma[k] < -gamma[0]) return kNegInf;
    double lp = 0.0;
    for (std::size_t k = 0; k < gamma.size(); ++k) lp += priors[k].log_density(gamma[k]);
    return std::isnan(lp) ? kNegInf : lp;
}

}  // namespace mtrack
