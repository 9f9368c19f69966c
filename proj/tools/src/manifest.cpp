#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "mtrack/error.hpp"

#ifndef MTRACK_VERSION
#define MTRACK_VERSION "unknown"
#endif

namespace mtrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* tool_version() noexcept { return MTRACK_VERSION; }

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest initialisation failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

json hash_inputs(const fs::path& input) {
    json out = json::object();
    if (fs::is_regular_file(input)) {
        out[input.filename().string()] = sha256_file(input);
        return out;
    }
    if (!fs::is_directory(input)) throw ValidationError("input not found: " + input.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(input))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out[fs::relative(f, input).generic_string()] = sha256_file(f);
    return out;
}

Manifest::Manifest(std::string command) {
    doc_["command"] = std::move(command);
    doc_["version"] = tool_version();
    doc_["flags"] = json::object();
    doc_["inputs"] = json::object();
}

void Manifest::flag(const std::string& name, json value) { doc_["flags"][name] = std::move(value); }

void Manifest::input(const std::string& role, const fs::path& path) {
    doc_["inputs"][role] = {{"path", path.generic_string()}, {"sha256", hash_inputs(path)}};
}

void Manifest::note(const std::string& key, json value) { doc_[key] = std::move(value); }

void Manifest::write(const fs::path& dir) const {
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") outputs.push_back(e.path().filename().string());
    std::sort(outputs.begin(), outputs.end());
    json doc = doc_;
    doc["outputs"] = outputs;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / "manifest.json").string());
    out << doc.dump(2) << '\n';
}

}  // namespace mtrack::cli
