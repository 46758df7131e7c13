#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "json.hpp"

#include "kpo/errors.hpp"

#ifndef KPO_VERSION
#define KPO_VERSION "unknown"
#endif

namespace kpo::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInput("cannot hash " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void Manifest::add_input(const std::filesystem::path& p) {
    if (std::find(inputs.begin(), inputs.end(), p) == inputs.end())
        inputs.push_back(p);
}

void Manifest::add_output(const std::filesystem::path& p) {
    if (std::find(outputs.begin(), outputs.end(), p) == outputs.end())
        outputs.push_back(p);
}

std::string Manifest::to_json() const {
    using nlohmann::json;
    auto files = [](const std::vector<std::filesystem::path>& list) {
        json arr = json::array();
        for (const auto& p : list)
            arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
        return arr;
    };
    json t = json::object();
    double total = 0.0;
    for (const auto& [stage, s] : timing) {
        t[stage] = s;
        total += s;
    }
    t["total"] = total;
    json j = {{"command", command},
              {"argv", argv},
              {"version", KPO_VERSION},
              {"seeds", seeds},
              {"threads", threads},
              {"deterministic", deterministic},
              {"inputs", files(inputs)},
              {"outputs", files(outputs)},
              {"timing_s", t}};
    return j.dump(2) + "\n";
}

} // namespace kpo::cli
