#include "manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "ge/core.hpp"

#ifndef GEXP_VERSION
#define GEXP_VERSION "0.0.0"
#endif

namespace gexp {

namespace {

std::string fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

Manifest::Manifest(std::string command, int argc, char** argv) {
    doc_["tool"] = "gexp";
    doc_["version"] = GEXP_VERSION;
    doc_["command"] = std::move(command);
    auto& args = doc_["arguments"] = nlohmann::ordered_json::array();
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    doc_["parameters"] = nlohmann::ordered_json::object();
    doc_["inputs"] = nlohmann::ordered_json::array();
    doc_["outputs"] = nlohmann::ordered_json::array();
}

void Manifest::add_input(const std::string& role, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ge::DataError("cannot open " + role + " file '" + path + "'");
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    doc_["inputs"].push_back(
        {{"role", role}, {"path", path}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64(bytes)}});
}

void Manifest::add_output(const std::string& name) { doc_["outputs"].push_back(name); }

void Manifest::note(const std::string& key, nlohmann::ordered_json value) {
    doc_["notes"][key] = std::move(value);
}

void Manifest::write(const std::string& dir) const {
    const auto path = std::filesystem::path(dir) / "manifest.json";
    std::ofstream out(path);
    if (!out) throw ge::DataError("cannot write '" + path.string() + "'");
    out << doc_.dump(2) << '\n';
}

}  // namespace gexp
