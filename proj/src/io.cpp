#include "llab/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace llab {

namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for hashing: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

void ensure_dir(const std::string& path) {
    fs::create_directories(path);
}

void write_run_config(const RunConfig& config, const std::string& dir) {
    nlohmann::json j;
    j["command"] = config.command;
    j["seed"] = config.seed;
    j["format_version"] = config.format_version;
    j["params"] = config.params;
    std::ofstream out(fs::path(dir) / "config.json");
    if (!out) {
        throw std::runtime_error("cannot write config.json in " + dir);
    }
    out << j.dump(2) << "\n";
}

RunConfig read_run_config(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "config.json");
    if (!in) {
        throw std::runtime_error("cannot read config.json in " + dir);
    }
    nlohmann::json j;
    in >> j;
    RunConfig config;
    config.command = j.at("command").get<std::string>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.format_version = j.value("format_version", "1");
    if (j.contains("params")) {
        for (const auto& [key, value] : j.at("params").items()) {
            config.params[key] = value.get<std::string>();
        }
    }
    return config;
}

namespace {

std::vector<std::string> run_files(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            files.push_back(fs::relative(entry.path(), dir).generic_string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

void write_manifest(const std::string& dir) {
    nlohmann::json entries = nlohmann::json::array();
    for (const std::string& rel : run_files(dir)) {
        nlohmann::json e;
        e["path"] = rel;
        e["fnv1a"] = hash_file((fs::path(dir) / rel).string());
        entries.push_back(e);
    }
    nlohmann::json j;
    j["files"] = entries;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) {
        throw std::runtime_error("cannot write manifest.json in " + dir);
    }
    out << j.dump(2) << "\n";
}

std::vector<std::string> verify_manifest(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) {
        throw std::runtime_error("missing manifest.json in " + dir);
    }
    nlohmann::json j;
    in >> j;
    std::vector<std::string> mismatches;
    for (const auto& e : j.at("files")) {
        const std::string rel = e.at("path").get<std::string>();
        const fs::path p = fs::path(dir) / rel;
        if (!fs::exists(p) || hash_file(p.string()) != e.at("fnv1a").get<std::string>()) {
            mismatches.push_back(rel);
        }
    }
    return mismatches;
}

} // namespace llab
