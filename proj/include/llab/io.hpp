#ifndef LLAB_IO_HPP
#define LLAB_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace llab {

/// FNV-1a 64-bit hash of a byte string, as a fixed-width hex string.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

void ensure_dir(const std::string& path);

/// Serialized subcommand configuration stored next to the outputs.
struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::string format_version = "1";
    std::map<std::string, std::string> params;
};

void write_run_config(const RunConfig& config, const std::string& dir);
RunConfig read_run_config(const std::string& dir);

/// Writes manifest.json listing every regular file in the run directory
/// (except the manifest itself) with its content hash.
void write_manifest(const std::string& dir);

/// Returns the list of files whose hashes disagree with the manifest.
std::vector<std::string> verify_manifest(const std::string& dir);

} // namespace llab

#endif
