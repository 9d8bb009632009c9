#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace latentga {

/// Resolved configuration of one CLI run, written next to the outputs as
/// key=value text. The file doubles as a CLI11 config file, so re-running
/// a subcommand with --manifest <file> replays the run; flags given on
/// the command line take precedence over manifest values.
class RunManifest {
public:
    void set(const std::string& key, const std::string& value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_double(const std::string& key, double value);
    void set_bool(const std::string& key, bool value);

    const std::string* find(const std::string& key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);

private:
    std::vector<std::pair<std::string, std::string>> entries_; // insertion order
};

/// FNV-1a 64-bit digest of a file's bytes, as "fnv1a:<16 hex digits>".
/// Cheap content fingerprint for manifests, not a cryptographic hash.
std::string file_digest(const std::string& path);

} // namespace latentga
