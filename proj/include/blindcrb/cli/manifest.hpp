#pragma once

// Run manifest written as a '#'-prefixed header on every CSV the CLI emits.

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace blindcrb::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvSchema = "blindcrb-csv/1";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config;  ///< canonical flag string; hashed into config_hash
    std::string timestamp;
    std::vector<std::pair<std::string, std::string>> inputs;  ///< (path, sha256)
    std::vector<std::string> warnings;

    /// Timestamp from SOURCE_DATE_EPOCH when set (reproducible output), else now.
    static RunManifest make(std::string command, std::string config);
    void add_input(const std::string& path);
    std::string config_hash() const;
    void write(std::ostream& os) const;
};

}  // namespace blindcrb::cli
