#include "blindcrb/cli/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "blindcrb/errors.hpp"

namespace blindcrb::cli {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "' for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

RunManifest RunManifest::make(std::string command, std::string config) {
    RunManifest m;
    m.command = std::move(command);
    m.config = std::move(config);
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (end != epoch && *end == '\0') now = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m.timestamp = os.str();
    return m;
}

void RunManifest::add_input(const std::string& path) {
    inputs.emplace_back(path, sha256_file(path));
}

std::string RunManifest::config_hash() const {
    return sha256_hex(command + "\n" + config).substr(0, 16);
}

void RunManifest::write(std::ostream& os) const {
    os << "# schema: " << kCsvSchema << "\n";
    os << "# command: " << command << "\n";
    os << "# config: " << config << "\n";
    os << "# config_hash: " << config_hash() << "\n";
    os << "# version: blindcrb " << kToolVersion << "\n";
    os << "# timestamp: " << timestamp << "\n";
    for (const auto& [path, digest] : inputs) os << "# input: " << path << " sha256=" << digest << "\n";
    for (const auto& w : warnings) os << "# warning: " << w << "\n";
}

}  // namespace blindcrb::cli
