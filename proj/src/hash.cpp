#include "sceneforge/hash.hpp"

#include <openssl/evp.h>

#include "sceneforge/error.hpp"
#include "sceneforge/image_io.hpp"

namespace sceneforge {

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(data, size, digest, &digest_len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");

    static const char hex[] = "0123456789abcdef";
    std::string out(digest_len * 2, '0');
    for (unsigned int i = 0; i < digest_len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_hex(const std::vector<std::uint8_t>& data) {
    return sha256_hex(data.data(), data.size());
}

std::string sha256_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return sha256_hex(bytes);
}

} // namespace sceneforge
