#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srlbench {

// CRC-32 (IEEE 802.3 polynomial, reflected).
uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

class Sha256 {
public:
    Sha256();
    void update(const uint8_t* data, size_t len);
    // Finalizes and returns the lowercase hex digest; the object must not
    // be updated afterwards.
    std::string hex_digest();

private:
    void process_block(const uint8_t* block);
    uint32_t state_[8];
    uint64_t total_len_ = 0;
    uint8_t buffer_[64];
    size_t buffer_len_ = 0;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace srlbench
