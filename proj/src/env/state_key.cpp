#include "gbl/state_key.hpp"

#include <stdexcept>

namespace gbl {

std::string StateKey::hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(encoding_.size() * 2);
    for (auto b : encoding_) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

namespace {
int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

StateKey StateKey::from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex state key");
    std::vector<std::uint8_t> bytes(hex.size() / 2);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit in state key");
        bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return StateKey(std::move(bytes));
}

std::int32_t KeyReader::i32() {
    if (pos_ + 4 > bytes_.size()) throw std::invalid_argument("state key too short");
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return static_cast<std::int32_t>(u);
}

std::uint8_t KeyReader::u8() {
    if (pos_ >= bytes_.size()) throw std::invalid_argument("state key too short");
    return bytes_[pos_++];
}

}  // namespace gbl
