#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gbl {

using Action = std::uint32_t;

/// Canonical encoding of a full environment state. Equality is defined on
/// the encoded bytes; the digest is only a hash-table accelerator.
class StateKey {
public:
    StateKey() : digest_(fnv1a({})) {}
    explicit StateKey(std::vector<std::uint8_t> encoding)
        : encoding_(std::move(encoding)), digest_(fnv1a(encoding_)) {}

    std::span<const std::uint8_t> encoding() const noexcept { return encoding_; }
    std::uint64_t digest() const noexcept { return digest_; }

    std::string hex() const;
    static StateKey from_hex(std::string_view hex);

    friend bool operator==(const StateKey& a, const StateKey& b) noexcept {
        return a.digest_ == b.digest_ && a.encoding_ == b.encoding_;
    }
    friend bool operator<(const StateKey& a, const StateKey& b) noexcept {
        return a.encoding_ < b.encoding_;
    }

    static std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (auto b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    std::vector<std::uint8_t> encoding_;
    std::uint64_t digest_;
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const noexcept {
        return static_cast<std::size_t>(k.digest());
    }
};

/// Little-endian fixed-width field writer used by every environment encoder.
class KeyWriter {
public:
    KeyWriter& i32(std::int32_t v) {
        auto u = static_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
        return *this;
    }
    KeyWriter& u8(std::uint8_t v) {
        bytes_.push_back(v);
        return *this;
    }
    StateKey finish() { return StateKey(std::move(bytes_)); }

private:
    std::vector<std::uint8_t> bytes_;
};

class KeyReader {
public:
    explicit KeyReader(const StateKey& key) : bytes_(key.encoding()) {}

    std::int32_t i32();
    std::uint8_t u8();
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace gbl
