#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbl/errors.hpp"

namespace gbl::io {

/// Little-endian record container shared by the graph and value-table
/// files: a 5-byte magic followed by `[tag u8][length u32][payload]`
/// records.
class RecordWriter {
public:
    RecordWriter(std::ostream& os, std::string_view magic) : os_(os) { os_.write(magic.data(), magic.size()); }

    RecordWriter& u8(std::uint8_t v) {
        buf_.push_back(v);
        return *this;
    }
    RecordWriter& u32(std::uint32_t v) { return put(v, 4); }
    RecordWriter& u64(std::uint64_t v) { return put(v, 8); }
    RecordWriter& f64(double v) { return put(std::bit_cast<std::uint64_t>(v), 8); }
    RecordWriter& bytes(std::span<const std::uint8_t> b) {
        buf_.insert(buf_.end(), b.begin(), b.end());
        return *this;
    }

    void emit(char tag) {
        char head[5];
        head[0] = tag;
        auto n = static_cast<std::uint32_t>(buf_.size());
        for (int i = 0; i < 4; ++i) head[1 + i] = static_cast<char>(n >> (8 * i));
        os_.write(head, 5);
        os_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }

private:
    RecordWriter& put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        return *this;
    }

    std::ostream& os_;
    std::vector<std::uint8_t> buf_;
};

class RecordReader {
public:
    /// Reads the whole stream and checks the magic.
    RecordReader(std::istream& is, std::string_view magic) {
        data_.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
        if (data_.size() < magic.size() || std::string_view(data_.data(), magic.size()) != magic)
            throw ParseError("missing or wrong header, expected " + std::string(magic), 0);
        pos_ = magic.size();
    }

    bool at_end() const noexcept { return pos_ == data_.size(); }

    /// Advances to the next record; returns its tag.
    char next_record() {
        record_start_ = pos_;
        if (data_.size() - pos_ < 5) throw ParseError("truncated record header", pos_);
        char tag = data_[pos_];
        std::uint32_t n = 0;
        for (int i = 0; i < 4; ++i) n |= std::uint32_t(static_cast<std::uint8_t>(data_[pos_ + 1 + i])) << (8 * i);
        pos_ += 5;
        if (data_.size() - pos_ < n) throw ParseError("truncated record payload", pos_);
        end_ = pos_ + n;
        return tag;
    }

    /// Checks the current record's payload was consumed exactly.
    void finish_record() {
        if (pos_ != end_) throw ParseError("record length mismatch", record_start_);
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    std::uint64_t u64() { return take(8); }
    double f64() { return std::bit_cast<double>(take(8)); }
    std::vector<std::uint8_t> rest() {
        std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + end_);
        pos_ = end_;
        return out;
    }
    std::size_t offset() const noexcept { return pos_; }
    std::size_t record_offset() const noexcept { return record_start_; }

private:
    std::uint64_t take(int width) {
        if (end_ - pos_ < static_cast<std::size_t>(width)) throw ParseError("record payload too short", pos_);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += width;
        return v;
    }

    std::vector<char> data_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::size_t record_start_ = 0;
};

}  // namespace gbl::io
