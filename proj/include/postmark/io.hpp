#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "postmark/embedding.hpp"
#include "postmark/errors.hpp"

namespace postmark {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

inline std::uint32_t crc32_of(std::string_view bytes) {
    ::uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                  static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

// Little-endian append-only buffer used to build file bodies before the
// trailing CRC is attached.
class BinaryWriter {
public:
    void u16(std::uint16_t v) { append(&v, sizeof v); }
    void u32(std::uint32_t v) { append(&v, sizeof v); }
    void f32(float v) { append(&v, sizeof v); }

    void bytes(std::string_view s) { buf_.append(s); }

    void lp_string(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }

    void f32_array(const Embedding& v) {
        buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
    }

    const std::string& data() const { return buf_; }

private:
    void append(const void* p, std::size_t n) {
        buf_.append(reinterpret_cast<const char*>(p), n);
    }
    std::string buf_;
};

class BinaryReader {
public:
    BinaryReader(std::string_view data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::uint16_t u16() { return scalar<std::uint16_t>(); }
    std::uint32_t u32() { return scalar<std::uint32_t>(); }

    std::string lp_string() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    std::string_view raw(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    Embedding f32_array(std::size_t count) {
        need(count * sizeof(float));
        Embedding v(count);
        std::memcpy(v.data(), data_.data() + pos_, count * sizeof(float));
        pos_ += count * sizeof(float);
        return v;
    }

    bool exhausted() const { return pos_ == data_.size(); }
    std::size_t position() const { return pos_; }

private:
    template <typename T>
    T scalar() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void need(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw FormatError(context_ + ": truncated file");
        }
    }

    std::string_view data_;
    std::string context_;
    std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed: " + path.string());
}

// Writes body followed by the CRC-32 of the body.
inline void write_checksummed(const std::filesystem::path& path, const std::string& body) {
    std::string bytes = body;
    const std::uint32_t crc = crc32_of(body);
    bytes.append(reinterpret_cast<const char*>(&crc), sizeof crc);
    write_file_bytes(path, bytes);
}

// Reads a file written by write_checksummed and verifies the trailing CRC.
inline std::string read_checksummed(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < sizeof(std::uint32_t)) {
        throw FormatError(path.string() + ": truncated file");
    }
    const std::string body = bytes.substr(0, bytes.size() - sizeof(std::uint32_t));
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
    if (crc32_of(body) != stored) {
        throw FormatError(path.string() + ": checksum failure");
    }
    return body;
}

// TAB-separated record files (frequency lists, POS lexicons, word triples).
// Blank lines and lines starting with '#' are skipped. The callback gets
// (1-based line number, fields).
template <typename Fn>
inline void for_each_tsv_record(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            const std::size_t tab = line.find('\t', pos);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, tab - pos));
            pos = tab + 1;
        }
        fn(lineno, fields);
    }
}

}  // namespace postmark
