#pragma once

// Little-endian binary record helpers for the persisted index files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "phraseqa/error.hpp"

namespace phraseqa::io {

template <typename T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, bytes, sizeof(T));
    }
    return v;
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) {
            throw Error("cannot write " + path.string());
        }
    }

    template <typename T>
    void put(T v) {
        v = to_little(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    void put_bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

    void put_string(std::string_view s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        put_bytes(s);
    }

    template <typename T>
    void put_array(const std::vector<T>& v) {
        if constexpr (std::endian::native == std::endian::little) {
            out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
        } else {
            for (const T& x : v) {
                put(x);
            }
        }
    }

    void close() {
        out_.close();
        if (!out_) {
            throw Error("failed writing " + path_.string());
        }
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) {
            throw Error("cannot open " + path.string());
        }
    }

    template <typename T>
    T get() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return to_little(v);
    }

    std::string get_bytes(std::size_t n) {
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

    std::string get_string() { return get_bytes(get<std::uint32_t>()); }

    template <typename T>
    std::vector<T> get_array(std::size_t n) {
        std::vector<T> v(n);
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
        check();
        if constexpr (std::endian::native != std::endian::little) {
            for (T& x : v) {
                x = to_little(x);
            }
        }
        return v;
    }

    void expect_magic(std::string_view magic, std::uint32_t version) {
        if (get_bytes(magic.size()) != magic) {
            throw Error(path_.string() + ": bad magic");
        }
        const auto v = get<std::uint32_t>();
        if (v != version) {
            throw Error(path_.string() + ": unsupported version " + std::to_string(v));
        }
    }

    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw Error(path_.string() + ": trailing bytes");
        }
    }

private:
    void check() {
        if (!in_) {
            throw Error(path_.string() + ": truncated file");
        }
    }

    std::ifstream in_;
    std::filesystem::path path_;
};

} // namespace phraseqa::io
