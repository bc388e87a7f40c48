#include "a2gan/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace a2gan {

static_assert(std::endian::native == std::endian::little,
              "on-disk arrays are little-endian; big-endian hosts are unsupported");

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open for writing: " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open for reading: " + path.string());
    return f;
}

} // namespace

void write_f32_matrix(const std::filesystem::path& path, const MatF& m) {
    auto f = open_out(path);
    std::vector<float> row(static_cast<size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row[static_cast<size_t>(c)] = m(r, c);
        }
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    require(f.good(), "write failed: " + path.string());
}

MatF read_f32_matrix(const std::filesystem::path& path, int rows, int cols) {
    auto f = open_in(path);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<uint64_t>(f.tellg());
    const uint64_t expected = static_cast<uint64_t>(rows) * cols * sizeof(float);
    require(size == expected, path.string() + ": size " + std::to_string(size) +
                                  " does not match manifest shape " + std::to_string(rows) +
                                  "x" + std::to_string(cols));
    f.seekg(0);
    MatF m(rows, cols);
    std::vector<float> row(static_cast<size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        for (int c = 0; c < cols; ++c) {
            m(r, c) = row[static_cast<size_t>(c)];
        }
    }
    require(f.good(), "read failed: " + path.string());
    return m;
}

void write_u8_vector(const std::filesystem::path& path, const std::vector<uint8_t>& v) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
    require(f.good(), "write failed: " + path.string());
}

std::vector<uint8_t> read_u8_vector(const std::filesystem::path& path, size_t count) {
    auto f = open_in(path);
    std::vector<uint8_t> v(count);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count));
    require(f.good(), "read failed or short file: " + path.string());
    return v;
}

void write_i32_vector(const std::filesystem::path& path, const std::vector<int32_t>& v) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(int32_t)));
    require(f.good(), "write failed: " + path.string());
}

std::vector<int32_t> read_i32_vector(const std::filesystem::path& path, size_t count) {
    auto f = open_in(path);
    std::vector<int32_t> v(count);
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(count * sizeof(int32_t)));
    require(f.good(), "read failed or short file: " + path.string());
    return v;
}

void write_f64_vector(const std::filesystem::path& path, const std::vector<double>& v) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    require(f.good(), "write failed: " + path.string());
}

std::vector<double> read_f64_vector(const std::filesystem::path& path, size_t count) {
    auto f = open_in(path);
    std::vector<double> v(count);
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    require(f.good(), "read failed or short file: " + path.string());
    return v;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
    auto f = open_in(path);
    Json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(path.string() + ": invalid JSON: " + e.what());
    }
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto f = open_out(path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(f.good(), "write failed: " + path.string());
}

namespace {

std::string digest_hex(const unsigned char* digest, unsigned int len) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

} // namespace

std::string sha256_file(const std::filesystem::path& path) {
    auto f = open_in(path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, "EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (f) {
        f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = f.gcount();
        if (got > 0) {
            EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(got));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    return digest_hex(digest, len);
}

std::string sha256_string(const std::string& data) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, "EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    return digest_hex(digest, len);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace a2gan
