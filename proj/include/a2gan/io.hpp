#pragma once

#include "a2gan/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace a2gan {

using Json = nlohmann::json;

// Dense little-endian arrays, row-major. Row-major on disk regardless of
// Eigen's in-memory order; the loader restores the same matrix.
void write_f32_matrix(const std::filesystem::path& path, const MatF& m);
MatF read_f32_matrix(const std::filesystem::path& path, int rows, int cols);

void write_u8_vector(const std::filesystem::path& path, const std::vector<uint8_t>& v);
std::vector<uint8_t> read_u8_vector(const std::filesystem::path& path, size_t count);

void write_i32_vector(const std::filesystem::path& path, const std::vector<int32_t>& v);
std::vector<int32_t> read_i32_vector(const std::filesystem::path& path, size_t count);

void write_f64_vector(const std::filesystem::path& path, const std::vector<double>& v);
std::vector<double> read_f64_vector(const std::filesystem::path& path, size_t count);

void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// SHA-256 of a file's contents, lowercase hex.
std::string sha256_file(const std::filesystem::path& path);

/// SHA-256 of a string, lowercase hex.
std::string sha256_string(const std::string& data);

/// Doubles formatted with max_digits10 so that serialized values
/// round-trip bit-exactly through text.
std::string format_double(double v);

} // namespace a2gan
