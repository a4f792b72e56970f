#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace weakspot::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Little-endian primitives shared by the binary formats.
void put_u32(std::string& out, std::uint32_t value);
std::uint32_t get_u32(std::string_view bytes, std::size_t offset);
void put_f32(std::string& out, float value);
float get_f32(std::string_view bytes, std::size_t offset);
void put_f64(std::string& out, double value);
double get_f64(std::string_view bytes, std::size_t offset);

// First 16 hex digits of SHA-256.
std::string content_hash(std::string_view bytes);

// ISO-8601 UTC, second resolution.
std::string utc_timestamp_now();

}  // namespace weakspot::io
