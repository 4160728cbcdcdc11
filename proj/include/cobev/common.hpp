#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cobev {

// Error taxonomy maps onto CLI exit codes: config 2, missing artifact 3,
// numeric failure 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);
void append_line(const std::filesystem::path& path, const std::string& line);

// Little-endian scalar append/read for binary containers and wire payloads.
void put_u8(std::string& out, uint8_t v);
void put_u16(std::string& out, uint16_t v);
void put_u32(std::string& out, uint32_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);
uint8_t get_u8(const std::string& in, size_t& pos);
uint16_t get_u16(const std::string& in, size_t& pos);
uint32_t get_u32(const std::string& in, size_t& pos);
float get_f32(const std::string& in, size_t& pos);
double get_f64(const std::string& in, size_t& pos);

// Round-trip exact decimal formatting for scene files and text records.
std::string fmt_double(double v);

constexpr const char* kVersionString = "cobev 0.1.0";

}  // namespace cobev
