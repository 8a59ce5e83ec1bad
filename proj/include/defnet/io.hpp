#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace defnet {

/// Raw little-endian float64 array (no header).
void write_f64(const std::filesystem::path& path, const double* data,
               std::size_t count);
std::vector<double> read_f64(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);
std::string bytes_fingerprint(const std::string& bytes);

/// JSON cannot carry infinities: +inf -> "inf", -inf -> "-inf".
nlohmann::json number_or_inf(double x);
double number_from_json(const nlohmann::json& j);

}  // namespace defnet
