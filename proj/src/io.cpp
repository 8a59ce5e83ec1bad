#include "defnet/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "defnet/error.hpp"

namespace defnet {

namespace {

std::uint64_t byteswap64(std::uint64_t x) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((x >> (8 * i)) & 0xffu);
  return out;
}

}  // namespace

void write_f64(const std::filesystem::path& path, const double* data,
               std::size_t count) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t le = byteswap64(std::bit_cast<std::uint64_t>(data[i]));
      out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
  }
  if (!out) throw ConsistencyError("failed writing " + path.string());
}

std::vector<double> read_f64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ConsistencyError("cannot read " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(double) != 0)
    throw ConsistencyError(path.string() + " is not a float64 array");
  std::vector<double> data(bytes / sizeof(double));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw ConsistencyError("failed reading " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (double& d : data)
      d = std::bit_cast<double>(byteswap64(std::bit_cast<std::uint64_t>(d)));
  }
  return data;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConsistencyError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConsistencyError("cannot write " + path.string());
  out << text;
  if (!out) throw ConsistencyError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConsistencyError("malformed JSON in " + path.string() + ": " +
                           e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string bytes_fingerprint(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::string file_fingerprint(const std::filesystem::path& path) {
  return bytes_fingerprint(read_text(path));
}

nlohmann::json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConsistencyError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace defnet
