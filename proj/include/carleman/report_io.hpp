#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace carleman {

// Dense row-major scalar field with its box, as stored on disk:
// a 4-byte little-endian header length, a JSON header (dims, lo, hi, name,
// dtype float64, endian little), then the raw float64 payload.
struct GridPayload {
  std::string name;
  std::vector<int> dims;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> data;  // size = product of dims
};

void write_grid(const std::filesystem::path& path, const GridPayload& payload);
GridPayload read_grid(const std::filesystem::path& path);

// CSV rendering for small grids (dim <= 2): coordinate columns then the
// value, one row per grid point.
std::string grid_csv(const GridPayload& payload);

// Write a CSV table; each row must have one entry per header column.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace carleman
