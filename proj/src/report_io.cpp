#include "carleman/report_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "carleman/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "grid payload format is little-endian");

namespace carleman {

namespace {

std::size_t payload_count(const GridPayload& p) {
  std::size_t n = 1;
  for (int d : p.dims) n *= std::size_t(d);
  return n;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const GridPayload& payload) {
  if (payload.dims.empty() || payload.dims.size() > 3)
    throw Error(ErrorCode::dimension, "write_grid: need 1 to 3 axes");
  if (payload.lo.size() != payload.dims.size() ||
      payload.hi.size() != payload.dims.size())
    throw Error(ErrorCode::dimension, "write_grid: box does not match dims");
  if (payload.data.size() != payload_count(payload))
    throw Error(ErrorCode::dimension, "write_grid: data size does not match dims");

  nlohmann::json header;
  header["name"] = payload.name;
  header["dims"] = payload.dims;
  header["lo"] = payload.lo;
  header["hi"] = payload.hi;
  header["dtype"] = "float64";
  header["endian"] = "little";
  header["order"] = "row-major";
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "write_grid: cannot open " + path.string());
  const std::uint32_t len = std::uint32_t(text.size());
  os.write(reinterpret_cast<const char*>(&len), 4);
  os.write(text.data(), std::streamsize(text.size()));
  os.write(reinterpret_cast<const char*>(payload.data.data()),
           std::streamsize(payload.data.size() * sizeof(double)));
  if (!os) throw Error(ErrorCode::io, "write_grid: write failed for " + path.string());
}

GridPayload read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "read_grid: cannot open " + path.string());
  std::uint32_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 4);
  if (!is || len == 0 || len > (1u << 24))
    throw Error(ErrorCode::io, "read_grid: corrupt header length");
  std::string text(len, '\0');
  is.read(text.data(), len);
  if (!is) throw Error(ErrorCode::io, "read_grid: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("read_grid: bad header: ") + e.what());
  }
  GridPayload p;
  try {
    p.name = header.value("name", std::string{});
    p.dims = header.at("dims").get<std::vector<int>>();
    p.lo = header.at("lo").get<std::vector<double>>();
    p.hi = header.at("hi").get<std::vector<double>>();
    if (header.at("dtype") != "float64" || header.at("endian") != "little")
      throw Error(ErrorCode::io, "read_grid: unsupported payload encoding");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, std::string("read_grid: bad header: ") + e.what());
  }
  p.data.resize(payload_count(p));
  is.read(reinterpret_cast<char*>(p.data.data()),
          std::streamsize(p.data.size() * sizeof(double)));
  if (!is) throw Error(ErrorCode::io, "read_grid: truncated payload");
  return p;
}

std::string grid_csv(const GridPayload& p) {
  if (p.dims.size() > 2)
    throw Error(ErrorCode::dimension, "grid_csv: only 1D and 2D grids");
  std::string out;
  const int nd = int(p.dims.size());
  out += (nd == 1) ? "x1,value\n" : "x1,x2,value\n";
  const int n0 = p.dims[0];
  const int n1 = (nd == 2) ? p.dims[1] : 1;
  for (int i = 0; i < n0; ++i) {
    const double x0 =
        p.lo[0] + (p.hi[0] - p.lo[0]) * (n0 > 1 ? double(i) / (n0 - 1) : 0.0);
    for (int j = 0; j < n1; ++j) {
      out += format_exact(x0);
      if (nd == 2) {
        const double x1 =
            p.lo[1] + (p.hi[1] - p.lo[1]) * (n1 > 1 ? double(j) / (n1 - 1) : 0.0);
        out += ",";
        out += format_exact(x1);
      }
      out += ",";
      out += format_exact(p.data[std::size_t(i) * n1 + j]);
      out += "\n";
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "write_csv: cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw Error(ErrorCode::dimension, "write_csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_exact(row[i]);
    os << "\n";
  }
  if (!os) throw Error(ErrorCode::io, "write_csv: write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "write_json: cannot open " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw Error(ErrorCode::io, "write_json: write failed for " + path.string());
}

}  // namespace carleman
