#include "slipstokes/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; big-endian hosts are unsupported");

namespace slipstokes {
namespace io {

namespace {
const char* comp_names(int rank, int c) {
  static const char* r1[] = {"x", "y"};
  static const char* r2[] = {"xx", "xy", "yx", "yy"};
  if (rank == 0) return "scalar";
  return rank == 1 ? r1[c] : r2[c];
}
}  // namespace

void write_field(const std::string& path, const GridField& f) {
  SS_REQUIRE(!f.empty(), "write_field: empty field");
  for (double v : f.raw())
    SS_REQUIRE(std::isfinite(v), "write_field: non-finite value in payload (%s)", path.c_str());

  json hdr;
  hdr["extent"] = {f.grid().lx, f.grid().ly};
  hdr["nodes"] = {f.grid().nx, f.grid().ny};
  hdr["rank"] = f.rank();
  std::vector<std::string> comps;
  for (int c = 0; c < f.ncomp(); ++c) comps.push_back(comp_names(f.rank(), c));
  hdr["components"] = comps;
  hdr["order"] = "row-major";
  const std::string htext = hdr.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SS_REQUIRE(out.good(), "write_field: cannot open %s", path.c_str());
  out.write(kFieldMagic, 8);
  const uint32_t hlen = static_cast<uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), hlen);
  out.write(reinterpret_cast<const char*>(f.raw().data()),
            static_cast<std::streamsize>(f.raw().size() * sizeof(double)));
  SS_REQUIRE(out.good(), "write_field: write failed for %s", path.c_str());
}

GridField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  SS_REQUIRE(in.good(), "read_field: cannot open %s", path.c_str());
  char magic[8];
  in.read(magic, 8);
  SS_REQUIRE(in.gcount() == 8 && std::memcmp(magic, kFieldMagic, 8) == 0,
             "read_field: bad magic in %s", path.c_str());
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  SS_REQUIRE(in.gcount() == 4 && hlen > 0 && hlen < (1u << 20),
             "read_field: bad header length in %s", path.c_str());
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  SS_REQUIRE(static_cast<uint32_t>(in.gcount()) == hlen, "read_field: truncated header in %s",
             path.c_str());

  json hdr;
  try {
    hdr = json::parse(htext);
  } catch (const std::exception& e) {
    fail(strf("read_field: malformed header in %s: %s", path.c_str(), e.what()));
  }
  SS_REQUIRE(hdr.contains("extent") && hdr.contains("nodes") && hdr.contains("rank"),
             "read_field: header missing keys in %s", path.c_str());
  const double lx = hdr["extent"][0], ly = hdr["extent"][1];
  const int nx = hdr["nodes"][0], ny = hdr["nodes"][1];
  const int rank = hdr["rank"];
  GridField f(Grid2(lx, ly, nx, ny), rank);

  in.read(reinterpret_cast<char*>(f.raw().data()),
          static_cast<std::streamsize>(f.raw().size() * sizeof(double)));
  SS_REQUIRE(static_cast<size_t>(in.gcount()) == f.raw().size() * sizeof(double),
             "read_field: truncated payload in %s", path.c_str());
  char extra;
  in.read(&extra, 1);
  SS_REQUIRE(in.eof(), "read_field: trailing bytes in %s", path.c_str());
  for (double v : f.raw())
    SS_REQUIRE(std::isfinite(v), "read_field: non-finite value in payload of %s", path.c_str());
  return f;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SS_REQUIRE(out.good(), "write_json: cannot open %s", path.c_str());
  out << j.dump(2) << "\n";
  SS_REQUIRE(out.good(), "write_json: write failed for %s", path.c_str());
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  SS_REQUIRE(in.good(), "read_json: cannot open %s", path.c_str());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(strf("read_json: parse failure in %s: %s", path.c_str(), e.what()));
  }
  return j;
}

std::string format_double(double v) { return strf("%.17g", v); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  SS_REQUIRE(out.good(), "write_csv: cannot open %s", path.c_str());
  for (size_t k = 0; k < header.size(); ++k)
    out << header[k] << (k + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    SS_REQUIRE(row.size() == header.size(), "write_csv: row width %zu != header width %zu",
               row.size(), header.size());
    for (size_t k = 0; k < row.size(); ++k)
      out << format_double(row[k]) << (k + 1 < row.size() ? "," : "\n");
  }
  SS_REQUIRE(out.good(), "write_csv: write failed for %s", path.c_str());
}

}  // namespace io
}  // namespace slipstokes
