#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "slipstokes/grid.hpp"

namespace slipstokes {
namespace io {

using json = nlohmann::json;

/// On-disk field format: 8-byte magic, u32 little-endian header length, JSON
/// header (extent, nodes, rank, component order), then the component planes
/// as row-major little-endian float64.
inline constexpr char kFieldMagic[8] = {'S', 'S', 'G', 'F', 'L', 'D', '1', '\n'};

void write_field(const std::string& path, const GridField& f);

/// Rejects bad magic, malformed headers, truncated payloads and NaNs.
GridField read_field(const std::string& path);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

/// CSV with %.17g numeric formatting (deterministic round-trip).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

}  // namespace io
}  // namespace slipstokes
