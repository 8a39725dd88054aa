#include "ux/grid_io.hpp"

#include <bit>
#include <fstream>
#include <set>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "file payloads are little-endian; big-endian hosts are unsupported");

namespace ux::io {

using nlohmann::json;

void write_wgrid(const std::string& path, const grid::WeatherGrid& g) {
  g.validate();
  json header = {
      {"schema_version", 1},
      {"height", g.height},
      {"width", g.width},
      {"channels", g.channels},
      {"variables", g.variables},
      {"lat_min", g.bounds.lat_min},
      {"lat_max", g.bounds.lat_max},
      {"lon_min", g.bounds.lon_min},
      {"lon_max", g.bounds.lon_max},
      {"timestamp", g.timestamp.iso8601()},
      {"normalized", g.normalized},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << header.dump() << "\n";
  std::vector<float> payload(g.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) payload[i] = static_cast<float>(g.values[i]);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw FormatError("short write: " + path);
}

grid::WeatherGrid read_wgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header line: " + path);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError("bad .wgrid header in " + path + ": " + e.what());
  }
  if (header.value("schema_version", 0) != 1)
    throw FormatError("unsupported .wgrid schema_version in " + path);

  grid::WeatherGrid g(header.at("height").get<int>(), header.at("width").get<int>(),
                      header.at("channels").get<int>());
  if (header.contains("variables")) g.variables = header["variables"].get<std::vector<std::string>>();
  if (static_cast<int>(g.variables.size()) != g.channels)
    throw FormatError("variable name count does not match channels in " + path);
  g.bounds.lat_min = header.at("lat_min").get<double>();
  g.bounds.lat_max = header.at("lat_max").get<double>();
  g.bounds.lon_min = header.at("lon_min").get<double>();
  g.bounds.lon_max = header.at("lon_max").get<double>();
  g.timestamp = Timestamp::parse(header.at("timestamp").get<std::string>());
  g.normalized = header.value("normalized", false);

  std::vector<float> payload(g.values.size());
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(payload.size() * sizeof(float)))
    throw FormatError("truncated .wgrid payload: " + path);
  for (std::size_t i = 0; i < payload.size(); ++i) g.values[i] = payload[i];
  g.validate();
  return g;
}

void write_events(const std::string& path, const std::vector<grid::EventRecord>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  for (const auto& e : events) {
    json j = {
        {"timestamp", e.timestamp.iso8601()},
        {"vertices",
         {{e.vertices[0][0], e.vertices[0][1]},
          {e.vertices[1][0], e.vertices[1][1]},
          {e.vertices[2][0], e.vertices[2][1]},
          {e.vertices[3][0], e.vertices[3][1]}}},
        {"types", e.types},
    };
    out << j.dump() << "\n";
  }
}

std::vector<grid::EventRecord> read_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);
  std::vector<grid::EventRecord> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad event JSON: " + e.what());
    }
    grid::EventRecord e;
    e.timestamp = Timestamp::parse(j.at("timestamp").get<std::string>());
    const auto& verts = j.at("vertices");
    if (verts.size() != 4)
      throw FormatError(path + ":" + std::to_string(line_no) + ": event needs exactly 4 vertices");
    for (int v = 0; v < 4; ++v) {
      e.vertices[static_cast<std::size_t>(v)][0] = verts[v][0].get<double>();
      e.vertices[static_cast<std::size_t>(v)][1] = verts[v][1].get<double>();
    }
    e.types = j.at("types").get<std::vector<std::string>>();
    if (e.types.empty())
      throw FormatError(path + ":" + std::to_string(line_no) + ": event has no types");
    events.push_back(std::move(e));
  }
  return events;
}

grid::EventTypeRegistry registry_from_events(const std::vector<grid::EventRecord>& events) {
  std::set<std::string> names;
  for (const auto& e : events) names.insert(e.types.begin(), e.types.end());
  return grid::EventTypeRegistry(std::vector<std::string>(names.begin(), names.end()));
}

}  // namespace ux::io
