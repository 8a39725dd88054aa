#pragma once

#include <string>
#include <vector>

#include "ux/grid.hpp"

namespace ux::io {

/// .wgrid: one JSON header line (schema_version, dims, variable names, lat/lon
/// bounds, ISO-8601 timestamp, normalized flag) followed by H*W*C little-endian
/// f32 values in row-major (h, w, c) order.
void write_wgrid(const std::string& path, const grid::WeatherGrid& g);
grid::WeatherGrid read_wgrid(const std::string& path);

/// .events.jsonl: one JSON object per event
/// {"timestamp": ..., "vertices": [[lat,lon] x4], "types": [...]}.
void write_events(const std::string& path, const std::vector<grid::EventRecord>& events);
std::vector<grid::EventRecord> read_events(const std::string& path);

/// Sorted unique type names across a corpus of events (deterministic registry).
grid::EventTypeRegistry registry_from_events(const std::vector<grid::EventRecord>& events);

}  // namespace ux::io
