#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ux/errors.hpp"
#include "ux/tensor.hpp"
#include "ux/timestamp.hpp"

namespace ux::grid {

/// Geographic extent of a grid; the affine lat/lon -> cell mapping is derived
/// from it. Row 0 sits at lat_min, column 0 at lon_min.
struct GeoBounds {
  double lat_min = 21.1;
  double lat_max = 52.6;
  double lon_min = 225.9;
  double lon_max = 299.1;

  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
};

/// Dense H x W x C snapshot of atmospheric variables at one timestep.
/// Values are stored row-major in (h, w, c) order.
struct WeatherGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;
  std::vector<std::string> variables;
  GeoBounds bounds;
  Timestamp timestamp;
  bool normalized = false;

  WeatherGrid() = default;
  WeatherGrid(int h, int w, int c);

  double& at(int h, int w, int c) {
    return values[(static_cast<std::size_t>(h) * width + w) * channels + c];
  }
  double at(int h, int w, int c) const {
    return values[(static_cast<std::size_t>(h) * width + w) * channels + c];
  }
  std::int64_t cell_count() const {
    return static_cast<std::int64_t>(height) * width * channels;
  }

  /// Enforces finite values and positive dims; called after construction and IO.
  void validate() const;
};

/// Row-major tiling of a grid into uniform a_h x a_w x C regions.
/// Region r covers rows [r_h*a_h, (r_h+1)*a_h) and cols [r_w*a_w, (r_w+1)*a_w)
/// with r_h = r / regions_w, r_w = r % regions_w.
struct RegionPartition {
  int region_h = 0;  // a_h
  int region_w = 0;  // a_w
  int regions_h = 0;  // H' = H / a_h
  int regions_w = 0;  // W' = W / a_w
  int channels = 0;
  std::vector<std::vector<double>> regions;  // each a_h*a_w*C, (h,w,c) order

  // Grid metadata carried through so merge can reconstruct the original.
  std::vector<std::string> variables;
  GeoBounds bounds;
  Timestamp timestamp;
  bool normalized = false;

  int region_count() const { return regions_h * regions_w; }
  int grid_height() const { return regions_h * region_h; }
  int grid_width() const { return regions_w * region_w; }
};

RegionPartition partition_regions(const WeatherGrid& grid, int a_h, int a_w);
WeatherGrid merge_regions(const RegionPartition& partition);

/// Registry of the M extreme event type names; index M is the implicit
/// "normal" type used in multi-hot region labels.
class EventTypeRegistry {
 public:
  EventTypeRegistry() = default;
  explicit EventTypeRegistry(std::vector<std::string> names);

  int extreme_types() const { return static_cast<int>(names_.size()); }      // M
  int total_types() const { return extreme_types() + 1; }                    // M' = M+1
  int normal_index() const { return extreme_types(); }
  int index_of(const std::string& name) const;  // throws BoundsError if unknown
  const std::string& name_of(int index) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

/// Extreme event annotation: four (lat, lon) corners plus one or more type
/// names. The rasterized footprint is the axis-aligned bounding box of the
/// corners.
struct EventRecord {
  Timestamp timestamp;
  std::array<std::array<double, 2>, 4> vertices{};  // (lat, lon) per corner
  std::vector<std::string> types;
};

struct ExtremeMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;  // 1 = inside >=1 event box

  ExtremeMask() = default;
  ExtremeMask(int h, int w) : height(h), width(w), cells(static_cast<std::size_t>(h) * w, 0) {}
  std::uint8_t at(int h, int w) const { return cells[static_cast<std::size_t>(h) * width + w]; }
  std::uint8_t& at(int h, int w) { return cells[static_cast<std::size_t>(h) * width + w]; }
  std::int64_t popcount() const;
};

/// Fractional grid coordinates of a geographic point: (lat_min, lon_min) maps
/// to (0, 0) and (lat_max, lon_max) to (H, W). Cell (h, w) owns centers
/// (h + 0.5, w + 0.5).
std::array<double, 2> geo_to_fractional(const GeoBounds& bounds, int height, int width, double lat,
                                        double lon);

ExtremeMask rasterize_events(const std::vector<EventRecord>& events, int height, int width,
                             const GeoBounds& bounds);

/// Per-region multi-hot type vectors over M'=M+1 types; the final bit is the
/// "normal" type, set exactly when no extreme bit is.
std::vector<std::vector<std::uint8_t>> region_labels(const RegionPartition& partition,
                                                     const ExtremeMask& mask,
                                                     const std::vector<EventRecord>& events,
                                                     const EventTypeRegistry& registry);

}  // namespace ux::grid
