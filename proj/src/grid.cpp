#include "ux/grid.hpp"

#include <algorithm>
#include <cmath>

namespace ux::grid {

WeatherGrid::WeatherGrid(int h, int w, int c) : height(h), width(w), channels(c) {
  if (h < 1 || w < 1 || c < 1)
    throw DimensionError("grid dims must be >= 1, got " + std::to_string(h) + "x" +
                         std::to_string(w) + "x" + std::to_string(c));
  values.assign(static_cast<std::size_t>(h) * w * c, 0.0);
  variables.resize(static_cast<std::size_t>(c));
  for (int i = 0; i < c; ++i) variables[static_cast<std::size_t>(i)] = "var" + std::to_string(i);
}

void WeatherGrid::validate() const {
  if (height < 1 || width < 1 || channels < 1) throw DimensionError("grid dims must be >= 1");
  if (static_cast<std::int64_t>(values.size()) != cell_count())
    throw StructureError("grid value buffer does not match dims");
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("grid contains non-finite values");
}

RegionPartition partition_regions(const WeatherGrid& grid, int a_h, int a_w) {
  if (a_h < 1 || grid.height % a_h != 0)
    throw DimensionError("region height " + std::to_string(a_h) + " does not divide grid height " +
                         std::to_string(grid.height));
  if (a_w < 1 || grid.width % a_w != 0)
    throw DimensionError("region width " + std::to_string(a_w) + " does not divide grid width " +
                         std::to_string(grid.width));

  RegionPartition part;
  part.region_h = a_h;
  part.region_w = a_w;
  part.regions_h = grid.height / a_h;
  part.regions_w = grid.width / a_w;
  part.channels = grid.channels;
  part.variables = grid.variables;
  part.bounds = grid.bounds;
  part.timestamp = grid.timestamp;
  part.normalized = grid.normalized;

  const int c = grid.channels;
  part.regions.resize(static_cast<std::size_t>(part.region_count()));
  for (int r = 0; r < part.region_count(); ++r) {
    const int rh = r / part.regions_w;
    const int rw = r % part.regions_w;
    auto& block = part.regions[static_cast<std::size_t>(r)];
    block.resize(static_cast<std::size_t>(a_h) * a_w * c);
    for (int i = 0; i < a_h; ++i)
      for (int j = 0; j < a_w; ++j)
        for (int k = 0; k < c; ++k)
          block[(static_cast<std::size_t>(i) * a_w + j) * c + k] =
              grid.at(rh * a_h + i, rw * a_w + j, k);
  }
  return part;
}

WeatherGrid merge_regions(const RegionPartition& part) {
  if (static_cast<int>(part.regions.size()) != part.region_count())
    throw StructureError("partition holds " + std::to_string(part.regions.size()) +
                         " regions, expected " + std::to_string(part.region_count()));
  const std::size_t expected =
      static_cast<std::size_t>(part.region_h) * part.region_w * part.channels;
  for (const auto& block : part.regions)
    if (block.size() != expected) throw StructureError("region block has inconsistent shape");

  WeatherGrid grid(part.grid_height(), part.grid_width(), part.channels);
  grid.variables = part.variables;
  grid.bounds = part.bounds;
  grid.timestamp = part.timestamp;
  grid.normalized = part.normalized;

  const int a_h = part.region_h, a_w = part.region_w, c = part.channels;
  for (int r = 0; r < part.region_count(); ++r) {
    const int rh = r / part.regions_w;
    const int rw = r % part.regions_w;
    const auto& block = part.regions[static_cast<std::size_t>(r)];
    for (int i = 0; i < a_h; ++i)
      for (int j = 0; j < a_w; ++j)
        for (int k = 0; k < c; ++k)
          grid.at(rh * a_h + i, rw * a_w + j, k) =
              block[(static_cast<std::size_t>(i) * a_w + j) * c + k];
  }
  return grid;
}

EventTypeRegistry::EventTypeRegistry(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = static_cast<int>(i);
  if (index_.size() != names_.size()) throw ConfigError("duplicate event type names in registry");
}

int EventTypeRegistry::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw BoundsError("unregistered event type: " + name);
  return it->second;
}

const std::string& EventTypeRegistry::name_of(int index) const {
  if (index == normal_index()) {
    static const std::string kNormal = "normal";
    return kNormal;
  }
  if (index < 0 || index >= extreme_types())
    throw BoundsError("event type index out of range: " + std::to_string(index));
  return names_[static_cast<std::size_t>(index)];
}

std::int64_t ExtremeMask::popcount() const {
  std::int64_t n = 0;
  for (auto b : cells) n += b;
  return n;
}

std::array<double, 2> geo_to_fractional(const GeoBounds& bounds, int height, int width, double lat,
                                        double lon) {
  const double fh = (lat - bounds.lat_min) / (bounds.lat_max - bounds.lat_min) * height;
  const double fw = (lon - bounds.lon_min) / (bounds.lon_max - bounds.lon_min) * width;
  return {fh, fw};
}

namespace {

struct FracBox {
  double h_lo, h_hi, w_lo, w_hi;
};

FracBox event_box(const EventRecord& e, int height, int width, const GeoBounds& bounds,
                  std::size_t event_index) {
  FracBox box{1e300, -1e300, 1e300, -1e300};
  for (const auto& v : e.vertices) {
    if (!bounds.contains(v[0], v[1]))
      throw BoundsError("event " + std::to_string(event_index) + " vertex (" +
                        std::to_string(v[0]) + ", " + std::to_string(v[1]) +
                        ") outside grid bounds");
    const auto f = geo_to_fractional(bounds, height, width, v[0], v[1]);
    box.h_lo = std::min(box.h_lo, f[0]);
    box.h_hi = std::max(box.h_hi, f[0]);
    box.w_lo = std::min(box.w_lo, f[1]);
    box.w_hi = std::max(box.w_hi, f[1]);
  }
  return box;
}

// Inclusive cell-center containment along one axis: centers at i + 0.5.
void cell_span(double lo, double hi, int n, int& first, int& last) {
  first = static_cast<int>(std::ceil(lo - 0.5));
  last = static_cast<int>(std::floor(hi - 0.5));
  first = std::max(first, 0);
  last = std::min(last, n - 1);
}

}  // namespace

ExtremeMask rasterize_events(const std::vector<EventRecord>& events, int height, int width,
                             const GeoBounds& bounds) {
  ExtremeMask mask(height, width);
  for (std::size_t e = 0; e < events.size(); ++e) {
    const FracBox box = event_box(events[e], height, width, bounds, e);
    int h0, h1, w0, w1;
    cell_span(box.h_lo, box.h_hi, height, h0, h1);
    cell_span(box.w_lo, box.w_hi, width, w0, w1);
    for (int h = h0; h <= h1; ++h)
      for (int w = w0; w <= w1; ++w) mask.at(h, w) = 1;
  }
  return mask;
}

std::vector<std::vector<std::uint8_t>> region_labels(const RegionPartition& part,
                                                     const ExtremeMask& mask,
                                                     const std::vector<EventRecord>& events,
                                                     const EventTypeRegistry& registry) {
  if (mask.height != part.grid_height() || mask.width != part.grid_width())
    throw DimensionError("mask dims " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " do not match partition grid");

  const int m_total = registry.total_types();
  std::vector<std::vector<std::uint8_t>> labels(
      static_cast<std::size_t>(part.region_count()),
      std::vector<std::uint8_t>(static_cast<std::size_t>(m_total), 0));

  const int height = part.grid_height(), width = part.grid_width();
  for (std::size_t e = 0; e < events.size(); ++e) {
    const FracBox box = event_box(events[e], height, width, part.bounds, e);
    int h0, h1, w0, w1;
    cell_span(box.h_lo, box.h_hi, height, h0, h1);
    cell_span(box.w_lo, box.w_hi, width, w0, w1);
    if (h0 > h1 || w0 > w1) continue;
    const int r_h0 = h0 / part.region_h, r_h1 = h1 / part.region_h;
    const int r_w0 = w0 / part.region_w, r_w1 = w1 / part.region_w;
    for (const auto& type_name : events[e].types) {
      const int m = registry.index_of(type_name);
      for (int rh = r_h0; rh <= r_h1; ++rh)
        for (int rw = r_w0; rw <= r_w1; ++rw)
          labels[static_cast<std::size_t>(rh) * part.regions_w + rw][static_cast<std::size_t>(m)] =
              1;
    }
  }

  // Normal bit is the exclusive complement of the extreme bits.
  for (auto& row : labels) {
    bool any = false;
    for (int m = 0; m < registry.extreme_types(); ++m) any = any || row[static_cast<std::size_t>(m)];
    row[static_cast<std::size_t>(registry.normal_index())] = any ? 0 : 1;
  }
  return labels;
}

}  // namespace ux::grid
