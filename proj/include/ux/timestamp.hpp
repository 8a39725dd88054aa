#pragma once

#include <cstdint>
#include <string>

namespace ux {

/// Calendar instant at hourly resolution, serialized as ISO-8601 UTC
/// ("YYYY-MM-DDTHH:MM:SSZ"). Month/day/hour drive the time embeddings and
/// climatology buckets.
struct Timestamp {
  int year = 2024;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;   // 0..23
  int minute = 0;
  int second = 0;

  static Timestamp parse(const std::string& iso);
  std::string iso8601() const;

  /// Valid Gregorian date with in-range time-of-day fields.
  void validate() const;

  Timestamp plus_hours(std::int64_t hours) const;

  bool operator==(const Timestamp&) const = default;
};

}  // namespace ux
