#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cglab {

using Date = std::chrono::sys_days;

/// Minutes since 1970-01-01T00:00 (timezone-naive local time).
struct Timestamp {
  std::int64_t minutes = 0;

  Date date() const;
  int minute_of_day() const;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

Timestamp make_timestamp(Date day, int minute_of_day);

/// Accepts "YYYY-MM-DDTHH:MM[:SS]" with 'T' or ' ' as the separator.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

Date parse_date(std::string_view text);
std::string format_date(Date d);
bool is_weekday(Date d);

struct TripRecord {
  std::string taxi_id;
  Timestamp start;
  Timestamp end;
  int pickup_ca = 0;
  int dropoff_ca = 0;

  friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

/// Throws Error(invalid_argument) on start > end or CA codes outside 1..77.
void validate_trip(const TripRecord& trip);

/// Delimiter-separated trip file with header
/// taxi_id,start_ts,end_ts,pickup_ca,dropoff_ca (column order taken from
/// the header).
std::vector<TripRecord> read_trips(std::istream& in, char delimiter = ',');
std::vector<TripRecord> read_trips_file(const std::string& path, char delimiter = ',');
void write_trips(std::ostream& out, const std::vector<TripRecord>& trips, char delimiter = ',');

}  // namespace cglab
