#include "cglab/trips.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cglab/types.hpp"

namespace cglab {

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(Errc::invalid_argument, "cannot parse " + std::string(what) + ": '" +
                                            std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(delimiter, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

Date Timestamp::date() const {
  const auto days = minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440;
  return Date{std::chrono::days{days}};
}

int Timestamp::minute_of_day() const {
  const auto m = minutes % 1440;
  return static_cast<int>(m < 0 ? m + 1440 : m);
}

Timestamp make_timestamp(Date day, int minute_of_day) {
  return Timestamp{static_cast<std::int64_t>(day.time_since_epoch().count()) * 1440 + minute_of_day};
}

Date parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw Error(Errc::invalid_argument, "cannot parse date: '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{parse_int(text.substr(0, 4), "year")},
                                        std::chrono::month{static_cast<unsigned>(
                                            parse_int(text.substr(5, 2), "month"))},
                                        std::chrono::day{static_cast<unsigned>(
                                            parse_int(text.substr(8, 2), "day"))}};
  if (!ymd.ok()) throw Error(Errc::invalid_argument, "invalid date: '" + std::string(text) + "'");
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

bool is_weekday(Date d) {
  const std::chrono::weekday wd{d};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

Timestamp parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw Error(Errc::invalid_argument, "cannot parse timestamp: '" + std::string(text) + "'");
  }
  const Date day = parse_date(text.substr(0, 10));
  const int hh = parse_int(text.substr(11, 2), "hour");
  const int mm = parse_int(text.substr(14, 2), "minute");
  if (hh > 23 || mm > 59) {
    throw Error(Errc::invalid_argument, "invalid time of day: '" + std::string(text) + "'");
  }
  return make_timestamp(day, hh * 60 + mm);
}

std::string format_timestamp(Timestamp ts) {
  const int m = ts.minute_of_day();
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
  return format_date(ts.date()) + "T" + buf + ":00";
}

void validate_trip(const TripRecord& trip) {
  if (trip.start > trip.end) {
    throw Error(Errc::invalid_argument, "trip " + trip.taxi_id + " ends before it starts");
  }
  if (trip.pickup_ca < 1 || trip.pickup_ca > 77 || trip.dropoff_ca < 1 || trip.dropoff_ca > 77) {
    throw Error(Errc::invalid_argument, "trip " + trip.taxi_id + " has a CA code outside 1..77");
  }
}

std::vector<TripRecord> read_trips(std::istream& in, char delimiter) {
  std::string line;
  if (!std::getline(in, line)) return {};
  constexpr std::array<std::string_view, 5> kColumns = {"taxi_id", "start_ts", "end_ts",
                                                        "pickup_ca", "dropoff_ca"};
  std::array<std::size_t, 5> col{};
  {
    const auto header = split(line, delimiter);
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      bool found = false;
      for (std::size_t h = 0; h < header.size(); ++h) {
        if (header[h] == kColumns[c]) {
          col[c] = h;
          found = true;
        }
      }
      if (!found) {
        throw Error(Errc::invalid_argument, "trip file header lacks column " + std::string(kColumns[c]));
      }
    }
  }
  std::vector<TripRecord> trips;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    for (auto c : col) {
      if (c >= fields.size()) {
        throw Error(Errc::invalid_argument, "trip file line " + std::to_string(line_no) + " is short");
      }
    }
    TripRecord t;
    t.taxi_id = std::string(fields[col[0]]);
    t.start = parse_timestamp(fields[col[1]]);
    t.end = parse_timestamp(fields[col[2]]);
    t.pickup_ca = parse_int(fields[col[3]], "pickup_ca");
    t.dropoff_ca = parse_int(fields[col[4]], "dropoff_ca");
    validate_trip(t);
    trips.push_back(std::move(t));
  }
  return trips;
}

std::vector<TripRecord> read_trips_file(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open trip file " + path);
  return read_trips(in, delimiter);
}

void write_trips(std::ostream& out, const std::vector<TripRecord>& trips, char delimiter) {
  out << "taxi_id" << delimiter << "start_ts" << delimiter << "end_ts" << delimiter << "pickup_ca"
      << delimiter << "dropoff_ca\n";
  for (const auto& t : trips) {
    out << t.taxi_id << delimiter << format_timestamp(t.start) << delimiter
        << format_timestamp(t.end) << delimiter << t.pickup_ca << delimiter << t.dropoff_ca << '\n';
  }
}

}  // namespace cglab
