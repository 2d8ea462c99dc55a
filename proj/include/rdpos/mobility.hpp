#pragma once

#include "rdpos/ids.hpp"
#include "rdpos/opinion.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdpos {

struct BoundingBox {
  double lat_min{0}, lat_max{0}, lon_min{0}, lon_max{0};

  /// Downtown San Francisco observation area of the cab dataset.
  static constexpr BoundingBox san_francisco() { return {37.7, 37.81, -122.52, -122.38}; }
  static constexpr BoundingBox whole_globe() { return {-90.0, 90.0, -180.0, 180.0}; }

  bool strictly_contains(double lat, double lon) const {
    return lat > lat_min && lat < lat_max && lon > lon_min && lon < lon_max;
  }
  void validate() const;
};

struct TracePoint {
  VehicleId vehicle;
  double latitude{0};
  double longitude{0};
  double timestamp{0};  // seconds since epoch

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceParse {
  std::vector<TracePoint> points;
  std::size_t malformed{0};
  std::size_t duplicates{0};
};

/// Parses one vehicle's trace: lines of "latitude longitude occupancy
/// unix_time". Malformed lines are counted and skipped; repeated timestamps
/// keep the first occurrence. Output is ascending in time. Throws TraceError
/// when no valid point remains.
TraceParse parse_trace(std::istream& in, VehicleId vehicle);

struct TraceSet {
  std::vector<std::string> vehicle_names;  // indexed by VehicleId::value
  std::vector<TracePoint> points;          // grouped by vehicle, time ascending
  std::size_t malformed{0};
};

/// Loads every regular file in `dir` as one vehicle. Vehicle ids follow the
/// sorted file names; the name (minus extension) is kept for reporting.
TraceSet load_trace_dir(const std::filesystem::path& dir);

/// Keeps points strictly inside the box. A vehicle whose points all fall
/// outside simply has no entries left.
std::vector<TracePoint> filter_region(std::span<const TracePoint> points, const BoundingBox& box);

struct RsuSite {
  CandidateId rsu;
  double latitude{0};
  double longitude{0};
  double coverage_radius_m{400};

  friend bool operator==(const RsuSite&, const RsuSite&) = default;
};

/// Great-circle distance in meters.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

/// Places `n` sites at the cell centers of a ceil(sqrt n)^2 grid over the box
/// (row-major, truncated to n); radii uniform in `radius_range_m`.
std::vector<RsuSite> deploy_rsus(std::size_t n, const BoundingBox& box, std::pair<double, double> radius_range_m,
                                 std::uint64_t seed);

enum class Mode { honest, malicious };

struct BehaviorInterval {
  double start{0};
  double end{0};
  Mode mode{Mode::honest};
};

/// How one RSU treats the vehicles it serves over time. In malicious mode the
/// RSU misbehaves toward each served target with probability
/// `misbehavior_rate`; an empty target set means every non-partner vehicle.
/// Collusion partners always get good service.
struct BehaviorProfile {
  CandidateId entity;
  std::vector<BehaviorInterval> schedule;
  std::set<VehicleId> collusion_partners;
  std::set<VehicleId> targets;
  double misbehavior_rate{1.0};

  /// Honest outside every scheduled interval.
  Mode mode_at(double t) const;
  bool targets_vehicle(VehicleId v) const;
  /// Throws std::invalid_argument on overlapping or inverted intervals.
  void validate() const;
};

struct InteractionParams {
  double interactions_per_week{125.0};
  /// Scenario seconds represented by one trace second when calibrating the
  /// weekly frequency; values above 1 compress a longer period into the run.
  double time_compression{1.0};
  double link_quality_min{0.6};
  double link_quality_max{1.0};

  void validate() const;
};

struct InteractionRecord {
  VehicleId vehicle;
  CandidateId rsu;
  double timestamp{0};
  Outcome outcome{Outcome::positive};
  double link_quality{1.0};

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct InteractionStream {
  std::vector<InteractionRecord> records;  // sorted by (timestamp, vehicle, rsu)
  double fire_probability{0};              // per coverage epoch
  std::size_t coverage_epochs{0};
  std::size_t covered_pairs{0};
};

/// Every trace point inside an RSU's coverage disc is one coverage epoch and
/// fires an interaction with a probability calibrated to the weekly target.
InteractionStream interaction_events(std::span<const TracePoint> traces, std::span<const RsuSite> sites,
                                     std::span<const BehaviorProfile> behaviors, const InteractionParams& params,
                                     std::uint64_t seed);

/// Random-waypoint motion inside the box. Each leg is split into whole time
/// steps at a constant speed within `speed_range_kmh`.
std::vector<TracePoint> synthetic_traces(std::size_t n_vehicles, const BoundingBox& box,
                                         std::pair<double, double> speed_range_kmh, double duration_s,
                                         double step_s, std::uint64_t seed, double start_time = 0.0);

void write_event_lines(std::ostream& out, std::span<const InteractionRecord> records);

}  // namespace rdpos
