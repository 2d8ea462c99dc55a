#include "rdpos/mobility.hpp"
#include "rdpos/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <string_view>
#include <tuple>
#include <unordered_map>

namespace rdpos {

namespace {

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kWeekS = 7.0 * 24 * 3600;
constexpr double kDeg = std::numbers::pi / 180.0;

template <class T>
bool parse_token(std::string_view tok, T& out) {
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Buckets sites on a lat/lon grid whose cells are at least as wide as the
// largest coverage radius, so a query only inspects the 3x3 neighbourhood.
class SiteIndex {
 public:
  explicit SiteIndex(std::span<const RsuSite> sites) : sites_(sites) {
    double max_r = 1.0;
    double lat_sum = 0.0;
    for (const auto& s : sites) {
      max_r = std::max(max_r, s.coverage_radius_m);
      lat_sum += s.latitude;
    }
    const double lat0 = sites.empty() ? 0.0 : lat_sum / static_cast<double>(sites.size());
    cell_lat_ = max_r / (kEarthRadiusM * kDeg) * 1.01;
    double min_cos = 1.0;
    for (const auto& s : sites) min_cos = std::min(min_cos, std::cos(s.latitude * kDeg));
    min_cos = std::max(min_cos, std::cos(std::min(89.0, std::abs(lat0) + 1.0) * kDeg));
    cell_lon_ = cell_lat_ / std::max(min_cos, 1e-3);
    for (std::size_t i = 0; i < sites.size(); ++i) cells_[key(cell_of(sites[i].latitude, sites[i].longitude))].push_back(i);
  }

  template <class F>
  void for_each_covering(double lat, double lon, F&& f) const {
    const auto [ci, cj] = cell_of(lat, lon);
    scratch_.clear();
    for (long di = -1; di <= 1; ++di)
      for (long dj = -1; dj <= 1; ++dj) {
        const auto it = cells_.find(key({ci + di, cj + dj}));
        if (it == cells_.end()) continue;
        for (auto idx : it->second) {
          const auto& s = sites_[idx];
          if (haversine_m(lat, lon, s.latitude, s.longitude) <= s.coverage_radius_m) scratch_.push_back(idx);
        }
      }
    std::sort(scratch_.begin(), scratch_.end());
    for (auto idx : scratch_) f(idx);
  }

 private:
  std::pair<long, long> cell_of(double lat, double lon) const {
    return {static_cast<long>(std::floor(lat / cell_lat_)), static_cast<long>(std::floor(lon / cell_lon_))};
  }
  static std::uint64_t key(std::pair<long, long> c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.first)) << 32) |
           static_cast<std::uint32_t>(c.second);
  }

  std::span<const RsuSite> sites_;
  double cell_lat_{1}, cell_lon_{1};
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
  mutable std::vector<std::size_t> scratch_;
};

// Groups points by vehicle keeping each vehicle's relative order.
std::map<VehicleId, std::vector<TracePoint>> by_vehicle(std::span<const TracePoint> traces) {
  std::map<VehicleId, std::vector<TracePoint>> out;
  for (const auto& p : traces) out[p.vehicle].push_back(p);
  return out;
}

}  // namespace

void BoundingBox::validate() const {
  if (!(lat_min < lat_max) || !(lon_min < lon_max)) throw std::invalid_argument("bounding box must have min < max");
}

TraceParse parse_trace(std::istream& in, VehicleId vehicle) {
  TraceParse out;
  std::string line;
  while (std::getline(in, line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    double lat = 0, lon = 0, ts = 0;
    long long occupancy = 0, unix_time = 0;
    const bool ok = toks.size() == 4 && parse_token(toks[0], lat) && parse_token(toks[1], lon) &&
                    parse_token(toks[2], occupancy) && parse_token(toks[3], unix_time) && lat >= -90 &&
                    lat <= 90 && lon >= -180 && lon <= 180;
    if (!ok) {
      ++out.malformed;
      continue;
    }
    ts = static_cast<double>(unix_time);
    out.points.push_back({vehicle, lat, lon, ts});
  }
  if (out.points.empty()) throw TraceError("trace for " + to_string(vehicle) + " has no valid points");

  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const TracePoint& a, const TracePoint& b) { return a.timestamp < b.timestamp; });
  const auto last = std::unique(out.points.begin(), out.points.end(),
                                [](const TracePoint& a, const TracePoint& b) { return a.timestamp == b.timestamp; });
  out.duplicates = static_cast<std::size_t>(out.points.end() - last);
  out.points.erase(last, out.points.end());
  return out;
}

TraceSet load_trace_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw TraceError("trace directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw TraceError("trace directory is empty: " + dir.string());

  TraceSet set;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i]);
    if (!in) throw TraceError("cannot open " + files[i].string());
    const VehicleId id{static_cast<std::uint32_t>(i)};
    auto parsed = parse_trace(in, id);
    set.vehicle_names.push_back(files[i].stem().string());
    set.malformed += parsed.malformed;
    set.points.insert(set.points.end(), parsed.points.begin(), parsed.points.end());
  }
  return set;
}

std::vector<TracePoint> filter_region(std::span<const TracePoint> points, const BoundingBox& box) {
  box.validate();
  std::vector<TracePoint> out;
  for (const auto& p : points)
    if (box.strictly_contains(p.latitude, p.longitude)) out.push_back(p);
  return out;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double dlat = (lat2 - lat1) * kDeg;
  const double dlon = (lon2 - lon1) * kDeg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<RsuSite> deploy_rsus(std::size_t n, const BoundingBox& box, std::pair<double, double> radius_range_m,
                                 std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("deploy_rsus needs at least one site");
  box.validate();
  if (!(radius_range_m.first > 0) || radius_range_m.second < radius_range_m.first)
    throw std::invalid_argument("coverage radius range must be positive and ordered");

  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double dlat = (box.lat_max - box.lat_min) / static_cast<double>(side);
  const double dlon = (box.lon_max - box.lon_min) / static_cast<double>(side);
  Rng rng(derive_seed(seed, "rsu-radius"));
  std::vector<RsuSite> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = i / side, col = i % side;
    RsuSite s;
    s.rsu = CandidateId{static_cast<std::uint32_t>(i)};
    s.latitude = box.lat_min + (static_cast<double>(row) + 0.5) * dlat;
    s.longitude = box.lon_min + (static_cast<double>(col) + 0.5) * dlon;
    s.coverage_radius_m = rng.uniform(radius_range_m.first, radius_range_m.second);
    out.push_back(s);
  }
  return out;
}

Mode BehaviorProfile::mode_at(double t) const {
  for (const auto& iv : schedule)
    if (t >= iv.start && t < iv.end) return iv.mode;
  return Mode::honest;
}

bool BehaviorProfile::targets_vehicle(VehicleId v) const {
  if (collusion_partners.contains(v)) return false;
  return targets.empty() || targets.contains(v);
}

void BehaviorProfile::validate() const {
  auto sorted = schedule;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].start < sorted[i].end)) throw std::invalid_argument("behavior interval must have start < end");
    if (i > 0 && sorted[i].start < sorted[i - 1].end) throw std::invalid_argument("behavior intervals overlap");
  }
  if (misbehavior_rate < 0.0 || misbehavior_rate > 1.0) throw std::invalid_argument("misbehavior_rate outside [0,1]");
}

void InteractionParams::validate() const {
  if (!(interactions_per_week > 0)) throw std::invalid_argument("interactions_per_week must be positive");
  if (!(time_compression > 0)) throw std::invalid_argument("time_compression must be positive");
  if (!(link_quality_min >= 0 && link_quality_min <= link_quality_max && link_quality_max <= 1))
    throw std::invalid_argument("link quality range must satisfy 0 <= min <= max <= 1");
}

InteractionStream interaction_events(std::span<const TracePoint> traces, std::span<const RsuSite> sites,
                                     std::span<const BehaviorProfile> behaviors, const InteractionParams& params,
                                     std::uint64_t seed) {
  params.validate();
  InteractionStream out;
  if (traces.empty() || sites.empty()) return out;

  const SiteIndex index(sites);
  std::map<CandidateId, const BehaviorProfile*> behavior_of;
  for (const auto& b : behaviors) behavior_of[b.entity] = &b;

  // Pass 1: coverage epochs, for calibration.
  double t_min = traces.front().timestamp, t_max = t_min;
  std::set<std::pair<VehicleId, std::size_t>> pairs;
  for (const auto& p : traces) {
    t_min = std::min(t_min, p.timestamp);
    t_max = std::max(t_max, p.timestamp);
    index.for_each_covering(p.latitude, p.longitude, [&](std::size_t s) {
      ++out.coverage_epochs;
      pairs.insert({p.vehicle, s});
    });
  }
  out.covered_pairs = pairs.size();
  if (out.coverage_epochs == 0) return out;

  const double span_s = std::max(t_max - t_min, 1.0);
  const double weeks = span_s * params.time_compression / kWeekS;
  const double epochs_per_pair_week =
      static_cast<double>(out.coverage_epochs) / static_cast<double>(out.covered_pairs) / weeks;
  out.fire_probability = std::min(1.0, params.interactions_per_week / epochs_per_pair_week);

  // Pass 2: per-vehicle streams, so results do not depend on vehicle order.
  for (const auto& [vehicle, points] : by_vehicle(traces)) {
    Rng rng(derive_seed(seed, "interaction", vehicle.value));
    for (const auto& p : points) {
      index.for_each_covering(p.latitude, p.longitude, [&](std::size_t s) {
        if (!rng.bernoulli(out.fire_probability)) return;
        InteractionRecord rec;
        rec.vehicle = vehicle;
        rec.rsu = sites[s].rsu;
        rec.timestamp = p.timestamp;
        rec.link_quality = rng.uniform(params.link_quality_min, params.link_quality_max);
        const double misbehave_draw = rng.uniform();
        const auto it = behavior_of.find(rec.rsu);
        if (it != behavior_of.end()) {
          const auto& b = *it->second;
          if (b.mode_at(p.timestamp) == Mode::malicious && b.targets_vehicle(vehicle) &&
              misbehave_draw < b.misbehavior_rate)
            rec.outcome = Outcome::negative;
        }
        out.records.push_back(rec);
      });
    }
  }
  std::sort(out.records.begin(), out.records.end(), [](const InteractionRecord& a, const InteractionRecord& b) {
    return std::tie(a.timestamp, a.vehicle, a.rsu) < std::tie(b.timestamp, b.vehicle, b.rsu);
  });
  return out;
}

std::vector<TracePoint> synthetic_traces(std::size_t n_vehicles, const BoundingBox& box,
                                         std::pair<double, double> speed_range_kmh, double duration_s,
                                         double step_s, std::uint64_t seed, double start_time) {
  if (n_vehicles == 0) throw std::invalid_argument("synthetic_traces needs at least one vehicle");
  if (!(step_s > 0)) throw std::invalid_argument("trace step must be positive");
  if (duration_s < 0) throw std::invalid_argument("trace duration must be nonnegative");
  if (!(speed_range_kmh.first > 0) || speed_range_kmh.second < speed_range_kmh.first)
    throw std::invalid_argument("speed range must be positive and ordered");
  box.validate();

  const double lat0 = 0.5 * (box.lat_min + box.lat_max);
  const double m_per_lat = kEarthRadiusM * kDeg;
  const double m_per_lon = m_per_lat * std::cos(lat0 * kDeg);
  const double v_min = speed_range_kmh.first / 3.6, v_max = speed_range_kmh.second / 3.6;
  const auto steps = static_cast<std::size_t>(std::floor(duration_s / step_s + 1e-9));

  std::vector<TracePoint> out;
  out.reserve(n_vehicles * (steps + 1));
  for (std::size_t v = 0; v < n_vehicles; ++v) {
    Rng rng(derive_seed(seed, "trace", v));
    const VehicleId id{static_cast<std::uint32_t>(v)};
    double lat = rng.uniform(box.lat_min, box.lat_max);
    double lon = rng.uniform(box.lon_min, box.lon_max);
    out.push_back({id, lat, lon, start_time});

    std::size_t done = 0;
    while (done < steps) {
      // Draw a waypoint and a speed such that the leg is a whole number of
      // steps at a speed inside the allowed range.
      double wlat = lat, wlon = lon;
      std::size_t legs = 1;
      bool found = false;
      for (int attempt = 0; attempt < 256 && !found; ++attempt) {
        wlat = rng.uniform(box.lat_min, box.lat_max);
        wlon = rng.uniform(box.lon_min, box.lon_max);
        const double d = std::hypot((wlat - lat) * m_per_lat, (wlon - lon) * m_per_lon);
        const double v_draw = rng.uniform(v_min, v_max);
        legs = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(d / (v_draw * step_s))));
        const double v_eff = d / (static_cast<double>(legs) * step_s);
        found = v_eff >= v_min && v_eff <= v_max;
      }
      if (!found) {
        // Box too small for the speed range: move one step toward the last
        // waypoint at the slowest allowed speed, stopping at the waypoint.
        const double d = std::hypot((wlat - lat) * m_per_lat, (wlon - lon) * m_per_lon);
        const double frac = d > 0 ? std::min(1.0, v_min * step_s / d) : 0.0;
        wlat = lat + frac * (wlat - lat);
        wlon = lon + frac * (wlon - lon);
        legs = 1;
      }
      const double from_lat = lat, from_lon = lon;
      for (std::size_t k = 1; k <= legs && done < steps; ++k, ++done) {
        const double f = static_cast<double>(k) / static_cast<double>(legs);
        lat = from_lat + f * (wlat - from_lat);
        lon = from_lon + f * (wlon - from_lon);
        out.push_back({id, lat, lon, start_time + static_cast<double>(done + 1) * step_s});
      }
    }
  }
  return out;
}

void write_event_lines(std::ostream& out, std::span<const InteractionRecord> records) {
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%s,%.10g\n", to_string(r.vehicle).c_str(), to_string(r.rsu).c_str(),
                  r.timestamp, r.outcome == Outcome::positive ? "positive" : "negative", r.link_quality);
    out << buf;
  }
}

}  // namespace rdpos
