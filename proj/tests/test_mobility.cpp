#include "rdpos/mobility.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace rdpos;

namespace {

const VehicleId v0{0};
const CandidateId r0{0};

std::vector<TracePoint> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in, v0).points;
}

}  // namespace

TEST_CASE("parse_trace reads the cab line format") {
  const auto pts = parse("37.75134 -122.39488 0 1213084687\n");
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].latitude == 37.75134);
  CHECK(pts[0].longitude == -122.39488);
  CHECK(pts[0].timestamp == 1213084687.0);
}

TEST_CASE("parse_trace rejects an empty file") {
  CHECK_THROWS_AS(parse(""), TraceError);
  CHECK_THROWS_AS(parse("garbage\n1 2 3\n"), TraceError);
}

TEST_CASE("parse_trace skips malformed lines and sorts ascending") {
  std::istringstream in(
      "37.8 -122.4 1 300\n"
      "garbage\n"
      "37.7 -122.4 0 100\n"
      "91.0 -122.4 0 150\n"
      "37.7 -122.4 x 160\n"
      "37.75 -122.41 0 200\n"
      "37.76 -122.41 0 200\n");
  const auto r = parse_trace(in, v0);
  CHECK(r.malformed == 3);
  CHECK(r.duplicates == 1);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0].timestamp == 100);
  CHECK(r.points[1].timestamp == 200);
  CHECK(r.points[1].latitude == 37.75);
  CHECK(r.points[2].timestamp == 300);
}

TEST_CASE("load_trace_dir names vehicles after sorted file stems") {
  const auto dir = std::filesystem::temp_directory_path() / "rdpos_trace_dir_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "new_b.txt") << "37.75 -122.4 0 20\n37.76 -122.4 0 10\n";
  std::ofstream(dir / "new_a.txt") << "37.70 -122.4 0 5\nnot a line\n";
  const auto set = load_trace_dir(dir);
  REQUIRE(set.vehicle_names.size() == 2);
  CHECK(set.vehicle_names[0] == "new_a");
  CHECK(set.vehicle_names[1] == "new_b");
  CHECK(set.malformed == 1);
  REQUIRE(set.points.size() == 3);
  CHECK(set.points[1].vehicle == VehicleId{1});
  CHECK(set.points[1].timestamp == 10);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_trace_dir(dir), TraceError);
}

TEST_CASE("filter_region") {
  const auto box = BoundingBox::san_francisco();
  const std::vector<TracePoint> pts{{v0, 37.75, -122.45, 0}, {v0, 37.69, -122.45, 1}, {VehicleId{1}, 37.7, -122.45, 2}};
  const auto kept = filter_region(pts, box);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].latitude == 37.75);
  CHECK(filter_region(pts, BoundingBox::whole_globe()).size() == pts.size());
  CHECK_THROWS_AS(filter_region(pts, BoundingBox{1, 0, 0, 1}), std::invalid_argument);
}

TEST_CASE("haversine") {
  CHECK(haversine_m(37.7, -122.4, 37.7, -122.4) == 0.0);
  // One degree of latitude is about 111.2 km.
  CHECK(haversine_m(37.0, -122.0, 38.0, -122.0) == doctest::Approx(111195).epsilon(1e-3));
}

TEST_CASE("deploy_rsus") {
  const auto box = BoundingBox::san_francisco();
  const auto one = deploy_rsus(1, box, {300, 500}, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].latitude == doctest::Approx(37.755));
  CHECK(one[0].longitude == doctest::Approx(-122.45));

  const auto four = deploy_rsus(4, box, {300, 500}, 7);
  REQUIRE(four.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      CHECK((four[i].latitude != four[j].latitude || four[i].longitude != four[j].longitude));

  const auto a = deploy_rsus(400, box, {300, 500}, 42);
  const auto b = deploy_rsus(400, box, {300, 500}, 42);
  REQUIRE(a.size() == 400);
  CHECK(a == b);
  for (const auto& s : a) {
    CHECK(box.strictly_contains(s.latitude, s.longitude));
    CHECK(s.coverage_radius_m >= 300);
    CHECK(s.coverage_radius_m <= 500);
  }
  CHECK(deploy_rsus(5, box, {300, 500}, 1).size() == 5);
  CHECK_THROWS(deploy_rsus(0, box, {300, 500}, 1));
}

TEST_CASE("behavior profile schedule") {
  BehaviorProfile b;
  b.schedule = {{0, 300, Mode::honest}, {300, 600, Mode::malicious}};
  b.collusion_partners = {VehicleId{3}};
  CHECK(b.mode_at(10) == Mode::honest);
  CHECK(b.mode_at(300) == Mode::malicious);
  CHECK(b.mode_at(700) == Mode::honest);
  CHECK(b.targets_vehicle(VehicleId{1}));
  CHECK_FALSE(b.targets_vehicle(VehicleId{3}));
  b.targets = {VehicleId{2}};
  CHECK_FALSE(b.targets_vehicle(VehicleId{1}));
  CHECK_NOTHROW(b.validate());
  b.schedule.push_back({500, 800, Mode::honest});
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("interaction_events outcomes follow behavior") {
  const std::vector<RsuSite> sites{{r0, 37.75, -122.45, 400}};
  InteractionParams params;
  params.interactions_per_week = 1e9;  // every coverage epoch fires

  SUBCASE("vehicle never in coverage") {
    const std::vector<TracePoint> far{{v0, 37.78, -122.40, 0}, {v0, 37.78, -122.40, 10}};
    const auto s = interaction_events(far, sites, {}, params, 1);
    CHECK(s.records.empty());
    CHECK(s.coverage_epochs == 0);
  }
  SUBCASE("honest RSU yields a positive record") {
    const std::vector<TracePoint> one{{v0, 37.75, -122.45, 0}};
    const auto s = interaction_events(one, sites, {}, params, 1);
    REQUIRE(s.records.size() == 1);
    CHECK(s.records[0].outcome == Outcome::positive);
    CHECK(s.records[0].link_quality >= 0.6);
    CHECK(s.records[0].link_quality <= 1.0);
  }
  SUBCASE("malicious RSU spares its partners") {
    BehaviorProfile b;
    b.entity = r0;
    b.schedule = {{0, 1e9, Mode::malicious}};
    b.collusion_partners = {VehicleId{1}};
    const std::vector<TracePoint> pts{{v0, 37.75, -122.45, 5}, {VehicleId{1}, 37.75, -122.45, 5}};
    const std::vector<BehaviorProfile> bs{b};
    const auto s = interaction_events(pts, sites, bs, params, 1);
    REQUIRE(s.records.size() == 2);
    CHECK(s.records[0].vehicle == v0);
    CHECK(s.records[0].outcome == Outcome::negative);
    CHECK(s.records[1].outcome == Outcome::positive);
  }
}

TEST_CASE("interaction_events invariants on synthetic traces") {
  const BoundingBox box{37.75, 37.777, -122.45, -122.416};
  const auto traces = synthetic_traces(20, box, {50, 150}, 3600, 10, 9);
  const auto sites = deploy_rsus(16, box, {300, 500}, 9);
  InteractionParams params;
  params.time_compression = 24 * 30;

  const auto honest = interaction_events(traces, sites, {}, params, 5);
  REQUIRE_FALSE(honest.records.empty());
  CHECK(std::all_of(honest.records.begin(), honest.records.end(),
                    [](const auto& r) { return r.outcome == Outcome::positive; }));

  std::map<std::pair<VehicleId, double>, TracePoint> at;
  for (const auto& p : traces) at[{p.vehicle, p.timestamp}] = p;
  for (const auto& r : honest.records) {
    const auto& p = at.at({r.vehicle, r.timestamp});
    const auto& s = sites[r.rsu.value];
    CHECK(haversine_m(p.latitude, p.longitude, s.latitude, s.longitude) <= s.coverage_radius_m);
  }
  CHECK(std::is_sorted(honest.records.begin(), honest.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.vehicle, a.rsu) < std::tie(b.timestamp, b.vehicle, b.rsu);
  }));

  const auto again = interaction_events(traces, sites, {}, params, 5);
  CHECK(again.records == honest.records);
  CHECK(again.fire_probability == honest.fire_probability);

  std::ostringstream a, b;
  write_event_lines(a, honest.records);
  write_event_lines(b, again.records);
  CHECK(a.str() == b.str());
}

TEST_CASE("interaction frequency calibration") {
  const BoundingBox box{37.75, 37.777, -122.45, -122.416};
  const auto traces = synthetic_traces(30, box, {50, 150}, 7 * 24 * 3600.0 / 100, 2, 3);
  const auto sites = deploy_rsus(9, box, {300, 500}, 3);
  InteractionParams params;
  params.interactions_per_week = 60;
  params.time_compression = 100;
  const auto s = interaction_events(traces, sites, {}, params, 3);
  REQUIRE(s.covered_pairs > 0);
  REQUIRE(s.fire_probability < 1.0);
  const double per_pair_week = static_cast<double>(s.records.size()) / static_cast<double>(s.covered_pairs);
  CHECK(per_pair_week >= 50);
  CHECK(per_pair_week <= 200);
}

TEST_CASE("synthetic_traces") {
  const BoundingBox box{37.75, 37.777, -122.45, -122.416};
  const auto start = synthetic_traces(5, box, {50, 150}, 0, 10, 1);
  CHECK(start.size() == 5);

  const auto a = synthetic_traces(8, box, {50, 150}, 1800, 10, 11);
  const auto b = synthetic_traces(8, box, {50, 150}, 1800, 10, 11);
  CHECK(a == b);
  CHECK(a.size() == 8 * 181);

  std::size_t audited = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i].vehicle != a[i - 1].vehicle) continue;
    CHECK(box.strictly_contains(a[i].latitude, a[i].longitude));
    const double d = haversine_m(a[i - 1].latitude, a[i - 1].longitude, a[i].latitude, a[i].longitude);
    const double kmh = d / (a[i].timestamp - a[i - 1].timestamp) * 3.6;
    CHECK(kmh >= 50 * 0.95);
    CHECK(kmh <= 150 * 1.05);
    ++audited;
  }
  CHECK(audited == 8 * 180);
  CHECK_THROWS(synthetic_traces(0, box, {50, 150}, 10, 1, 1));
  CHECK_THROWS(synthetic_traces(1, box, {50, 150}, 10, 0, 1));
}
