#include "rdpos/ledger.hpp"
#include "rdpos/random.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace rdpos;

namespace {

ReputationRecord rec(std::uint32_t rater, std::uint32_t ratee, Opinion op, std::uint64_t round, bool sig = true) {
  return {VehicleId{rater}, CandidateId{ratee}, op, round, sig};
}

}  // namespace

TEST_CASE("append") {
  Ledger ledger;
  ledger.append({rec(1, 2, {1, 0, 0}, 0)}, 0);
  CHECK(ledger.size() == 1);
  CHECK(ledger.head_round() == 0);

  SUBCASE("unsigned record rejects the whole batch") {
    CHECK_THROWS_AS(ledger.append({rec(2, 2, {1, 0, 0}, 1), rec(3, 2, {1, 0, 0}, 1, false)}, 1), LedgerError);
    CHECK(ledger.size() == 1);
    CHECK(ledger.head_round() == 0);
  }
  SUBCASE("head round follows appends") {
    ledger.append({rec(1, 2, {0.5, 0.5, 0}, 3)}, 3);
    CHECK(ledger.head_round() == 3);
    CHECK_THROWS_AS(ledger.append({rec(1, 2, {1, 0, 0}, 2)}, 2), LedgerError);
    CHECK(ledger.size() == 2);
  }
  SUBCASE("mismatched record round") {
    CHECK_THROWS_AS(ledger.append({rec(1, 2, {1, 0, 0}, 4)}, 5), LedgerError);
  }
  SUBCASE("batch is stored sorted by rater then ratee") {
    ledger.append({rec(9, 1, {1, 0, 0}, 1), rec(3, 7, {1, 0, 0}, 1), rec(3, 2, {1, 0, 0}, 1)}, 1);
    const auto r = ledger.records();
    CHECK(r[1].rater.value == 3);
    CHECK(r[1].ratee.value == 2);
    CHECK(r[2].ratee.value == 7);
    CHECK(r[3].rater.value == 9);
  }
}

TEST_CASE("recommended_opinions") {
  Ledger ledger;
  CHECK(ledger.recommended_opinions(CandidateId{1}, std::nullopt, 10).empty());

  ledger.append({rec(5, 1, {0.2, 0.6, 0.2}, 1)}, 1);
  ledger.append({rec(5, 1, {0.7, 0.1, 0.2}, 4)}, 4);
  auto ops = ledger.recommended_opinions(CandidateId{1}, std::nullopt, 10);
  REQUIRE(ops.size() == 1);
  CHECK(ops[0].opinion == Opinion{0.7, 0.1, 0.2});

  CHECK(ledger.recommended_opinions(CandidateId{1}, VehicleId{5}, 10).empty());

  SUBCASE("stale opinions fall outside the age horizon") {
    ledger.append({rec(6, 2, {1, 0, 0}, 5)}, 5);
    ledger.append({rec(7, 2, {1, 0, 0}, 20)}, 20);
    const auto fresh = ledger.recommended_opinions(CandidateId{2}, std::nullopt, 10);
    REQUIRE(fresh.size() == 1);
    CHECK(fresh[0].rater.value == 7);
  }
}

TEST_CASE("average_reputation") {
  Ledger ledger;
  CHECK(ledger.average_reputation(CandidateId{0}, 0.5, 10) == 0.5);
  CHECK(ledger.average_reputation(CandidateId{0}, 0.5, 10, 0.3) == 0.3);

  ledger.append({rec(1, 0, {0.8, 0.0, 0.2}, 0), rec(2, 0, {0.3, 0.3, 0.4}, 0)}, 0);
  // scores 0.9 and 0.5
  CHECK(ledger.average_reputation(CandidateId{0}, 0.5, 10) == doctest::Approx(0.7));

  ledger.append({rec(1, 9, {1, 0, 0}, 1)}, 1);
  CHECK(ledger.average_reputation(CandidateId{9}, 0.5, 10) == 1.0);
}

TEST_CASE("export_lines") {
  Ledger ledger;
  ledger.append({rec(1, 3, {0.6, 0.2, 0.2}, 2)}, 2);
  std::ostringstream out;
  ledger.export_lines(out);
  CHECK(out.str() == "v001,r003,0.6,0.2,0.2,2\n");
}

TEST_CASE("random append sequences") {
  auto build = [](std::uint64_t seed, Ledger& ledger, std::vector<std::size_t>& sizes) {
    Rng rng(seed);
    std::uint64_t round = 0;
    for (int step = 0; step < 200; ++step) {
      round += rng.below(3);
      std::vector<ReputationRecord> batch;
      const auto n = rng.below(6);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double b = rng.uniform();
        batch.push_back(rec(static_cast<std::uint32_t>(rng.below(8)), static_cast<std::uint32_t>(rng.below(4)),
                            {b, 1 - b, 0}, round, !rng.bernoulli(0.05)));
      }
      try {
        ledger.append(batch, round);
      } catch (const LedgerError&) {
      }
      sizes.push_back(ledger.size());
    }
  };
  Ledger a, b;
  std::vector<std::size_t> sa, sb;
  build(11, a, sa);
  build(11, b, sb);
  for (std::size_t i = 1; i < sa.size(); ++i) CHECK(sa[i] >= sa[i - 1]);

  std::ostringstream ea, eb;
  a.export_lines(ea);
  b.export_lines(eb);
  CHECK(ea.str() == eb.str());

  for (std::uint32_t ratee = 0; ratee < 4; ++ratee) {
    std::set<std::uint32_t> seen;
    for (const auto& o : a.recommended_opinions(CandidateId{ratee}, std::nullopt, 1000)) {
      CHECK(seen.insert(o.rater.value).second);
    }
  }
  for (std::size_t i = 1; i < a.records().size(); ++i) CHECK(a.records()[i].round >= a.records()[i - 1].round);
}
