#include <cmath>
#include <vector>

#include "doctest.h"
#include "geosched/accounting.hpp"
#include "geosched/game.hpp"
#include "geosched/rng.hpp"
#include "support.hpp"

using namespace geosched;

namespace {

StrategyProfile single_profile(int tau, std::vector<double> rates) {
  StrategyProfile p;
  p.tau = tau;
  p.strategies.push_back(Strategy{0, std::move(rates)});
  return p;
}

// One task, one DC sized so the estimate formulas give round numbers:
// 10 nodes -> ER = 400/h, gross max = 1 * 99 + 10 * 0.1 = 100 kW.
Scenario round_number_scenario() {
  Scenario s = test::make_scenario({{.nodes = 10}}, {10.0}, {200.0});
  s.data_centers[0].num_crac = 1;
  s.data_centers[0].crac_max_kw = 99.0;
  return s;
}

}  // namespace

TEST_CASE("carbon is factor times net energy, sign included") {
  CHECK(dc_carbon_kg(0.4, 100.0, 1.0) == doctest::Approx(40.0).epsilon(1e-15));
  CHECK(dc_carbon_kg(0.4, -50.0, 1.0) == doctest::Approx(-20.0).epsilon(1e-15));
  CHECK(dc_carbon_kg(0.4, 100.0, 0.5) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(dc_carbon_kg(0.0, 100.0, 1.0) == 0.0);
}

TEST_CASE("peak charge bills only increases over the prior peak") {
  auto [up, new_peak] = peak_cost_delta(10.0, 120.0, 100.0);
  CHECK(up == doctest::Approx(200.0).epsilon(1e-15));
  CHECK(new_peak == doctest::Approx(120.0));

  auto [none, kept] = peak_cost_delta(10.0, 90.0, 100.0);
  CHECK(none == 0.0);
  CHECK(kept == doctest::Approx(100.0));

  // Equal peak: charge 0, peak refreshed.
  auto [zero, same] = peak_cost_delta(10.0, 100.0, 100.0);
  CHECK(zero == 0.0);
  CHECK(same == doctest::Approx(100.0));
}

TEST_CASE("peak charges telescope over any draw sequence") {
  Rng rng(11);
  double price = 7.5;
  double prior = 0.0;
  double total = 0.0;
  double max_seen = 0.0;
  for (int t = 0; t < 720; ++t) {
    double draw = rng.uniform(0.0, 500.0);
    max_seen = std::max(max_seen, draw);
    auto [delta, next] = peak_cost_delta(price, std::max(prior, draw), prior);
    total += delta;
    prior = next;
  }
  CHECK(prior == doctest::Approx(max_seen));
  CHECK(std::abs(total - price * max_seen) < 1e-9);
}

TEST_CASE("network cost prices migrated node-slots by task size") {
  Scenario s = test::make_scenario({{}}, {10.0}, {1.0});
  s.network_price = 0.05;
  s.task_types[0].size_gb = 2.0;
  std::vector<double> migrated = {10.0};
  CHECK(network_cost_usd(s, migrated) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(network_cost_usd(s, std::vector<double>{0.0}) == 0.0);
  CHECK_THROWS_AS(network_cost_usd(s, std::vector<double>{-1.0}), Error);
}

TEST_CASE("energy cost switches slope through the net-metering factor") {
  DataCenter dc;
  dc.net_meter = 0.5;
  CHECK(dc_cost_usd(dc, 100.0, 0.1, 0.0, 0.0, 1.0) == doctest::Approx(10.0));
  CHECK(dc_cost_usd(dc, -100.0, 0.1, 0.0, 0.0, 1.0) == doctest::Approx(-5.0));
  CHECK(dc_cost_usd(dc, 0.0, 0.1, 0.0, 0.0, 1.0) == 0.0);

  dc.net_meter = 0.0;  // exports pay nothing
  CHECK(dc_cost_usd(dc, -100.0, 0.1, 0.0, 0.0, 1.0) == 0.0);

  dc.net_meter = 1.0;
  CHECK(dc_cost_usd(dc, -100.0, 0.1, 0.0, 0.0, 1.0) == doctest::Approx(-10.0));
  // Peak and network charges ride on top.
  CHECK(dc_cost_usd(dc, 100.0, 0.1, 3.0, 2.0, 1.0) == doctest::Approx(15.0));
}

TEST_CASE("validate_profile names each violated constraint") {
  Scenario s = test::make_scenario({{}, {}}, {10.0}, {50.0});
  ExecRateTable er = build_exec_rates(s);

  // Well-formed: 50 = 25 + 25, both under ER = 40.
  CHECK_NOTHROW(validate_profile(s, er, single_profile(0, {25.0, 25.0})));

  CHECK_THROWS_AS(validate_profile(s, er, StrategyProfile{}), InfeasibleProfile);
  CHECK_THROWS_AS(validate_profile(s, er, single_profile(0, {50.0})),
                  InfeasibleProfile);  // one rate per DC
  CHECK_THROWS_AS(validate_profile(s, er, single_profile(0, {-1.0, 51.0})),
                  InfeasibleProfile);  // negative
  CHECK_THROWS_AS(validate_profile(s, er, single_profile(0, {41.0, 9.0})),
                  InfeasibleProfile);  // beyond ER
  CHECK_THROWS_AS(validate_profile(s, er, single_profile(0, {20.0, 20.0})),
                  InfeasibleProfile);  // sum != CAR

  StrategyProfile wrong_owner = single_profile(0, {25.0, 25.0});
  wrong_owner.strategies[0].player = 1;
  CHECK_THROWS_AS(validate_profile(s, er, wrong_owner), InfeasibleProfile);
}

TEST_CASE("estimated carbon is zero at zero rate and skips zero-factor DCs") {
  Scenario s = test::make_scenario({{.carbon = 0.4}, {.carbon = 0.0}},
                                   {10.0}, {30.0});
  ExecRateTable er = build_exec_rates(s);

  auto zero = estimate_carbon_player(s, er, 0, std::vector<double>{0.0, 0.0}, 0);
  CHECK(zero.total == 0.0);

  auto clean = estimate_carbon_player(s, er, 0, std::vector<double>{0.0, 30.0}, 0);
  CHECK(clean.per_dc[1] == 0.0);
  CHECK(clean.total == 0.0);

  auto dirty = estimate_carbon_player(s, er, 0, std::vector<double>{30.0, 0.0}, 0);
  CHECK(dirty.total > 0.0);
  CHECK(dirty.per_dc[0] == doctest::Approx(dirty.total));
}

TEST_CASE("estimated carbon of identical DCs ignores the split") {
  Scenario s = test::make_scenario({{.carbon = 0.4}, {.carbon = 0.4}},
                                   {10.0}, {30.0});
  ExecRateTable er = build_exec_rates(s);
  auto a = estimate_carbon_player(s, er, 0, std::vector<double>{30.0, 0.0}, 0);
  auto b = estimate_carbon_player(s, er, 0, std::vector<double>{0.0, 30.0}, 0);
  auto c = estimate_carbon_player(s, er, 0, std::vector<double>{12.5, 17.5}, 0);
  CHECK(a.total == doctest::Approx(b.total).epsilon(1e-12));
  CHECK(a.total == doctest::Approx(c.total).epsilon(1e-12));
}

TEST_CASE("estimated cost adds energy, peak delta, and network terms") {
  // DP_est = 100 kW * (200/400) = 50 kW; price 0.1 -> $5 energy.
  // NC_max = 0.4 * 10 nodes * 1 GB = $4; at half ER -> $2 network.
  // Peak price 0 -> delta 0. Total $7.
  Scenario s = round_number_scenario();
  s.network_price = 0.4;
  ExecRateTable er = build_exec_rates(s);
  CHECK(er.at(0, 0) == doctest::Approx(400.0));
  CHECK(dc_power_max_kw(s, 0, 0) == doctest::Approx(100.0));
  CHECK(nc_max_usd(s, 0, 0) == doctest::Approx(4.0));

  EpochState st = fresh_month_state(1);
  auto est = estimate_cost_player(s, er, 0, single_profile(0, {200.0}), st);
  CHECK(est.total == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("network estimate reaches NC_max exactly at full rate") {
  Scenario s = round_number_scenario();
  s.network_price = 0.4;
  s.arrivals[0].assign(24, 400.0);  // CAR = ER
  s.data_centers[0].elec_price.assign(24, 0.0);
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(1);
  auto est = estimate_cost_player(s, er, 0, single_profile(0, {400.0}), st);
  CHECK(est.total == doctest::Approx(nc_max_usd(s, 0, 0)).epsilon(1e-12));
}

TEST_CASE("estimated cost is zero when every price is zero") {
  Scenario s = round_number_scenario();
  s.data_centers[0].elec_price.assign(24, 0.0);
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(1);
  auto est = estimate_cost_player(s, er, 0, single_profile(0, {200.0}), st);
  CHECK(est.total == 0.0);
}

TEST_CASE("estimated peak charge reacts to the peers' draw") {
  // Two tasks on one DC. Raising the peer's load raises the shared estimated
  // peak, which lands on player 0's bill in full when prorate_peak is off.
  Scenario s = test::make_scenario({{.nodes = 10, .peak_price = 10.0}},
                                   {10.0, 10.0}, {100.0, 100.0});
  s.data_centers[0].num_crac = 1;
  s.data_centers[0].crac_max_kw = 99.0;  // gross max 100 kW
  ExecRateTable er = build_exec_rates(s);

  StrategyProfile low;
  low.tau = 0;
  low.strategies = {Strategy{0, {100.0}}, Strategy{1, {100.0}}};
  EpochState st = fresh_month_state(1);

  auto base = estimate_cost_player(s, er, 0, low, st);

  Scenario s_hi = s;
  s_hi.arrivals[1].assign(24, 200.0);
  StrategyProfile high = low;
  high.strategies[1].rates[0] = 200.0;
  auto bumped = estimate_cost_player(s_hi, er, 0, high, st);
  CHECK(bumped.total > base.total);

  // The increase is exactly the peak price times the extra estimated draw:
  // peer power rises from 25 kW to 50 kW.
  CHECK(bumped.total - base.total == doctest::Approx(10.0 * 25.0).epsilon(1e-9));
}

TEST_CASE("prorated peak splits the charge by estimated draw share") {
  Scenario s = test::make_scenario({{.nodes = 10, .peak_price = 10.0}},
                                   {10.0, 10.0}, {100.0, 100.0});
  s.data_centers[0].num_crac = 1;
  s.data_centers[0].crac_max_kw = 99.0;
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof;
  prof.tau = 0;
  prof.strategies = {Strategy{0, {100.0}}, Strategy{1, {100.0}}};
  EpochState st = fresh_month_state(1);

  double full_each = estimate_cost_player(s, er, 0, prof, st).total +
                     estimate_cost_player(s, er, 1, prof, st).total;

  Scenario pro = s;
  pro.prorate_peak = true;
  double split_sum = estimate_cost_player(pro, er, 0, prof, st).total +
                     estimate_cost_player(pro, er, 1, prof, st).total;

  // Equal loads: with prorating each player pays half the delta, so the sum
  // drops by exactly one whole delta (both players' est draw is 25 kW, total
  // 50 kW, delta = 10 * 50 = 500).
  CHECK(full_each - split_sum == doctest::Approx(500.0).epsilon(1e-9));
}

TEST_CASE("cloud objective is zero at zero arrivals") {
  Scenario s = round_number_scenario();
  s.arrival_spec.pattern = ArrivalPattern::Trace;
  s.arrivals[0].assign(24, 0.0);
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(1);
  CHECK(cloud_objective(s, er, single_profile(0, {0.0}), st,
                        Objective::Carbon) == 0.0);
  CHECK(cloud_objective(s, er, single_profile(0, {0.0}), st,
                        Objective::Cost) == 0.0);
}

TEST_CASE("cloud objective equals the sum of player estimates") {
  Scenario s = test::make_scenario(
      {{.nodes = 3, .carbon = 0.5, .price = 0.12, .peak_price = 9.0},
       {.nodes = 5, .carbon = 0.2, .price = 0.08, .renewable = 2.0}},
      {10.0, 6.0}, {50.0, 30.0});
  s.network_price = 0.02;
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof;
  prof.tau = 0;
  prof.strategies = {Strategy{0, {30.0, 20.0}}, Strategy{1, {10.0, 20.0}}};
  EpochState st = fresh_month_state(2);
  st.prior_peak_kw = {1.0, 0.5};

  double carbon_sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    carbon_sum += estimate_carbon_player(
                      s, er, i, prof.strategies[static_cast<size_t>(i)].rates, 0)
                      .total;
  }
  CHECK(std::abs(cloud_objective(s, er, prof, st, Objective::Carbon) -
                 carbon_sum) < 1e-9);

  double cost_sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    cost_sum += estimate_cost_player(s, er, i, prof, st).total;
  }
  CHECK(std::abs(cloud_objective(s, er, prof, st, Objective::Cost) - cost_sum) <
        1e-9);
}

TEST_CASE("ledger rows add up to the cloud totals") {
  Scenario s = test::make_scenario(
      {{.nodes = 4, .carbon = 0.3, .price = 0.1, .peak_price = 5.0},
       {.nodes = 6, .carbon = 0.6, .price = 0.2}},
      {10.0, 8.0}, {60.0, 40.0});
  s.network_price = 0.03;
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof;
  prof.tau = 0;
  prof.strategies = {Strategy{0, {25.0, 35.0}}, Strategy{1, {12.0, 28.0}}};
  EpochLedger led = make_epoch_ledger(s, er, prof, fresh_month_state(2));

  REQUIRE(led.dc.size() == 2);
  double carbon = 0.0, cost = 0.0;
  for (const auto& row : led.dc) {
    carbon += row.carbon_kg;
    cost += row.total_cost_usd;
    CHECK(row.total_cost_usd == doctest::Approx(row.energy_cost_usd +
                                                row.peak_delta_usd +
                                                row.network_cost_usd));
  }
  CHECK(led.cloud_carbon_kg == doctest::Approx(carbon).epsilon(1e-12));
  CHECK(led.cloud_cost_usd == doctest::Approx(cost).epsilon(1e-12));
}

TEST_CASE("ledger network cost follows the origin fractions") {
  Scenario s = test::make_scenario({{.nodes = 10}, {.nodes = 10}},
                                   {10.0}, {100.0});
  s.network_price = 0.5;
  s.task_types[0].size_gb = 2.0;
  // All requests originate at DC 1; work done there is free, work at DC 2
  // pays for every occupied slot.
  s.origin_frac = {{1.0, 0.0}};
  ExecRateTable er = build_exec_rates(s);

  EpochLedger led =
      make_epoch_ledger(s, er, single_profile(0, {60.0, 40.0}),
                        fresh_month_state(2));
  CHECK(led.dc[0].network_cost_usd == 0.0);
  // (40 / 400) * 10 nodes * (1 - 0) = 1 slot; 0.5 $/GB * 2 GB * 1 = $1.
  CHECK(led.dc[1].network_cost_usd == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ledger energy cost honors net metering when exporting") {
  std::vector<double> ren(24, 500.0);
  Scenario s = test::make_scenario(
      {{.nodes = 10, .price = 0.1, .net_meter = 0.25, .renewable_trace = ren}},
      {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  EpochLedger led = make_epoch_ledger(s, er, single_profile(0, {100.0}),
                                      fresh_month_state(1));
  const auto& row = led.dc[0];
  REQUIRE(row.power.net_kw < 0.0);
  CHECK(row.energy_cost_usd ==
        doctest::Approx(0.1 * 0.25 * row.power.net_kw).epsilon(1e-12));
  // Exports never set a new grid peak.
  CHECK(row.peak_delta_usd == 0.0);
  CHECK(led.updated_prior_peak_kw[0] == 0.0);
}

TEST_CASE("ledger peak charge fires once under a flat load") {
  Scenario s = test::make_scenario({{.nodes = 10, .peak_price = 12.0}},
                                   {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);

  EpochState st = fresh_month_state(1);
  double total_delta = 0.0;
  double first_delta = 0.0;
  for (int tau = 0; tau < 48; ++tau) {
    StrategyProfile prof = single_profile(tau, {100.0});
    st.tau = tau;
    EpochLedger led = make_epoch_ledger(s, er, prof, st);
    if (tau == 0) first_delta = led.dc[0].peak_delta_usd;
    if (tau > 0) CHECK(led.dc[0].peak_delta_usd == 0.0);
    total_delta += led.dc[0].peak_delta_usd;
    st.prior_peak_kw = led.updated_prior_peak_kw;
  }
  CHECK(first_delta > 0.0);
  CHECK(total_delta == doctest::Approx(12.0 * st.prior_peak_kw[0]).epsilon(1e-9));
}
