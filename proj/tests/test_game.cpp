#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "geosched/game.hpp"
#include "support.hpp"

using namespace geosched;

namespace {

// 1 task, 2 DCs with round-number estimate constants: ER 400 each,
// gross max 100 kW at DC 1 and 200 kW at DC 2.
Scenario scan_fixture() {
  Scenario s = test::make_scenario(
      {{.nodes = 10, .price = 0.10, .peak_price = 4.0},
       {.nodes = 10, .price = 0.07, .peak_price = 6.0}},
      {10.0}, {300.0});
  s.data_centers[0].num_crac = 1;
  s.data_centers[0].crac_max_kw = 99.0;
  s.data_centers[1].num_crac = 1;
  s.data_centers[1].crac_max_kw = 199.0;
  s.network_price = 0.02;
  return s;
}

// 2 tasks x 2 DCs with enough asymmetry that the cost game is not trivial.
Scenario small_game_fixture() {
  Scenario s = test::make_scenario(
      {{.nodes = 6, .carbon = 0.5, .price = 0.12, .peak_price = 8.0},
       {.nodes = 10, .carbon = 0.2, .price = 0.09, .renewable = 10.0,
        .peak_price = 11.0}},
      {10.0, 5.0}, {150.0, 90.0});
  s.network_price = 0.03;
  return s;
}

}  // namespace

TEST_CASE("project_feasible keeps already feasible fractions") {
  Scenario s = test::make_scenario({{.nodes = 5}, {.nodes = 5}}, {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  Strategy st = project_feasible(s, er, std::vector<double>{0.3, 0.7}, 0, 0);
  CHECK(st.rates[0] == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(st.rates[1] == doctest::Approx(70.0).epsilon(1e-12));

  // Fractions are normalized first, so scale does not matter.
  Strategy scaled = project_feasible(s, er, std::vector<double>{3.0, 7.0}, 0, 0);
  CHECK(scaled.rates == st.rates);
}

TEST_CASE("project_feasible splits symmetric DCs evenly") {
  Scenario s = test::make_scenario({{}, {}, {}, {}}, {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  Strategy st = project_feasible(s, er, std::vector<double>{1, 1, 1, 1}, 0, 0);
  for (double r : st.rates) CHECK(r == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("project_feasible clamps at ER and spreads the excess by headroom") {
  // ER caps: {40, 40, 400}; everything pointed at DC 1 with CAR 100.
  Scenario s = test::make_scenario({{.nodes = 1}, {.nodes = 1}, {.nodes = 10}},
                                   {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  Strategy st = project_feasible(s, er, std::vector<double>{1, 0, 0}, 0, 0);
  CHECK(st.rates[0] == doctest::Approx(40.0));
  // Excess 60 spread over headroom {40, 400} proportionally.
  CHECK(st.rates[1] == doctest::Approx(60.0 * 40.0 / 440.0).epsilon(1e-12));
  CHECK(st.rates[2] == doctest::Approx(60.0 * 400.0 / 440.0).epsilon(1e-12));
  double sum = st.rates[0] + st.rates[1] + st.rates[2];
  CHECK(std::abs(sum - 100.0) <= 1e-9 * 100.0);
  for (int d = 0; d < 3; ++d) CHECK(st.rates[static_cast<size_t>(d)] <= er.at(0, d));
}

TEST_CASE("project_feasible rejects unusable fraction vectors") {
  Scenario s = test::make_scenario({{}, {}}, {10.0}, {50.0});
  ExecRateTable er = build_exec_rates(s);
  CHECK_THROWS_AS(project_feasible(s, er, std::vector<double>{1.0}, 0, 0), Error);
  CHECK_THROWS_AS(project_feasible(s, er, std::vector<double>{0.0, 0.0}, 0, 0),
                  Error);
  CHECK_THROWS_AS(project_feasible(s, er, std::vector<double>{-1.0, 2.0}, 0, 0),
                  Error);
}

TEST_CASE("project_feasible reports an oversubscribed cloud") {
  Scenario s = test::make_scenario({{}, {}}, {10.0}, {50.0});
  s.arrival_spec.pattern = ArrivalPattern::Trace;
  s.arrivals[0].assign(24, 900.0);  // cap is 80
  ExecRateTable er = build_exec_rates(s);
  CHECK_THROWS_AS(project_feasible(s, er, std::vector<double>{1.0, 1.0}, 0, 0),
                  NoFeasibleStrategy);
}

TEST_CASE("proportional_profile is feasible and proportional to ER") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof = proportional_profile(s, er, 0);
  CHECK_NOTHROW(validate_profile(s, er, prof));
  for (int i = 0; i < 2; ++i) {
    double car = s.arrival_at(i, 0);
    double cap = er.cap[static_cast<size_t>(i)];
    for (int d = 0; d < 2; ++d) {
      CHECK(prof.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)] ==
            doctest::Approx(car * er.at(i, d) / cap).epsilon(1e-9));
    }
  }
}

TEST_CASE("player_reward is zero at zero arrivals") {
  Scenario s = test::make_scenario({{}, {}}, {10.0, 10.0}, {40.0, 40.0});
  s.arrival_spec.pattern = ArrivalPattern::Trace;
  s.arrivals[0].assign(24, 0.0);
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof;
  prof.tau = 0;
  prof.strategies = {Strategy{0, {0.0, 0.0}}, Strategy{1, {20.0, 20.0}}};
  EpochState st = fresh_month_state(2);
  CHECK(player_reward(s, er, 0, prof, st, Objective::Carbon) == 0.0);
  CHECK(player_reward(s, er, 0, prof, st, Objective::Cost) == 0.0);
}

TEST_CASE("carbon reward ignores the other players") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  StrategyProfile a = proportional_profile(s, er, 0);

  StrategyProfile b = a;
  b.strategies[1] = project_feasible(s, er, std::vector<double>{0.9, 0.1}, 1, 0);

  double ra = player_reward(s, er, 0, a, st, Objective::Carbon);
  double rb = player_reward(s, er, 0, b, st, Objective::Carbon);
  CHECK(ra == rb);
}

TEST_CASE("cost reward rises weakly with a peer's load at a peaky DC") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);

  StrategyProfile calm = proportional_profile(s, er, 0);
  StrategyProfile loud = calm;
  // Peer piles onto DC 1 (peak price 8): same CAR, different split.
  loud.strategies[1] = project_feasible(s, er, std::vector<double>{1.0, 0.0}, 1, 0);
  REQUIRE(loud.strategies[1].rates[0] > calm.strategies[1].rates[0]);

  double r_calm = player_reward(s, er, 0, calm, st, Objective::Cost);
  double r_loud = player_reward(s, er, 0, loud, st, Objective::Cost);
  CHECK(r_loud >= r_calm);
  CHECK(r_loud > r_calm + 1e-9);  // the shared peak actually moved
}

TEST_CASE("carbon best reply routes everything to a zero-factor sink") {
  Scenario s = test::make_scenario({{.nodes = 2, .carbon = 0.4},
                                    {.nodes = 10, .carbon = 0.0}},
                                   {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof = proportional_profile(s, er, 0);
  EpochState st = fresh_month_state(2);
  Strategy br = best_reply(s, er, 0, prof, st, Objective::Carbon);
  CHECK(br.rates[0] == 0.0);
  CHECK(br.rates[1] == doctest::Approx(100.0));
  StrategyProfile replied = prof;
  replied.strategies[0] = br;
  CHECK(player_reward(s, er, 0, replied, st, Objective::Carbon) == 0.0);
}

TEST_CASE("carbon best reply splits ties proportionally to capacity") {
  // DC 2 is an exact doubled copy of DC 1, so the marginal carbon per unit of
  // rate is identical and the tie rule splits 1:2.
  Scenario s = test::make_scenario({{.nodes = 1}, {.nodes = 2}}, {10.0}, {90.0});
  s.data_centers[0].num_crac = 1;
  s.data_centers[0].crac_max_kw = 10.0;
  s.data_centers[1].num_crac = 2;
  s.data_centers[1].crac_max_kw = 10.0;
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof = proportional_profile(s, er, 0);
  Strategy br = best_reply(s, er, 0, prof, fresh_month_state(2), Objective::Carbon);
  CHECK(br.rates[0] == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(br.rates[1] == doctest::Approx(60.0).epsilon(1e-12));

  // Two identical DCs degenerate to the equal split.
  Scenario sym = test::make_scenario({{}, {}}, {10.0}, {60.0});
  ExecRateTable er2 = build_exec_rates(sym);
  Strategy eq = best_reply(sym, er2, 0, proportional_profile(sym, er2, 0),
                           fresh_month_state(2), Objective::Carbon);
  CHECK(eq.rates[0] == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(eq.rates[1] == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("cost best reply agrees with a dense 1-D scan") {
  Scenario s = scan_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  st.prior_peak_kw = {20.0, 30.0};

  std::vector<double> none = {0.0, 0.0};
  auto reward_at = [&](double a) {
    std::vector<double> rates = {a, 300.0 - a};
    return estimate_cost_player_given_peers(s, er, 0, rates, none, st).total;
  };

  double best_a = 0.0, best_r = reward_at(0.0);
  const double step = 300.0 / 200.0;
  for (int k = 1; k <= 200; ++k) {
    double a = step * static_cast<double>(k);
    double r = reward_at(a);
    if (r < best_r) {
      best_r = r;
      best_a = a;
    }
  }

  StrategyProfile prof = proportional_profile(s, er, 0);
  Strategy br = best_reply(s, er, 0, prof, st, Objective::Cost);
  double br_reward = estimate_cost_player_given_peers(s, er, 0, br.rates, none, st).total;

  CHECK(std::abs(br.rates[0] - best_a) <= step + 1e-9);
  // The local search stops once its step shrinks to 1e-4 * CAR = 0.03; with
  // reward slopes of magnitude up to ~3 that leaves at most ~0.1 on the table.
  CHECK(br_reward <= best_r + 0.1);
}

TEST_CASE("best reply of a zero-arrival player is the zero strategy") {
  Scenario s = test::make_scenario({{}, {}}, {10.0, 10.0}, {40.0, 40.0});
  s.arrival_spec.pattern = ArrivalPattern::Trace;
  s.arrivals[0].assign(24, 0.0);
  ExecRateTable er = build_exec_rates(s);
  StrategyProfile prof = proportional_profile(s, er, 0);
  Strategy br = best_reply(s, er, 0, prof, fresh_month_state(2), Objective::Cost);
  CHECK(br.rates == std::vector<double>{0.0, 0.0});
}

TEST_CASE("carbon Nash converges in one round and is separable") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  NashResult nash = nash_solve(s, er, 0, Objective::Carbon, st);

  CHECK(nash.converged);
  CHECK(nash.rounds == 1);
  CHECK(nash.cert_max_improvement_rel <= GameConfig{}.eps_reward_rel);
  CHECK_NOTHROW(validate_profile(s, er, nash.profile));

  // Separability: each strategy equals the player's independent best reply
  // computed against an arbitrary profile.
  StrategyProfile any = proportional_profile(s, er, 0);
  for (int i = 0; i < 2; ++i) {
    Strategy br = best_reply(s, er, i, any, st, Objective::Carbon);
    for (int d = 0; d < 2; ++d) {
      CHECK(nash.profile.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)] ==
            doctest::Approx(br.rates[static_cast<size_t>(d)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetric two-DC Nash is the equal split") {
  Scenario s = test::make_scenario({{}, {}}, {10.0, 8.0}, {30.0, 20.0});
  ExecRateTable er = build_exec_rates(s);
  NashResult nash =
      nash_solve(s, er, 0, Objective::Carbon, fresh_month_state(2));
  CHECK(nash.profile.strategies[0].rates[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(nash.profile.strategies[0].rates[1] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(nash.profile.strategies[1].rates[0] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(nash.profile.strategies[1].rates[1] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("cost Nash lands near the grid oracle on the 2x2 fixture") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);

  NashResult nash = nash_solve(s, er, 0, Objective::Cost, st);
  CHECK(nash.converged);
  CHECK(nash.cert_max_improvement_rel <= GameConfig{}.eps_reward_rel);
  double nash_obj = cloud_objective(s, er, nash.profile, st, Objective::Cost);

  OracleResult oracle = oracle_grid(s, er, 0, Objective::Cost, st, 0.05);
  CHECK(nash_obj <= 1.05 * oracle.objective_value + 1e-9);
}

TEST_CASE("scaling carbon factors scales the value but not the argmin") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  NashResult base = nash_solve(s, er, 0, Objective::Carbon, st);
  double base_obj = cloud_objective(s, er, base.profile, st, Objective::Carbon);

  Scenario scaled = s;
  for (auto& dc : scaled.data_centers) dc.carbon_factor *= 3.0;
  ExecRateTable er2 = build_exec_rates(scaled);
  NashResult big = nash_solve(scaled, er2, 0, Objective::Carbon, st);
  double big_obj = cloud_objective(scaled, er2, big.profile, st, Objective::Carbon);

  for (int i = 0; i < 2; ++i) {
    for (int d = 0; d < 2; ++d) {
      CHECK(big.profile.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)] ==
            doctest::Approx(
                base.profile.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)])
                .epsilon(1e-12));
    }
  }
  CHECK(big_obj == doctest::Approx(3.0 * base_obj).epsilon(1e-9));
}

TEST_CASE("force-directed with a single DC has no choice") {
  Scenario s = test::make_scenario({{.nodes = 5}}, {10.0}, {100.0});
  ExecRateTable er = build_exec_rates(s);
  FdResult fd = force_directed(s, er, 0, Objective::Carbon, fresh_month_state(1));
  CHECK(fd.profile.strategies[0].rates[0] == doctest::Approx(100.0));
  CHECK(fd.moves == 0);
}

TEST_CASE("force-directed drains load onto a zero-carbon sink") {
  Scenario s = test::make_scenario({{.nodes = 1, .carbon = 0.4},
                                    {.nodes = 10, .carbon = 0.0}},
                                   {10.0}, {110.0});
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  FdResult fd = force_directed(s, er, 0, Objective::Carbon, st);
  CHECK(fd.profile.strategies[0].rates[0] == 0.0);
  CHECK(fd.profile.strategies[0].rates[1] == doctest::Approx(110.0));
  CHECK(cloud_objective(s, er, fd.profile, st, Objective::Carbon) == 0.0);
  CHECK(fd.moves > 0);
}

TEST_CASE("force-directed never beats Nash on the 2x2 cost fixture") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  double nash_obj = cloud_objective(
      s, er, nash_solve(s, er, 0, Objective::Cost, st).profile, st, Objective::Cost);
  FdResult fd = force_directed(s, er, 0, Objective::Cost, st);
  double fd_obj = cloud_objective(s, er, fd.profile, st, Objective::Cost);
  CHECK(fd_obj >= nash_obj - 1e-9 * (1.0 + std::abs(nash_obj)));
}

TEST_CASE("oracle with one DC evaluates exactly one profile") {
  Scenario s = test::make_scenario({{.nodes = 5}}, {10.0, 5.0}, {60.0, 30.0});
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(1);
  OracleResult res = oracle_grid(s, er, 0, Objective::Cost, st, 0.25);
  CHECK(res.profiles_evaluated == 1);
  CHECK(res.objective_value ==
        doctest::Approx(cloud_objective(s, er, res.profile, st, Objective::Cost)));
}

TEST_CASE("oracle on symmetric DCs returns the analytic flat optimum") {
  Scenario s = test::make_scenario({{.nodes = 10, .carbon = 0.4},
                                    {.nodes = 10, .carbon = 0.4}},
                                   {10.0}, {200.0});
  for (auto& dc : s.data_centers) {
    dc.num_crac = 1;
    dc.crac_max_kw = 99.0;  // gross max exactly 100 kW
  }
  ExecRateTable er = build_exec_rates(s);
  OracleResult res =
      oracle_grid(s, er, 0, Objective::Carbon, fresh_month_state(2), 0.05);
  // Linear objective with equal coefficients: every split costs
  // 0.4 * (100/400) * 200 = 20 kg.
  CHECK(res.objective_value == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(res.profiles_evaluated == 21);
}

TEST_CASE("refining the oracle grid never increases the optimum") {
  Scenario s = small_game_fixture();
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(2);
  OracleResult coarse = oracle_grid(s, er, 0, Objective::Cost, st, 0.1);
  OracleResult fine = oracle_grid(s, er, 0, Objective::Cost, st, 0.05);
  CHECK(fine.objective_value <= coarse.objective_value + 1e-12);
}

TEST_CASE("oracle guards against enormous grids and bad resolutions") {
  Scenario s = test::make_scenario({{}, {}, {}, {}}, {10.0, 10.0}, {30.0, 30.0});
  ExecRateTable er = build_exec_rates(s);
  EpochState st = fresh_month_state(4);
  CHECK_THROWS_AS(oracle_grid(s, er, 0, Objective::Cost, st, 0.02), TooLarge);
  CHECK_THROWS_AS(oracle_grid(s, er, 0, Objective::Cost, st, 0.3), Error);
  CHECK_THROWS_AS(oracle_grid(s, er, 0, Objective::Cost, st, 0.0), Error);
  CHECK_THROWS_AS(oracle_grid(s, er, 0, Objective::Cost, st, 1.5), Error);
}
