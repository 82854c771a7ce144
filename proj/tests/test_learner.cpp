#include <cmath>
#include <random>

#include "doctest.h"
#include "sortedrl/error.hpp"
#include "sortedrl/learner.hpp"

using namespace sortedrl;

namespace {

// Direct double-sum form of GAE: A_t = sum_l (gamma*lambda)^l delta_{t+l}.
std::vector<double> gae_double_loop(const std::vector<double>& r, const std::vector<double>& v,
                                    double gamma, double lambda) {
  const size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    double acc = 0.0, w = 1.0;
    for (size_t k = t; k < n; ++k) {
      acc += w * (r[k] + gamma * v[k + 1] - v[k]);
      w *= gamma * lambda;
    }
    out[t] = acc;
  }
  return out;
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("GAE recursion equals the double-sum oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-3.0, 3.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 64);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng);
    std::vector<double> r(n), v(n + 1);
    for (auto& x : r) x = val(rng);
    for (auto& x : v) x = val(rng);
    const double gamma = unit(rng), lambda = unit(rng);
    const auto fast = gae_advantage(r, v, gamma, lambda);
    const auto slow = gae_double_loop(r, v, gamma, lambda);
    for (int t = 0; t < n; ++t) worst = std::max(worst, rel_err(fast[t], slow[t]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("GAE special cases") {
  // lambda = 0 reduces to one-step TD errors.
  const std::vector<double> r{1, 2, 3}, v{0.5, 0.25, 0.125, 2.0};
  const auto td = gae_advantage(r, v, 0.9, 0.0);
  for (size_t t = 0; t < 3; ++t) CHECK(td[t] == doctest::Approx(r[t] + 0.9 * v[t + 1] - v[t]));
  // gamma = lambda = 1 and zero values: reward-to-go.
  const auto rtg = gae_advantage(r, std::vector<double>(4, 0.0), 1.0, 1.0);
  CHECK(rtg == std::vector<double>{6, 5, 3});
  CHECK_THROWS_AS(gae_advantage(r, r, 1.0, 1.0), Error);
  CHECK(gae_advantage({}, std::vector<double>{0.0}, 1.0, 1.0).empty());
}

TEST_CASE("Reinforce++ advantages: zero mean, unit population std") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(2.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(2 + trial);
    for (auto& x : r) x = d(rng);
    const auto a = reinforce_pp_advantage(r);
    double mean = 0, sq = 0;
    for (double x : a) mean += x;
    mean /= a.size();
    for (double x : a) sq += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(sq / a.size()) - 1.0) < 1e-9);
  }
  CHECK(reinforce_pp_advantage(std::vector<double>{1, 0}) == std::vector<double>{1, -1});
}

TEST_CASE("Reinforce++ degenerate batches") {
  CHECK(reinforce_pp_advantage(std::vector<double>(5, 0.7)) == std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(reinforce_pp_advantage(std::vector<double>{}), Error);
  CHECK_THROWS_AS(reinforce_pp_advantage(std::vector<double>{1.0}), Error);
}

TEST_CASE("clipped objective: identity ratio returns the mean advantage") {
  const std::vector<double> lp{-1.0, -2.5, -0.3, -4.0};
  const std::vector<double> adv{0.5, -1.5, 2.0, 0.25};
  const auto r = ppo_objective(lp, lp, adv, Hyperparams{});
  CHECK(r.objective == (0.5 - 1.5 + 2.0 + 0.25) / 4.0);
  for (double x : r.ratios) CHECK(x == 1.0);
}

TEST_CASE("clipped objective: case enumeration at eps 0.2") {
  Hyperparams hp;
  hp.eps_low = 0.2;
  hp.eps_high = 0.2;
  // Hand-derived min(rho*A, clip(rho, 0.8, 1.2)*A).
  struct Case { double ratio, adv, expected; };
  const Case cases[] = {
      {0.5, 1.0, 0.5},   {0.5, -1.0, -0.8}, {1.0, 1.0, 1.0},
      {1.0, -1.0, -1.0}, {2.0, 1.0, 1.2},   {2.0, -1.0, -2.0},
  };
  for (const auto& c : cases) {
    const std::vector<double> behavior{-1.0};
    const std::vector<double> fresh{-1.0 + std::log(c.ratio)};
    const std::vector<double> adv{c.adv};
    CHECK(ppo_objective(fresh, behavior, adv, hp).objective == doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("clip-higher widens only the upper bound") {
  Hyperparams hp;  // 0.2 / 0.28
  const std::vector<double> behavior{0.0};
  const std::vector<double> up{std::log(2.0)}, down{std::log(0.5)};
  const std::vector<double> pos{1.0}, neg{-1.0};
  CHECK(ppo_objective(up, behavior, pos, hp).objective == doctest::Approx(1.28));
  CHECK(ppo_objective(down, behavior, neg, hp).objective == doctest::Approx(-0.8));
}

TEST_CASE("clipped objective input checks") {
  const std::vector<double> one{0.0}, two{0.0, 0.0}, bad{std::nan("")};
  CHECK_THROWS_AS(ppo_objective(one, two, one, Hyperparams{}), Error);
  CHECK_THROWS_AS(ppo_objective(bad, one, one, Hyperparams{}), Error);
  CHECK_THROWS_AS(ppo_objective({}, {}, {}, Hyperparams{}), Error);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  hp.eps_low = 0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.eps_low = 1.0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.gamma = 1.5;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.lambda = -0.1;
  CHECK_THROWS_AS(hp.validate(), Error);
}

namespace {

BufferEntry three_session_entry() {
  BufferEntry e;
  e.prompt_id = 4;
  e.request_id = 40;
  e.completed = true;
  int64_t idx = 0;
  for (PolicyVersion v : {2, 3, 5}) {
    LogprobSegment s;
    s.version = v;
    s.start_index = idx;
    for (int i = 0; i < 3; ++i) s.values.push_back(synth_logprob(40, idx++, v));
    e.segments.push_back(s);
  }
  e.partial_tokens = idx;
  return e;
}

}  // namespace

TEST_CASE("behavior logprobs are the stored values, bit for bit") {
  const BufferEntry e = three_session_entry();
  const auto tokens = assemble_behavior_logprobs(e);
  REQUIRE(tokens.size() == 9);
  for (size_t i = 0; i < 9; ++i) {
    const PolicyVersion v = i < 3 ? 2 : (i < 6 ? 3 : 5);
    CHECK(tokens[i].version == v);
    CHECK(tokens[i].logprob == synth_logprob(40, static_cast<int64_t>(i), v));
  }
  BufferEntry open = e;
  open.completed = false;
  CHECK_THROWS_AS(assemble_behavior_logprobs(open), Error);
  BufferEntry broken = e;
  broken.partial_tokens = 10;
  CHECK_THROWS_AS(assemble_behavior_logprobs(broken), Error);
}

TEST_CASE("staleness histogram and update bookkeeping") {
  TrainBatch batch;
  Trajectory t;
  t.request_id = 40;
  t.length = 9;
  t.behavior = assemble_behavior_logprobs(three_session_entry());
  batch.trajectories.push_back(t);

  PolicyClock clock;
  while (clock.version() < 5) clock.advance();
  const UpdateResult u = apply_update(clock, batch);
  CHECK(u.version_at_update == 5);
  CHECK(u.new_version == 6);
  CHECK(clock.version() == 6);
  CHECK(u.staleness.histogram == std::map<int64_t, int64_t>{{0, 3}, {2, 3}, {3, 3}});
  CHECK(u.staleness.max == 3);
  CHECK(u.staleness.p50 == 2);
  CHECK(u.staleness.tokens == 9);
}

TEST_CASE("objective is exactly on-policy when nothing is stale") {
  TrainBatch batch;
  for (RequestId id : {1, 2, 3}) {
    Trajectory t;
    t.request_id = id;
    t.length = 4;
    t.reward = id == 2 ? 1.0 : 0.0;
    for (int i = 0; i < 4; ++i) t.behavior.push_back({synth_logprob(id, i, 7), 7});
    batch.trajectories.push_back(t);
  }
  compute_advantages(batch, AdvantageKind::reinforce_pp, Hyperparams{});
  CHECK(batch.reward_mean == doctest::Approx(1.0 / 3));
  const auto on = evaluate_objective(batch, 7, Hyperparams{});
  for (double r : on.ratios) CHECK(r == 1.0);
  CHECK(std::abs(on.objective) < 1e-15);  // advantages average to zero
  const auto off = evaluate_objective(batch, 8, Hyperparams{});
  for (double r : off.ratios) CHECK(r != 1.0);
}

TEST_CASE("GAE advantages with a terminal reward and no critic") {
  TrainBatch batch;
  Trajectory t;
  t.length = 3;
  t.reward = 1.0;
  batch.trajectories.push_back(t);
  Hyperparams hp;
  hp.gamma = 0.5;
  hp.lambda = 1.0;
  compute_advantages(batch, AdvantageKind::gae, hp);
  CHECK(batch.trajectories[0].advantages == std::vector<double>{0.25, 0.5, 1.0});
}

TEST_CASE("synthetic rewards are binary and deterministic") {
  int ones = 0;
  for (RequestId id = 0; id < 2000; ++id) {
    const double r = synth_reward(id, 100, 4096);
    CHECK((r == 0.0 || r == 1.0));
    CHECK(r == synth_reward(id, 100, 4096));
    ones += r == 1.0;
  }
  CHECK(ones > 1400);  // p ~ 0.785 for short responses
  int long_ones = 0;
  for (RequestId id = 0; id < 2000; ++id) long_ones += synth_reward(id, 4096, 4096) == 1.0;
  CHECK(long_ones < ones);
}
