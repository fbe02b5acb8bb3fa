#include <gtest/gtest.h>

#include <cmath>

#include "supertask/agents.hpp"

using namespace supertask;

namespace {

Observation trial_obs(CodeStimulus s, std::optional<Rule> signaled, int cue = 0) {
  Observation o;
  o.kind = PromptKind::kTrialPresent;
  o.address = {2, 0, 0};
  o.mission_kind = signaled ? MissionKind::kCuedSwitch : MissionKind::kLearnedRule;
  o.cue_id = cue;
  o.signaled_rule = signaled;
  o.stimulus = s;
  o.legal = {ActionKind::kRespond};
  return o;
}

CodeStimulus random_incongruent(Rng& rng) {
  const char letters[] = {'A', 'E', 'I', 'U', 'G', 'K', 'M', 'R'};
  while (true) {
    CodeStimulus s{letters[rng.below(8)], static_cast<int>(rng.below(8)) + 1, 0};
    if (congruency_of(s) == Congruency::kIncongruent) return s;
  }
}

PartnerBeliefState with_belief(PartnerType p, double a, double b) {
  PartnerBeliefState st;
  st.beliefs[static_cast<std::size_t>(p)] = {a, b};
  return st;
}

}  // namespace

TEST(Softmax, Values) {
  const std::vector<double> v{1.0, 0.0};
  const auto p = softmax(v, 2.0);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(p[0], e2 / (e2 + 1.0), 1e-12);
  EXPECT_NEAR(p[0], 0.8808, 1e-4);
  EXPECT_NEAR(p[1], 0.1192, 1e-4);

  const std::vector<double> w{3.0, -1.0, 7.5};
  for (double x : softmax(w, 0.0)) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
  const std::vector<double> eq{5.0, 5.0};
  for (double beta : {0.0, 1.0, 100.0}) {
    const auto q = softmax(eq, beta);
    EXPECT_DOUBLE_EQ(q[0], 0.5);
    EXPECT_DOUBLE_EQ(q[1], 0.5);
  }
}

TEST(Softmax, OverflowSafe) {
  const std::vector<double> v{1000.0, 999.0};
  const auto p = softmax(v, 10.0);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Softmax, OnlyBetaTimesValueMatters) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double beta = rng.uniform(0.1, 10), c = rng.uniform(0.1, 10);
    std::vector<double> scaled;
    for (double x : v) scaled.push_back(c * x);
    const auto a = softmax(v, beta), b = softmax(scaled, beta / c);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(QUpdate, HandValues) {
  EXPECT_DOUBLE_EQ(q_update(0.0, 1.0, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(q_update(0.37, 0.37, 0.4), 0.37);
  EXPECT_DOUBLE_EQ(q_update(0.0, 1.0, 1.0), 1.0);
}

TEST(HierQ, UnseenCueChoosesRulesUniformly) {
  HierQState st;
  st.lapse = 0.0;
  Rng rng(4);
  DdmParams rt;
  int letter = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    const auto s = random_incongruent(rng);
    const auto a = hier_q_act(st, trial_obs(s, std::nullopt), rng, rt);
    letter += *a.side == classify(s, Rule::kLetter);
  }
  EXPECT_NEAR(letter / static_cast<double>(n), 0.5, 0.02);
}

TEST(HierQ, LearnsRewardedRule) {
  // cue -> LETTER, 50 trials with feedback, then the 51st choice
  Rng rng(5);
  DdmParams rt;
  int letter = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    HierQState st;
    st.alpha = 0.3;
    st.beta = 6.0;
    st.lapse = 0.0;
    const CueKey key{2, 0, 0};
    for (int t = 0; t < 50; ++t) {
      const auto s = random_incongruent(rng);
      const auto a = hier_q_act(st, trial_obs(s, std::nullopt), rng, rt);
      hier_q_learn(st, key, s, *a.side, *a.side == classify(s, Rule::kLetter));
    }
    const auto s = random_incongruent(rng);
    letter += *hier_q_act(st, trial_obs(s, std::nullopt), rng, rt).side == classify(s, Rule::kLetter);
  }
  EXPECT_GT(letter / static_cast<double>(reps), 0.95);
}

TEST(HierQ, LapseBoundsAccuracy) {
  HierQState st;
  st.lapse = 0.5;
  Rng rng(6);
  DdmParams rt;
  int correct = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    const auto s = random_incongruent(rng);
    correct += *hier_q_act(st, trial_obs(s, Rule::kNumber), rng, rt).side == classify(s, Rule::kNumber);
  }
  // 0.5 * 1 + 0.5 * 0.5 with Monte Carlo slack
  EXPECT_LE(correct / static_cast<double>(n), 0.75 + 0.015);
  EXPECT_GE(correct / static_cast<double>(n), 0.75 - 0.015);
}

TEST(HierQ, ValuesStayInUnitInterval) {
  Rng rng(7);
  for (double alpha : {0.05, 0.5, 1.0}) {
    HierQState st;
    st.alpha = alpha;
    for (int i = 0; i < 2000; ++i) {
      const CueKey key{2, 0, static_cast<int>(rng.below(3))};
      const auto s = random_incongruent(rng);
      hier_q_learn(st, key, s, rng.below(2) ? ResponseSide::kLeft : ResponseSide::kRight, rng.below(2) == 0);
      for (double q : st.values(key)) {
        EXPECT_GE(q, -1.0);
        EXPECT_LE(q, 1.0);
      }
    }
  }
}

TEST(HierQ, CongruentFeedbackCreditsBothRules) {
  HierQState st;
  st.alpha = 0.5;
  const CueKey key{2, 1, 0};
  hier_q_learn(st, key, {'A', 7}, ResponseSide::kLeft, true);
  EXPECT_DOUBLE_EQ(st.values(key)[0], 0.5);
  EXPECT_DOUBLE_EQ(st.values(key)[1], 0.5);
  hier_q_learn(st, key, {'A', 4}, ResponseSide::kRight, false);  // NUMBER-consistent only
  EXPECT_DOUBLE_EQ(st.values(key)[0], 0.5);
  EXPECT_DOUBLE_EQ(st.values(key)[1], -0.25);
  // another block's cue 0 is a different cue
  EXPECT_DOUBLE_EQ(st.values({2, 2, 0})[0], 0.0);
}

TEST(Beliefs, ConjugateUpdate) {
  PartnerBeliefState st;
  auto up = belief_update(st, PartnerType::kKind, true);
  EXPECT_EQ(up.beliefs[0], (BetaBelief{2.0, 1.0}));
  EXPECT_NEAR(up.beliefs[0].mean(), 2.0 / 3.0, 1e-15);
  auto down = belief_update(st, PartnerType::kJerk, false);
  EXPECT_EQ(down.beliefs[2], (BetaBelief{1.0, 2.0}));
  EXPECT_NEAR(down.beliefs[2].mean(), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(down.beliefs[0], (BetaBelief{1.0, 1.0}));
}

TEST(Beliefs, Concentration) {
  const double p = 0.85;
  const int n = 100;
  int within = 0, within_spec = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    PartnerBeliefState st;
    for (int i = 0; i < n; ++i) st = belief_update(st, PartnerType::kKind, rng.bernoulli(p));
    const double m = st.beliefs[0].mean();
    within += std::abs(m - p) <= 2.0 * std::sqrt(p * (1 - p) / n);
    within_spec += std::abs(m - p) <= 0.07;
  }
  EXPECT_GE(within, 900);
  EXPECT_GE(within_spec, 900);
}

TEST(Delegation, HandArithmetic) {
  // p_hat 0.9: EV_engage = 9 - 1 = 8, EV_avoid = 8 - 2 - 2 = 4
  auto st = with_belief(PartnerType::kKind, 9.0, 1.0);
  EXPECT_NEAR(engage_advantage(st, PartnerType::kKind, Controllability::kFull, {}), 4.0, 1e-12);
  EXPECT_EQ(delegation_decision(st, PartnerType::kKind, Controllability::kFull, {}), ActionKind::kEngage);
  // p_hat 0.2: EV_engage = 2 - 8 = -6
  st = with_belief(PartnerType::kJerk, 2.0, 8.0);
  EXPECT_NEAR(engage_advantage(st, PartnerType::kJerk, Controllability::kFull, {}), -10.0, 1e-12);
  EXPECT_EQ(delegation_decision(st, PartnerType::kJerk, Controllability::kFull, {}), ActionKind::kAvoid);
}

TEST(Delegation, LargeKappaAvoidsUnderPartialControl) {
  const auto squeeze = Probability::from_double(0.8);
  for (double a : {1.0, 10.0, 1e6}) {
    auto st = with_belief(PartnerType::kKind, a, 1e-9);
    st.kappa = 100.0;
    EXPECT_EQ(delegation_decision(st, PartnerType::kKind, Controllability::kPartial, squeeze), ActionKind::kAvoid);
    // full control ignores kappa
    EXPECT_EQ(delegation_decision(st, PartnerType::kKind, Controllability::kFull, squeeze), ActionKind::kEngage);
  }
}

TEST(Delegation, TieGoesToAvoid) {
  PartnerBeliefState st;  // p_hat 0.5, EV_engage 0
  st.p_self = 0.5;
  st.avoid_cost = 0;  // EV_avoid 0
  EXPECT_DOUBLE_EQ(engage_advantage(st, PartnerType::kClumsy, Controllability::kFull, {}), 0.0);
  EXPECT_EQ(delegation_decision(st, PartnerType::kClumsy, Controllability::kFull, {}), ActionKind::kAvoid);
}

TEST(RandomAct, UniformChoices) {
  Rng rng(8);
  const int n = 10'000;
  int left = 0, engage = 0;
  auto present = trial_obs({'A', 4}, Rule::kLetter);
  Observation offer;
  offer.kind = PromptKind::kPartnerOffer;
  offer.legal = {ActionKind::kAvoid, ActionKind::kEngage};
  for (int i = 0; i < n; ++i) {
    const auto a = random_act(present, rng);
    EXPECT_EQ(a.kind, ActionKind::kRespond);
    EXPECT_GE(a.rt_ms, 300);
    EXPECT_LE(a.rt_ms, 1500);
    left += *a.side == ResponseSide::kLeft;
    const auto b = random_act(offer, rng);
    EXPECT_FALSE(b.side.has_value());
    engage += b.kind == ActionKind::kEngage;
  }
  EXPECT_NEAR(left / static_cast<double>(n), 0.5, 0.02);
  EXPECT_NEAR(engage / static_cast<double>(n), 0.5, 0.02);
}

TEST(Agents, EveryActionIsLegalOverFullSessions) {
  for (std::size_t k = 0; k < enum_count<AgentKind>(); ++k) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      AgentConfig ac;
      ac.kind = static_cast<AgentKind>(k);
      ac.seed = seed;
      if (ac.kind == AgentKind::kPartnerBelief) ac.params["kappa"] = seed * 10.0;
      auto agent = make_agent(ac);
      Session s(default_session_config(seed + 50));
      int actions = 0;
      while (!s.finished()) {
        const auto obs = observe(s);
        const auto a = agent->act(obs);
        ASSERT_NE(std::find(obs.legal.begin(), obs.legal.end(), a.kind), obs.legal.end())
            << to_string(ac.kind) << " chose " << to_string(a.kind) << " at " << to_string(obs.kind);
        ASSERT_GE(a.rt_ms, 0);
        if (auto fb = s.submit(a)) agent->learn(public_view(*fb));
        ++actions;
      }
      EXPECT_GE(actions, 444);
    }
  }
}

TEST(Agents, RandomAgentIsAtChance) {
  AgentConfig ac;
  ac.seed = 9;
  auto agent = make_agent(ac);
  SessionConfig cfg;
  cfg.seed = 9;
  MissionSpec m = default_mission(1);
  m.blocks = {{.index = 0, .n_trials = 2000, .mission_kind = MissionKind::kCuedSwitch}};
  cfg.missions = {m};
  Session s(cfg);
  while (!s.finished()) s.submit(agent->act(observe(s)));
  int correct = 0;
  for (const auto& r : s.history()) correct += r.correct;
  EXPECT_NEAR(correct / 2000.0, 0.5, 0.03);
}

TEST(Agents, ParameterValidation) {
  AgentConfig ac;
  ac.kind = AgentKind::kHierQ;
  ac.params = {{"alpha", 1.5}};
  EXPECT_THROW(make_agent(ac), std::invalid_argument);
  ac.params = {{"gamma", 0.9}};
  EXPECT_THROW(make_agent(ac), std::invalid_argument);
  ac.params = {{"lapse", 0.7}};
  EXPECT_THROW(make_agent(ac), std::invalid_argument);
  ac.kind = AgentKind::kPartnerBelief;
  ac.params = {{"kappa", -1.0}};
  EXPECT_THROW(make_agent(ac), std::invalid_argument);
  ac.params = {{"kappa", 15.0}, {"p_self", 0.7}};
  EXPECT_EQ(make_agent(ac)->kind(), AgentKind::kPartnerBelief);
  ac.kind = AgentKind::kRandom;
  ac.params = {{"alpha", 0.3}};
  EXPECT_THROW(make_agent(ac), std::invalid_argument);
}

TEST(Agents, DefaultParameters) {
  const auto hq = default_agent_params(AgentKind::kHierQ);
  EXPECT_DOUBLE_EQ(hq.at("alpha"), 0.3);
  EXPECT_DOUBLE_EQ(hq.at("beta"), 6.0);
  EXPECT_DOUBLE_EQ(hq.at("lapse"), 0.02);
  const auto pb = default_agent_params(AgentKind::kPartnerBelief);
  EXPECT_DOUBLE_EQ(pb.at("kappa"), 0.0);
  EXPECT_DOUBLE_EQ(pb.at("p_self"), 0.8);
  EXPECT_TRUE(default_agent_params(AgentKind::kRandom).empty());
}

TEST(Agents, SameSeedSameTrace) {
  auto trace = [](std::uint64_t seed) {
    AgentConfig ac;
    ac.kind = AgentKind::kPartnerBelief;
    ac.seed = seed;
    auto agent = make_agent(ac);
    Session s(default_session_config(1, {3}));
    std::vector<PlayerAction> out;
    while (!s.finished()) {
      out.push_back(agent->act(observe(s)));
      if (auto fb = s.submit(out.back())) agent->learn(public_view(*fb));
    }
    return out;
  };
  EXPECT_EQ(trace(4), trace(4));
  EXPECT_NE(trace(4), trace(5));
}
