#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "supertask/engine.hpp"

using namespace supertask;

namespace {

std::set<ActionKind> oracle_legal(const Prompt& p) {
  switch (p.kind) {
    case PromptKind::kTrialPresent:
    case PromptKind::kSelfSolve:
      return {ActionKind::kRespond};
    case PromptKind::kPartnerOffer:
      return {ActionKind::kAvoid, ActionKind::kEngage};
    case PromptKind::kProposalReview:
      if (p.forced) return {ActionKind::kAccept};
      return {ActionKind::kAccept, ActionKind::kCheck};
    case PromptKind::kSessionEnd:
      return {};
  }
  return {};
}

ResponseSide truth_of(const Prompt& p) { return classify(p.trial->stimulus, p.trial->cue.true_rule); }

// Random legal play; RESPOND sides are coin flips.
PlayerAction random_legal(const Session& s, Rng& rng) {
  const auto legal = s.legal();
  const auto kind = legal[rng.below(legal.size())];
  if (kind == ActionKind::kRespond) return PlayerAction::respond(rng.below(2) ? ResponseSide::kLeft : ResponseSide::kRight, 400);
  return PlayerAction::of(kind, 400);
}

std::vector<PlayerAction> all_candidate_actions() {
  std::vector<PlayerAction> out;
  for (std::size_t k = 0; k < enum_count<ActionKind>(); ++k) {
    const auto kind = static_cast<ActionKind>(k);
    if (kind == ActionKind::kRespond) {
      out.push_back(PlayerAction::respond(ResponseSide::kLeft, 300));
      out.push_back(PlayerAction::respond(ResponseSide::kRight, 300));
    } else {
      out.push_back(PlayerAction::of(kind, 300));
    }
  }
  return out;
}

SessionConfig social_config(std::uint64_t seed, Controllability c, int n, double squeeze = 0.8) {
  SessionConfig cfg;
  cfg.seed = seed;
  MissionSpec m;
  m.mission_id = 3;
  BlockSpec b{.index = 0, .n_trials = n, .mission_kind = MissionKind::kSocial, .cue_set_size = 2, .controllability = c};
  if (c == Controllability::kPartial) b.squeeze_prob = Probability::from_double(squeeze);
  m.blocks.push_back(b);
  cfg.missions.push_back(m);
  return cfg;
}

}  // namespace

TEST(Session, FirstPrompt) {
  Session s(default_session_config(7));
  ASSERT_EQ(s.prompt().kind, PromptKind::kTrialPresent);
  ASSERT_TRUE(s.prompt().trial);
  EXPECT_EQ(s.prompt().trial->address, (TrialAddress{1, 0, 0}));
  EXPECT_FALSE(s.prompt().trial->is_switch.has_value());
  EXPECT_EQ(s.score(), 0);
}

TEST(Session, SameSeedSameFirstTrial) {
  Session a(default_session_config(7)), b(default_session_config(7)), c(default_session_config(8));
  EXPECT_EQ(*a.prompt().trial, *b.prompt().trial);
  EXPECT_EQ(a.state_hash(), b.state_hash());
  // A different seed gives a different session somewhere in the first block.
  bool differs = false;
  for (int i = 0; i < 48 && !differs; ++i) {
    differs = a.prompt().trial->stimulus != c.prompt().trial->stimulus;
    a.submit(PlayerAction::respond(ResponseSide::kLeft, 1));
    c.submit(PlayerAction::respond(ResponseSide::kLeft, 1));
  }
  EXPECT_TRUE(differs);
}

TEST(Session, EmptyConfigRejected) {
  SessionConfig cfg;
  EXPECT_THROW(Session{cfg}, ConfigError);
  cfg = default_session_config(1, {3});
  cfg.missions[0].blocks[0].controllability.reset();
  try {
    Session s(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_FALSE(e.violations().empty());
  }
}

TEST(Generator, CuedSwitchBlockCounts) {
  Rng rng(42);
  const BlockSpec b{.index = 0, .n_trials = 48, .mission_kind = MissionKind::kCuedSwitch};
  const auto trials = generate_block_trials(1, b, rng);
  ASSERT_EQ(trials.size(), 48u);
  int switches = 0, classified = 0, congruent = 0;
  for (const auto& t : trials) {
    congruent += t.congruency == Congruency::kCongruent;
    EXPECT_EQ(t.congruency, congruency_of(t.stimulus));
    EXPECT_EQ(t.cue.signaled_rule, t.cue.true_rule);
    EXPECT_TRUE(is_valid(t.stimulus));
    if (t.is_switch) {
      ++classified;
      switches += *t.is_switch;
    }
  }
  EXPECT_EQ(congruent, 24);
  EXPECT_EQ(classified, 47);
  const double frac = static_cast<double>(switches) / classified;
  EXPECT_GE(frac, 0.35);
  EXPECT_LE(frac, 0.65);
}

TEST(Generator, SwitchFlagFollowsRuleSequence) {
  Rng rng(3);
  const BlockSpec b{.index = 0, .n_trials = 200, .mission_kind = MissionKind::kCuedSwitch};
  const auto trials = generate_block_trials(1, b, rng);
  for (std::size_t i = 1; i < trials.size(); ++i) {
    EXPECT_EQ(*trials[i].is_switch, trials[i].cue.true_rule != trials[i - 1].cue.true_rule);
  }
}

TEST(Generator, LearnedRuleCueBalance) {
  Rng rng(42);
  const BlockSpec b{.index = 0, .n_trials = 60, .mission_kind = MissionKind::kLearnedRule, .cue_set_size = 4};
  const auto trials = generate_block_trials(2, b, rng);
  std::map<int, int> counts;
  std::map<int, Rule> rule_of;
  for (const auto& t : trials) {
    ++counts[t.cue.id];
    EXPECT_FALSE(t.cue.signaled_rule.has_value());
    auto [it, fresh] = rule_of.emplace(t.cue.id, t.cue.true_rule);
    EXPECT_EQ(it->second, t.cue.true_rule) << "cue map must be fixed within a block";
  }
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [cue, n] : counts) EXPECT_GE(n, 15) << cue;
}

TEST(Generator, SocialPartnerCounts) {
  Rng rng(42);
  const BlockSpec b{.index = 0,
                    .n_trials = 60,
                    .mission_kind = MissionKind::kSocial,
                    .cue_set_size = 2,
                    .controllability = Controllability::kFull};
  const auto trials = generate_block_trials(3, b, rng);
  std::map<PartnerType, int> counts;
  for (const auto& t : trials) {
    ASSERT_TRUE(t.partner);
    ++counts[t.partner->type];
  }
  for (int p = 0; p < 3; ++p) EXPECT_GE(counts[static_cast<PartnerType>(p)], 12);
}

TEST(PartnerPropose, MonteCarloReliability) {
  TrialSpec t;
  t.stimulus = {'A', 4};
  t.cue.true_rule = Rule::kLetter;
  const auto truth = classify(t.stimulus, t.cue.true_rule);
  for (auto [type, expect] : {std::pair{PartnerType::kKind, 0.85}, std::pair{PartnerType::kJerk, 0.20},
                              std::pair{PartnerType::kClumsy, 0.55}}) {
    int correct = 0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(99, {static_cast<std::uint64_t>(i)}));
      correct += partner_propose(default_partner(type), t, rng) == truth;
    }
    EXPECT_NEAR(correct / static_cast<double>(n), expect, 0.02) << to_string(type);
  }
  PartnerSpec perfect{PartnerType::kKind, Probability::from_ppm(1'000'000), 0};
  Rng rng(1);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(partner_propose(perfect, t, rng), truth);
}

TEST(Submit, CorrectRespondPays) {
  Session s(default_session_config(7, {1}));
  const auto fb = s.submit(PlayerAction::respond(truth_of(s.prompt()), 500));
  ASSERT_TRUE(fb);
  EXPECT_TRUE(fb->correct);
  EXPECT_EQ(fb->payoff, 10);
  EXPECT_EQ(s.score(), 10);
  EXPECT_EQ(fb->error_class, ErrorClass::kNone);
  const auto fb2 = s.submit(PlayerAction::respond(opposite(truth_of(s.prompt())), 500));
  EXPECT_EQ(fb2->payoff, -10);
  EXPECT_EQ(s.score(), 0);
}

TEST(Submit, IllegalActionLeavesStateUntouched) {
  Session s(default_session_config(7, {3}));
  ASSERT_EQ(s.prompt().kind, PromptKind::kPartnerOffer);
  const auto before = s.state_hash();
  try {
    s.submit(PlayerAction::respond(ResponseSide::kLeft, 100));
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    std::set<ActionKind> legal(e.legal().begin(), e.legal().end());
    EXPECT_EQ(legal, (std::set<ActionKind>{ActionKind::kAvoid, ActionKind::kEngage}));
  }
  EXPECT_EQ(s.state_hash(), before);
  EXPECT_THROW(s.submit(PlayerAction::of(ActionKind::kSelfSolve, 1)), ProtocolError);
  EXPECT_THROW(s.submit(PlayerAction::of(ActionKind::kEngage, -1)), ProtocolError);
  EXPECT_THROW(s.submit(PlayerAction{ActionKind::kEngage, ResponseSide::kLeft, 1}), ProtocolError);
  EXPECT_EQ(s.state_hash(), before);
}

TEST(Submit, SelfSolveCosts) {
  // AVOID then correct, CHECK then correct, AVOID then wrong
  Session s(default_session_config(11, {3}));
  s.submit(PlayerAction::of(ActionKind::kAvoid, 100));
  ASSERT_EQ(s.prompt().kind, PromptKind::kSelfSolve);
  EXPECT_EQ(s.prompt().reason, SelfSolveReason::kAvoid);
  auto fb = s.submit(PlayerAction::respond(truth_of(s.prompt()), 100));
  EXPECT_EQ(fb->payoff, 8);

  s.submit(PlayerAction::of(ActionKind::kEngage, 100));
  ASSERT_EQ(s.prompt().kind, PromptKind::kProposalReview);
  ASSERT_FALSE(s.prompt().forced);  // FULL block
  s.submit(PlayerAction::of(ActionKind::kCheck, 100));
  ASSERT_EQ(s.prompt().kind, PromptKind::kSelfSolve);
  EXPECT_EQ(s.prompt().reason, SelfSolveReason::kCheck);
  fb = s.submit(PlayerAction::respond(truth_of(s.prompt()), 100));
  EXPECT_EQ(fb->payoff, 8);
  EXPECT_FALSE(fb->delegated);

  s.submit(PlayerAction::of(ActionKind::kAvoid, 100));
  fb = s.submit(PlayerAction::respond(opposite(truth_of(s.prompt())), 100));
  EXPECT_EQ(fb->payoff, -12);
  EXPECT_EQ(s.score(), 8 + 8 - 12);
}

TEST(Submit, ForcedWrongProposalUnderPartialControl) {
  // Search trials until a squeeze meets a wrong proposal.
  Session s(social_config(5, Controllability::kPartial, 400));
  bool seen = false;
  while (!s.finished() && !seen) {
    s.submit(PlayerAction::of(ActionKind::kEngage, 200));
    const auto& p = s.prompt();
    ASSERT_EQ(p.kind, PromptKind::kProposalReview);
    const bool wrong = *p.proposed != truth_of(p);
    if (p.forced) {
      EXPECT_EQ(s.legal(), std::vector<ActionKind>{ActionKind::kAccept});
      EXPECT_THROW(s.submit(PlayerAction::of(ActionKind::kCheck, 1)), ProtocolError);
    }
    const bool forced = p.forced;
    const auto fb = s.submit(PlayerAction::of(ActionKind::kAccept, 300));
    ASSERT_TRUE(fb);
    const auto& r = s.history().back();
    EXPECT_EQ(r.control_lost, forced);
    if (forced && wrong) {
      EXPECT_TRUE(r.delegated);
      EXPECT_TRUE(r.control_lost);
      EXPECT_FALSE(r.correct);
      EXPECT_EQ(r.payoff, -10);
      EXPECT_EQ(r.rt_ms, 200);  // decided by the ENGAGE
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST(Submit, ControlLossRates) {
  int engaged = 0, lost = 0;
  Session partial(social_config(17, Controllability::kPartial, 10'000));
  while (!partial.finished()) {
    if (partial.prompt().kind == PromptKind::kPartnerOffer) {
      partial.submit(PlayerAction::of(ActionKind::kEngage, 1));
      ++engaged;
      lost += partial.prompt().forced;
    } else {
      partial.submit(PlayerAction::of(ActionKind::kAccept, 1));
    }
  }
  EXPECT_NEAR(lost / static_cast<double>(engaged), 0.8, 0.05);

  Session full(social_config(17, Controllability::kFull, 2'000));
  while (!full.finished()) {
    full.submit(PlayerAction::of(full.prompt().kind == PromptKind::kPartnerOffer ? ActionKind::kEngage : ActionKind::kAccept, 1));
  }
  for (const auto& r : full.history()) EXPECT_FALSE(r.control_lost);
}

// From every reachable state, exactly the table's actions are accepted and
// rejected ones do not change the state.
TEST(Properties, LegalityFromReachableStates) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto cfg = default_session_config(seed);
    for (auto& m : cfg.missions) {
      for (auto& b : m.blocks) b.n_trials = 12;
    }
    Session s(cfg);
    Rng rng(seed + 100);
    while (true) {
      const auto expect = oracle_legal(s.prompt());
      const auto listed = s.legal();
      EXPECT_EQ(std::set<ActionKind>(listed.begin(), listed.end()), expect);
      for (const auto& a : all_candidate_actions()) {
        Session copy = s;
        const auto before = copy.state_hash();
        if (expect.count(a.kind)) {
          EXPECT_NO_THROW(copy.submit(a));
        } else {
          EXPECT_THROW(copy.submit(a), ProtocolError);
          EXPECT_EQ(copy.state_hash(), before);
        }
      }
      if (s.finished()) break;
      s.submit(random_legal(s, rng));
    }
  }
}

TEST(Properties, ConservationHierarchyAndBoundaries) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Session s(default_session_config(seed));
    Rng rng(seed);
    std::vector<BoundaryEvent> boundaries;
    while (!s.finished()) {
      if (auto fb = s.submit(random_legal(s, rng))) {
        boundaries.insert(boundaries.end(), fb->boundaries.begin(), fb->boundaries.end());
      }
    }
    const auto& h = s.history();
    EXPECT_EQ(h.size(), 144u + 180u + 120u);
    int sum = 0;
    for (const auto& r : h) sum += r.payoff;
    EXPECT_EQ(sum, s.score());
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LT(h[i - 1].address, h[i].address);

    // one BLOCK_END per block in order, MISSION_END after each mission's last block
    std::vector<std::pair<int, int>> seen;
    int missions = 0;
    for (const auto& b : boundaries) {
      if (b.kind == BoundaryEvent::Kind::kBlockEnd) seen.emplace_back(b.mission_id, b.block_index);
      else ++missions;
    }
    EXPECT_EQ(missions, 3);
    EXPECT_EQ(seen, (std::vector<std::pair<int, int>>{{1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}, {2, 2}, {3, 0}, {3, 1}}));
    int block_total = 0;
    for (const auto& b : boundaries) {
      if (b.kind == BoundaryEvent::Kind::kBlockEnd) block_total += b.points;
    }
    EXPECT_EQ(block_total, s.score());
    EXPECT_THROW(s.submit(PlayerAction::respond(ResponseSide::kLeft, 1)), ProtocolError);
  }
}

TEST(Properties, DeterministicUnderSameTrace) {
  auto play = [](std::uint64_t seed) {
    Session s(default_session_config(seed));
    Rng rng(1234);
    while (!s.finished()) s.submit(random_legal(s, rng));
    return s;
  };
  const auto a = play(21), b = play(21);
  EXPECT_EQ(a.history(), b.history());
  EXPECT_EQ(a.score(), b.score());
  EXPECT_EQ(a.state_hash(), b.state_hash());
}

TEST(Observation, HidesTrueRuleAndReliability) {
  Session s(default_session_config(3, {2}));
  const auto obs = observe(s);
  EXPECT_EQ(obs.kind, PromptKind::kTrialPresent);
  EXPECT_FALSE(obs.signaled_rule.has_value());
  EXPECT_EQ(obs.stimulus, s.prompt().trial->stimulus);
  Session m3(default_session_config(3, {3}));
  const auto o3 = observe(m3);
  EXPECT_EQ(o3.partner_type, m3.prompt().trial->partner->type);
  const auto legal = m3.legal();
  EXPECT_EQ(o3.legal, legal);
}

TEST(Feedback, PublicViewDropsErrorClass) {
  Session s(default_session_config(7, {1}));
  const auto fb = s.submit(PlayerAction::respond(ResponseSide::kLeft, 10));
  const auto view = public_view(*fb);
  EXPECT_EQ(view.correct, fb->correct);
  EXPECT_EQ(view.payoff, fb->payoff);
  EXPECT_EQ(view.score, fb->score);
  EXPECT_EQ(view.address, fb->address);
}
