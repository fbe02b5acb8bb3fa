#include "supertask/simulate.hpp"

namespace supertask {

RunOutput run_agent_session(const SessionConfig& config, Agent& agent, const std::string& session_id) {
  LoggedSession session(session_id, config);
  while (!session.session().finished()) {
    const auto action = agent.act(observe(session.session()));
    if (auto feedback = session.submit(action)) agent.learn(public_view(*feedback));
  }
  RunOutput out;
  out.session_id = session_id;
  out.records = session.session().history();
  out.score = session.session().score();
  out.events = session.events();
  return out;
}

std::vector<TrialRecord> play_session(const SessionConfig& config, Agent& agent) {
  Session session(config);
  while (!session.finished()) {
    const auto action = agent.act(observe(session));
    if (auto feedback = session.submit(action)) agent.learn(public_view(*feedback));
  }
  return session.history();
}

std::uint64_t run_engine_seed(std::uint64_t batch_seed, std::uint64_t run) { return derive_seed(batch_seed, {run, 0}); }
std::uint64_t run_agent_seed(std::uint64_t batch_seed, std::uint64_t run) { return derive_seed(batch_seed, {run, 1}); }

RunOutput simulate_run(const AgentConfig& agent_config, const std::vector<int>& missions, std::uint64_t batch_seed,
                       std::uint64_t run) {
  AgentConfig ac = agent_config;
  ac.seed = run_agent_seed(batch_seed, run);
  auto agent = make_agent(ac);
  const auto seed = run_engine_seed(batch_seed, run);
  return run_agent_session(default_session_config(seed, missions), *agent, make_session_id(batch_seed, run));
}

}  // namespace supertask
