#pragma once

#include <string>
#include <vector>

#include "supertask/agents.hpp"
#include "supertask/logstore.hpp"

namespace supertask {

struct RunOutput {
  std::string session_id;
  std::vector<TrialRecord> records;
  int score = 0;
  std::vector<EventRecord> events;
};

/// Plays one full session with the agent, exactly as a remote client would:
/// observation in, action out, public feedback back.
RunOutput run_agent_session(const SessionConfig& config, Agent& agent, const std::string& session_id);

/// Same loop without an event log, for large simulation studies.
std::vector<TrialRecord> play_session(const SessionConfig& config, Agent& agent);

/// Seed conventions for batch runs: run r of a batch seeded S uses engine seed
/// derive_seed(S, {r, 0}) and agent seed derive_seed(S, {r, 1}).
std::uint64_t run_engine_seed(std::uint64_t batch_seed, std::uint64_t run);
std::uint64_t run_agent_seed(std::uint64_t batch_seed, std::uint64_t run);

/// Convenience: fresh agent and engine for run r of a seeded batch.
RunOutput simulate_run(const AgentConfig& agent, const std::vector<int>& missions, std::uint64_t batch_seed,
                       std::uint64_t run);

}  // namespace supertask
