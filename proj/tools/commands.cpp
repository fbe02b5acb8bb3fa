#include "commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "supertask/csv.hpp"
#include "supertask/server.hpp"
#include "supertask/simulate.hpp"

namespace supertask::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path output_root() {
  const char* env = std::getenv("SUPERTASK_OUT");
  return env && *env ? fs::path(env) : fs::path("out");
}

fs::path default_dir(const std::string& command, std::uint64_t seed) {
  return output_root() / command / std::to_string(seed);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw UsageError(fmt::format("{}: '{}' is not a number", what, text));
  }
  return v;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    for (const auto& kv : split(item, ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("parameter '" + kv + "' is not k=v");
      const auto key = trim(kv.substr(0, eq));
      out[key] = parse_number(trim(kv.substr(eq + 1)), "parameter " + key);
    }
  }
  return out;
}

std::vector<int> parse_missions(const std::string& text) {
  if (text == "all") return {1, 2, 3};
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    if (part != "1" && part != "2" && part != "3") throw UsageError("mission must be all, 1, 2 or 3, got '" + part + "'");
    out.push_back(part[0] - '0');
  }
  return out;
}

AgentKind parse_agent(const std::string& name) {
  const auto kind = parse_enum<AgentKind>(name);
  if (!kind) {
    std::string known;
    for (auto n : EnumNames<AgentKind>::names) known += (known.empty() ? "" : ", ") + std::string(n);
    throw UsageError("unknown agent '" + name + "' (known: " + known + ")");
  }
  return *kind;
}

// "hier_q" or "partner_belief:kappa=15,p_self=0.7"
AgentConfig parse_agent_spec(const std::string& spec) {
  AgentConfig ac;
  const auto colon = spec.find(':');
  ac.kind = parse_agent(trim(spec.substr(0, colon)));
  if (colon != std::string::npos) ac.params = parse_params({spec.substr(colon + 1)});
  return ac;
}

void check_agent(const AgentConfig& ac) {
  try {
    (void)make_agent(ac);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// alpha=0.1,0.3,0.5;beta=2,6 -> cartesian product, first parameter outermost
std::vector<std::map<std::string, double>> parse_grid(const std::string& text) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& axis : split(text, ';')) {
    if (axis.empty()) continue;
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw UsageError("grid axis '" + axis + "' is not name=v1,v2,...");
    const auto name = trim(axis.substr(0, eq));
    std::vector<double> values;
    for (const auto& v : split(axis.substr(eq + 1), ',')) values.push_back(parse_number(v, "grid " + name));
    axes.emplace_back(name, std::move(values));
  }
  if (axes.empty()) throw UsageError("empty grid");
  std::vector<std::map<std::string, double>> cells{{}};
  for (const auto& [name, values] : axes) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& c : cells) {
      for (double v : values) {
        auto cell = c;
        cell[name] = v;
        next.push_back(std::move(cell));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path.string());
  f << content;
  if (!f.flush()) throw InputError("cannot write " + path.string());
}

std::string opt(const std::optional<double>& x, int precision = 3) {
  return x ? fmt::format("{:.{}f}", *x, precision) : std::string("-");
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? std::nan("") : s / static_cast<double>(xs.size());
}

double accuracy_of(std::span<const TrialRecord> records) {
  if (records.empty()) return std::nan("");
  int correct = 0;
  for (const auto& r : records) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

// ---- loading logs ----

struct LoadedSession {
  fs::path path;
  std::string session_id;
  std::vector<TrialRecord> records;
  int score = 0;
  bool complete = false;
};

std::vector<fs::path> log_files(const fs::path& path) {
  if (!fs::exists(path)) throw InputError(path.string() + ": no such file or directory");
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError(path.string() + ": no .jsonl logs");
  return files;
}

std::vector<LoadedSession> load_sessions(const fs::path& path) {
  std::vector<LoadedSession> out;
  for (const auto& file : log_files(path)) {
    std::vector<EventRecord> events;
    try {
      events = parse_log(read_lines(file), {.require_complete = false});
    } catch (const LogError& e) {
      throw InputError(fmt::format("{}:{}: {}", file.string(), e.line(), e.what()));
    } catch (const std::exception& e) {
      throw InputError(fmt::format("{}: {}", file.string(), e.what()));
    }
    try {
      auto result = replay(events);
      out.push_back({file, result.session_id, std::move(result.records), result.final_score, result.complete});
    } catch (const ReplayDivergence& e) {
      // seq is the 0-based line index of a gapless log
      throw InputError(fmt::format("{}:{}: {}", file.string(), e.seq() + 1, e.what()));
    } catch (const std::exception& e) {
      throw InputError(fmt::format("{}: {}", file.string(), e.what()));
    }
  }
  return out;
}

std::vector<SessionTrials> as_trials(const std::vector<LoadedSession>& sessions) {
  std::vector<SessionTrials> out;
  for (const auto& s : sessions) out.push_back({s.session_id, s.records});
  return out;
}

// ---- simulate ----

int cmd_simulate(const std::string& mission, const std::string& agent, const std::vector<std::string>& params,
                 std::uint64_t seed, int runs, const std::string& out_dir, std::ostream& out) {
  AgentConfig ac;
  ac.kind = parse_agent(agent);
  ac.params = parse_params(params);
  check_agent(ac);
  const auto missions = parse_missions(mission);
  const fs::path dir = out_dir.empty() ? default_dir("simulate", seed) : fs::path(out_dir);
  fs::create_directories(dir);

  CsvTable summary({"run", "file", "session_id", "score", "n_trials", "accuracy"});
  out << fmt::format("{:>5}  {:<16}  {:>6}  {:>7}  {:>8}\n", "run", "file", "score", "trials", "accuracy");
  for (int r = 0; r < runs; ++r) {
    const auto run = simulate_run(ac, missions, seed, static_cast<std::uint64_t>(r));
    std::vector<std::string> lines;
    lines.reserve(run.events.size());
    for (const auto& e : run.events) lines.push_back(serialize_event(e));
    const auto name = fmt::format("run_{:04d}.jsonl", r);
    write_lines(dir / name, lines);
    const double acc = accuracy_of(run.records);
    summary.add_row({std::to_string(r), name, run.session_id, std::to_string(run.score),
                     std::to_string(run.records.size()), format_real(acc)});
    out << fmt::format("{:>5}  {:<16}  {:>6}  {:>7}  {:>8.3f}\n", r, name, run.score, run.records.size(), acc);
  }
  write_file(dir / "summary.csv", summary.str());
  out << fmt::format("wrote {} log(s) to {}\n", runs, dir.string());
  return kOk;
}

// ---- analyze ----

void report_switch(const std::vector<LoadedSession>& sessions, std::ostream& out) {
  out << "== switch costs (correct-trial RT, CUED_SWITCH) ==\n";
  std::vector<SwitchCostResult> costs;
  for (const auto& s : sessions) {
    if (auto c = switch_cost(s.records)) costs.push_back(*c);
  }
  if (costs.empty()) {
    out << "no CUED_SWITCH data\n";
    return;
  }
  if (sessions.size() == 1) {
    const auto& c = costs.front();
    out << fmt::format("n_switch {}  n_repeat {}\n", c.n_switch, c.n_repeat);
    out << fmt::format("rt switch {:.1f} ms  repeat {:.1f} ms\n", c.rt_switch_ms, c.rt_repeat_ms);
    out << fmt::format("acc switch {:.3f}  repeat {:.3f}\n", c.acc_switch, c.acc_repeat);
    out << fmt::format("d_rt_ms {:.1f} (sem {:.1f})  d_acc {:.3f} (sem {:.3f})\n", c.d_rt_ms, c.sem_rt_ms, c.d_acc,
                       c.sem_acc);
    return;
  }
  const auto agg = aggregate_switch_costs(costs);
  if (!agg) {
    out << "too few sessions to aggregate\n";
    return;
  }
  out << fmt::format("sessions {}\n", agg->n_sessions);
  out << fmt::format("{:<8} {:>10} {:>9} {:>8} {:>8}\n", "", "rt_ms", "ws_sem", "acc", "ws_sem");
  const char* names[2] = {"switch", "repeat"};
  for (int i = 0; i < 2; ++i) {
    out << fmt::format("{:<8} {:>10.1f} {:>9.1f} {:>8.3f} {:>8.3f}\n", names[i], agg->rt_ms[i], agg->rt_sem_within[i],
                       agg->acc[i], agg->acc_sem_within[i]);
  }
  out << fmt::format("d_rt_ms {:.1f} (sem {:.1f})  d_acc {:.3f} (sem {:.3f})\n", agg->d_rt_ms, agg->sem_d_rt_ms,
                     agg->d_acc, agg->sem_d_acc);
}

void report_errors(const std::vector<LoadedSession>& sessions, std::ostream& out) {
  out << "== error classes ==\n";
  std::vector<TrialRecord> all;
  for (const auto& s : sessions) all.insert(all.end(), s.records.begin(), s.records.end());
  const auto b = error_breakdown(all);
  out << fmt::format("trials {}\n", b.total);
  for (std::size_t i = 0; i < b.counts.size(); ++i) {
    out << fmt::format("{:<14} {:>7} {:>8.4f}\n", to_string(static_cast<ErrorClass>(i)), b.counts[i], b.rates[i]);
  }
}

void report_curve(const std::vector<LoadedSession>& sessions, std::ostream& out) {
  out << "== learning curve (LEARNED_RULE) ==\n";
  std::vector<LearningCurve> curves;
  for (const auto& s : sessions) curves.push_back(learning_curve(s.records));
  const auto pooled = pool_curves(curves);
  if (pooled.points.empty()) {
    out << "no LEARNED_RULE data\n";
    return;
  }
  out << fmt::format("{:>8} {:>7} {:>9} {:>8} {:>9} {:>8}\n", "exposure", "n", "n_higher", "higher", "n_lower",
                     "lower");
  for (const auto& p : pooled.points) {
    out << fmt::format("{:>8} {:>7} {:>9} {:>8} {:>9} {:>8}{}\n", p.exposure_index, p.n, p.n_higher,
                       opt(p.higher_order_acc), p.n_lower, opt(p.lower_order_acc), p.low_confidence ? "  (low n)" : "");
  }
  out << fmt::format("slope {}\n", opt(curve_slope(pooled), 4));
}

void report_trust(const std::vector<LoadedSession>& sessions, std::ostream& out) {
  out << "== trust, final third of SOCIAL trials ==\n";
  std::vector<TrustMatrix> mats;
  for (const auto& s : sessions) mats.push_back(trust_matrix(s.records, 2.0 / 3.0));
  bool any = false;
  for (const auto& m : mats) {
    for (const auto& c : m.cells) any = any || c.offers > 0;
  }
  if (!any) {
    out << "no SOCIAL data\n";
    return;
  }
  if (sessions.size() == 1) {
    const auto& m = mats.front();
    out << fmt::format("{:<8} {:<8} {:>6} {:>8} {:>8}\n", "partner", "phase", "offers", "engaged", "p_engage");
    for (const auto& c : m.cells) {
      out << fmt::format("{:<8} {:<8} {:>6} {:>8} {:>8}\n", to_string(c.partner), to_string(c.phase), c.offers,
                         c.engaged, opt(c.p_engage));
    }
    const auto ordered = trust_ordered(m);
    out << "ordering KIND > CLUMSY > JERK: " << (ordered ? (*ordered ? "yes" : "no") : "undefined") << "\n";
    return;
  }
  std::vector<std::vector<double>> table;
  int n_ordered = 0, n_defined = 0;
  for (const auto& m : mats) {
    std::vector<double> row;
    for (int p = 0; p < 3; ++p) {
      if (auto e = m.engage_rate(static_cast<PartnerType>(p))) row.push_back(*e);
    }
    if (row.size() == 3) table.push_back(row);
    if (auto o = trust_ordered(m)) {
      ++n_defined;
      n_ordered += *o ? 1 : 0;
    }
  }
  if (table.size() < 2) {
    out << "too few sessions with all partners offered\n";
    return;
  }
  const auto sem = within_subject_sem(table);
  out << fmt::format("sessions {}\n{:<8} {:>8} {:>8}\n", table.size(), "partner", "p_engage", "ws_sem");
  for (int p = 0; p < 3; ++p) {
    std::vector<double> col;
    for (const auto& row : table) col.push_back(row[p]);
    out << fmt::format("{:<8} {:>8.3f} {:>8.3f}\n", to_string(static_cast<PartnerType>(p)), mean_of(col), sem[p]);
  }
  out << fmt::format("ordered sessions {}/{}\n", n_ordered, n_defined);
}

void report_avoid(const std::vector<LoadedSession>& sessions, std::ostream& out) {
  out << "== avoidance by controllability ==\n";
  std::vector<AvoidanceRates> rates;
  for (const auto& s : sessions) rates.push_back(avoidance_rate(s.records));
  if (sessions.size() == 1) {
    const auto& a = rates.front();
    if (!a.full && !a.partial) {
      out << "no SOCIAL data\n";
      return;
    }
    out << fmt::format("FULL    {} (offers {})\nPARTIAL {} (offers {})\ndelta   {}\n", opt(a.full), a.n_full,
                       opt(a.partial), a.n_partial, opt(a.delta()));
    return;
  }
  std::vector<std::vector<double>> table;
  for (const auto& a : rates) {
    if (a.full && a.partial) table.push_back({*a.full, *a.partial});
  }
  if (table.size() < 2) {
    out << "too few sessions with both phases\n";
    return;
  }
  const auto sem = within_subject_sem(table);
  std::vector<double> full, partial, delta;
  for (const auto& row : table) {
    full.push_back(row[0]);
    partial.push_back(row[1]);
    delta.push_back(row[1] - row[0]);
  }
  out << fmt::format("sessions {}\n", table.size());
  out << fmt::format("FULL    {:.3f} (ws_sem {:.3f})\nPARTIAL {:.3f} (ws_sem {:.3f})\ndelta   {:.3f}\n", mean_of(full),
                     sem[0], mean_of(partial), sem[1], mean_of(delta));
}

int cmd_analyze(const std::string& log, const std::string& report, const std::string& csv_dir, std::ostream& out) {
  const auto sessions = load_sessions(log);
  out << fmt::format("{} session(s) from {}\n", sessions.size(), log);
  for (const auto& s : sessions) {
    if (!s.complete) out << fmt::format("note: {} is incomplete\n", s.path.string());
  }
  const bool all = report == "all";
  if (all || report == "switch") report_switch(sessions, out);
  if (all || report == "errors") report_errors(sessions, out);
  if (all || report == "curve") report_curve(sessions, out);
  if (all || report == "trust") report_trust(sessions, out);
  if (all || report == "avoid") report_avoid(sessions, out);

  if (!csv_dir.empty()) {
    const auto trials = as_trials(sessions);
    const fs::path dir(csv_dir);
    write_file(dir / "trials.csv", export_csv(CsvView::kTrials, trials));
    if (all || report == "switch") write_file(dir / "switch.csv", export_csv(CsvView::kSwitch, trials));
    if (all || report == "curve") write_file(dir / "curve.csv", export_csv(CsvView::kCurve, trials));
    if (all || report == "trust" || report == "avoid") write_file(dir / "trust.csv", export_csv(CsvView::kTrust, trials));
    out << "csv written to " << dir.string() << "\n";
  }
  return kOk;
}

// ---- fit ----

int cmd_fit(const std::string& log, const std::string& model_name, const std::string& out_path, std::ostream& out) {
  const auto model = parse_enum<FitModel>(model_name);
  if (!model) throw UsageError("unknown model '" + model_name + "' (known: qlearn, ez)");
  const auto sessions = load_sessions(log);
  std::vector<SessionFit> fits;
  for (const auto& s : sessions) {
    fits.push_back({s.session_id, *model == FitModel::kQlearn ? fit_mle(s.records) : ez_fit_result(s.records)});
  }
  for (const auto& f : fits) {
    std::string est;
    for (const auto& [k, v] : f.fit.estimates) est += fmt::format(" {}={:.4g}", k, v);
    std::string flags;
    for (const auto& fl : f.fit.flags) flags += (flags.empty() ? "" : ";") + fl;
    out << fmt::format("{} n={}{}{}{}\n", f.session_id, f.fit.n_trials, est,
                       !f.fit.failed && std::isfinite(f.fit.loglik) ? fmt::format(" loglik={:.3f}", f.fit.loglik) : "",
                       flags.empty() ? "" : "  [" + flags + "]");
  }
  const auto csv = fits_table(fits).str();
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file(out_path, csv);
    out << "wrote " << out_path << "\n";
  }
  return kOk;
}

// ---- recover ----

int cmd_recover(const std::string& model_name, const std::string& grid_text, int trials, int reps, std::uint64_t seed,
                const std::string& out_path, std::ostream& out) {
  if (model_name != "qlearn") throw UsageError("recovery is available for --model qlearn only");
  const auto grid = parse_grid(grid_text);
  for (const auto& cell : grid) {
    for (const auto& [k, v] : cell) {
      if (k != "alpha" && k != "beta") throw UsageError("unknown qlearn parameter '" + k + "'");
      if (k == "alpha" && !(v > 0.0 && v <= 1.0)) throw UsageError("alpha must be in (0, 1]");
      if (k == "beta" && !(v >= 0.0 && v <= 32.0)) throw UsageError("beta must be in [0, 32]");
    }
  }
  const auto report = parameter_recovery(FitModel::kQlearn, grid, trials, reps, seed);
  out << fmt::format("qlearn recovery: {} cells, {} trials, {} replicates, seed {}\n", report.cells.size(), trials, reps,
                     seed);
  out << fmt::format("{:>4} {:<6} {:>7} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}  {}\n", "cell", "param", "truth", "mean",
                     "sd", "bias", "rmse", "fit", "fail", "flags");
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& cell = report.cells[c];
    std::string flags;
    for (const auto& f : cell.flags) flags += (flags.empty() ? "" : ";") + f;
    for (const auto& [name, p] : cell.params) {
      out << fmt::format("{:>4} {:<6} {:>7.3f} {:>8.3f} {:>8} {:>8.3f} {:>8.3f} {:>6} {:>6}  {}\n", c, name, p.truth,
                         p.mean, opt(p.sd), p.bias, p.rmse, cell.n_fitted, cell.n_failed, flags);
    }
  }
  const fs::path path = out_path.empty() ? default_dir("recover", seed) / "recovery.csv" : fs::path(out_path);
  write_file(path, recovery_table(report).str());
  out << "wrote " << path.string() << "\n";
  return kOk;
}

// ---- benchmark ----

int cmd_benchmark(const std::vector<std::string>& agent_specs, const std::string& mission, int runs,
                  std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  std::vector<std::pair<std::string, AgentConfig>> agents;
  for (const auto& item : agent_specs) {
    // commas separate agents unless they sit inside a parameter list
    std::vector<std::string> specs;
    std::string cur;
    for (const auto& part : split(item, ',')) {
      if (!cur.empty() && part.find('=') != std::string::npos && part.find(':') == std::string::npos) {
        cur += "," + part;
      } else {
        if (!cur.empty()) specs.push_back(cur);
        cur = part;
      }
    }
    if (!cur.empty()) specs.push_back(cur);
    for (const auto& s : specs) {
      auto ac = parse_agent_spec(s);
      check_agent(ac);
      agents.emplace_back(s, std::move(ac));
    }
  }
  if (agents.empty()) throw UsageError("at least one agent is required");
  const auto missions = parse_missions(mission);

  CsvTable table({"agent", "mission", "runs", "mean_score", "accuracy", "d_rt_ms", "d_acc", "trust_ordered_frac",
                  "avoid_delta"});
  std::size_t w = 5;
  for (const auto& a : agents) w = std::max(w, a.first.size());
  out << fmt::format("{:<{}} {:>3} {:>5} {:>9} {:>8} {:>8} {:>7} {:>7} {:>7}\n", "agent", w, "m", "runs", "score",
                     "acc", "d_rt", "d_acc", "trust", "avoid");
  for (const auto& [label, ac] : agents) {
    for (int m : missions) {
      std::vector<double> scores, accs, d_rt, d_acc, deltas;
      int ordered = 0, ordered_defined = 0;
      // common seeds: run r of every agent sees the same engine seed
      for (int r = 0; r < runs; ++r) {
        AgentConfig cfg = ac;
        cfg.seed = run_agent_seed(seed, static_cast<std::uint64_t>(r));
        auto agent = make_agent(cfg);
        const auto records =
            play_session(default_session_config(run_engine_seed(seed, static_cast<std::uint64_t>(r)), {m}), *agent);
        int score = 0;
        for (const auto& t : records) score += t.payoff;
        scores.push_back(score);
        accs.push_back(accuracy_of(records));
        if (auto c = switch_cost(records)) {
          d_rt.push_back(c->d_rt_ms);
          d_acc.push_back(c->d_acc);
        }
        if (auto o = trust_ordered(trust_matrix(records, 2.0 / 3.0))) {
          ++ordered_defined;
          ordered += *o ? 1 : 0;
        }
        if (auto d = avoidance_rate(records).delta()) deltas.push_back(*d);
      }
      const std::optional<double> trust =
          ordered_defined ? std::optional<double>(static_cast<double>(ordered) / ordered_defined) : std::nullopt;
      auto maybe = [](const std::vector<double>& xs) {
        return xs.empty() ? std::optional<double>() : std::optional<double>(mean_of(xs));
      };
      table.add_row({label, std::to_string(m), std::to_string(runs), format_real(mean_of(scores)),
                     format_real(mean_of(accs)), format_real(maybe(d_rt)), format_real(maybe(d_acc)),
                     format_real(trust), format_real(maybe(deltas))});
      out << fmt::format("{:<{}} {:>3} {:>5} {:>9.2f} {:>8.3f} {:>8} {:>7} {:>7} {:>7}\n", label, w, m, runs,
                         mean_of(scores), mean_of(accs), opt(maybe(d_rt), 1), opt(maybe(d_acc)), opt(trust),
                         opt(maybe(deltas)));
    }
  }
  const fs::path path = out_path.empty() ? default_dir("benchmark", seed) / "benchmark.csv" : fs::path(out_path);
  write_file(path, table.str());
  out << "wrote " << path.string() << "\n";
  return kOk;
}

// ---- serve ----

int cmd_serve(const std::string& host, int port, std::optional<int> http_port, std::size_t max_sessions,
              const std::string& log_dir, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (port < 0 || port > 65535) throw UsageError("port out of range");
  if (http_port && (*http_port < 0 || *http_port > 65535)) throw UsageError("http port out of range");
  ServiceOptions so;
  so.max_sessions = max_sessions;
  so.log_dir = log_dir.empty() ? default_dir("serve", seed) : fs::path(log_dir);
  so.default_seed = seed;
  fs::create_directories(so.log_dir);
  SessionService service(so);
  EndpointConfig ec;
  ec.host = host;
  ec.port = static_cast<std::uint16_t>(port);
  if (http_port) ec.http_port = static_cast<std::uint16_t>(*http_port);
  std::unique_ptr<Server> server;
  try {
    server = std::make_unique<Server>(service, ec);
  } catch (const BindError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  out << fmt::format("listening on {}:{}\n", host, server->port());
  if (server->http_port()) out << fmt::format("http on {}:{}/rpc\n", host, *server->http_port());
  out << "logs in " << so.log_dir.string() << std::endl;
  server->run(true);
  out << "stopped" << std::endl;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"supertask: simulate, serve, analyze and fit sessions", "supertask"};
  app.require_subcommand(1);

  std::string mission = "all", agent, out_dir, log, report = "all", csv_dir, model = "qlearn";
  std::string grid = "alpha=0.1,0.3,0.5;beta=2,6", host = "127.0.0.1", log_dir;
  std::vector<std::string> params, agents;
  std::uint64_t seed = 0;
  int runs = 1, trials = 500, reps = 50, port = 7878;
  std::optional<int> http_port;
  std::size_t max_sessions = 64;

  auto* sim = app.add_subcommand("simulate", "play seeded sessions with an artificial agent");
  sim->add_option("--mission", mission, "all, 1, 2 or 3")->capture_default_str();
  sim->add_option("--agent", agent, "random, instructed_ddm, hier_q, partner_belief")->required();
  sim->add_option("--params", params, "agent parameters as k=v");
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--runs", runs)->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--out", out_dir, "output directory");

  auto* ana = app.add_subcommand("analyze", "behavioural reports from logs");
  ana->add_option("--log", log, "log file or directory of .jsonl logs")->required();
  ana->add_option("--report", report)
      ->check(CLI::IsMember({"switch", "errors", "curve", "trust", "avoid", "all"}))
      ->capture_default_str();
  ana->add_option("--csv", csv_dir, "directory for CSV views");

  auto* fit = app.add_subcommand("fit", "fit a model to each logged session");
  fit->add_option("--log", log)->required();
  fit->add_option("--model", model, "qlearn or ez")->capture_default_str();
  fit->add_option("--out", out_dir, "CSV file (stdout when omitted)");

  auto* rec = app.add_subcommand("recover", "parameter recovery study");
  rec->add_option("--model", model)->capture_default_str();
  rec->add_option("--grid", grid, "name=v1,v2;name=...")->capture_default_str();
  rec->add_option("--trials", trials)->check(CLI::Range(2, 1000000))->capture_default_str();
  rec->add_option("--reps", reps)->check(CLI::PositiveNumber)->capture_default_str();
  rec->add_option("--seed", seed)->capture_default_str();
  rec->add_option("--out", out_dir, "CSV file");

  auto* bench = app.add_subcommand("benchmark", "agent x mission comparison table");
  bench->add_option("--agents", agents, "agent kinds, optionally kind:k=v,...")->required();
  bench->add_option("--missions", mission)->capture_default_str();
  bench->add_option("--runs", runs)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", seed)->capture_default_str();
  bench->add_option("--out", out_dir, "CSV file");

  auto* srv = app.add_subcommand("serve", "serve sessions over newline-delimited JSON");
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port, "0 picks a free port")->capture_default_str();
  srv->add_option("--http-port", http_port, "also accept POST /rpc");
  srv->add_option("--max-sessions", max_sessions)->check(CLI::PositiveNumber)->capture_default_str();
  srv->add_option("--log-dir", log_dir);
  srv->add_option("--seed", seed, "base seed for sessions created without one")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(mission, agent, params, seed, runs, out_dir, out);
    if (ana->parsed()) return cmd_analyze(log, report, csv_dir, out);
    if (fit->parsed()) return cmd_fit(log, model, out_dir, out);
    if (rec->parsed()) return cmd_recover(model, grid, trials, reps, seed, out_dir, out);
    if (bench->parsed()) return cmd_benchmark(agents, mission, runs, seed, out_dir, out);
    if (srv->parsed()) return cmd_serve(host, port, http_port, max_sessions, log_dir, seed, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace supertask::cli
