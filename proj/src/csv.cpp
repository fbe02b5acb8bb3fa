#include "supertask/csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace supertask {

namespace {

std::string str(bool b) { return b ? "1" : "0"; }
std::string str(int v) { return std::to_string(v); }
std::string str(std::int64_t v) { return std::to_string(v); }

template <class E>
std::string opt_name(const std::optional<E>& v) {
  return v ? std::string(to_string(*v)) : std::string();
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

}  // namespace

CsvView parse_csv_view(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (auto v = parse_enum<CsvView>(upper)) return *v;
  throw std::invalid_argument("unknown view '" + std::string(name) + "'");
}

std::string format_real(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string format_real(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::logic_error("csv row width does not match header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

CsvTable trials_table(std::span<const SessionTrials> sessions) {
  CsvTable t({"session_id", "mission_id", "block_index", "trial_index", "mission_kind", "cue_id", "signaled_rule",
              "true_rule", "letter", "digit", "degradation_permille", "congruency", "is_switch", "actions",
              "final_response", "correct", "error_class", "payoff", "partner_type", "controllability", "proposal",
              "delegated", "control_lost", "rt_ms"});
  for (const auto& s : sessions) {
    for (const auto& r : s.records) {
      std::string actions;
      for (const auto& a : r.actions) {
        if (!actions.empty()) actions += ';';
        actions += to_string(a.kind);
      }
      t.add_row({s.session_id, str(r.address.mission_id), str(r.address.block_index), str(r.address.trial_index),
                 std::string(to_string(r.mission_kind)), str(r.cue_id), opt_name(r.signaled_rule),
                 std::string(to_string(r.true_rule)), std::string(1, r.stimulus.letter),
                 str(r.stimulus.digit), str(static_cast<int>(r.stimulus.degradation_permille)),
                 std::string(to_string(r.congruency)), r.is_switch ? str(*r.is_switch) : std::string(), actions,
                 std::string(to_string(r.final_response)), str(r.correct), std::string(to_string(r.error_class)),
                 str(r.payoff), opt_name(r.partner_type), opt_name(r.controllability), opt_name(r.proposal),
                 str(r.delegated), str(r.control_lost), str(r.rt_ms)});
    }
  }
  return t;
}

CsvTable switch_table(std::span<const SessionSwitchCost> rows) {
  CsvTable t({"session_id", "d_rt_ms", "d_acc", "sem_rt_ms", "sem_acc", "n_switch", "n_repeat"});
  for (const auto& r : rows) {
    if (r.cost) {
      const auto& c = *r.cost;
      t.add_row({r.session_id, format_real(c.d_rt_ms), format_real(c.d_acc), format_real(c.sem_rt_ms),
                 format_real(c.sem_acc), str(c.n_switch), str(c.n_repeat)});
    } else {
      t.add_row({r.session_id, "", "", "", "", "", ""});
    }
  }
  return t;
}

CsvTable curve_table(std::span<const SessionCurve> rows) {
  CsvTable t({"session_id", "exposure_index", "n", "n_higher", "higher_order_acc", "n_lower", "lower_order_acc",
              "low_confidence"});
  for (const auto& r : rows) {
    for (const auto& p : r.curve.points) {
      t.add_row({r.session_id, str(p.exposure_index), str(p.n), str(p.n_higher), format_real(p.higher_order_acc),
                 str(p.n_lower), format_real(p.lower_order_acc), str(p.low_confidence)});
    }
  }
  return t;
}

CsvTable trust_table(std::span<const SessionTrust> rows) {
  CsvTable t({"session_id", "partner_type", "controllability", "offers", "engaged", "p_engage"});
  for (const auto& r : rows) {
    for (const auto& c : r.matrix.cells) {
      t.add_row({r.session_id, std::string(to_string(c.partner)), std::string(to_string(c.phase)), str(c.offers),
                 str(c.engaged), format_real(c.p_engage)});
    }
  }
  return t;
}

CsvTable fits_table(std::span<const SessionFit> rows) {
  CsvTable t({"session_id", "model", "parameter", "estimate", "loglik", "n_trials", "converged", "at_bound",
              "n_restarts_used", "flags"});
  for (const auto& r : rows) {
    const auto& f = r.fit;
    auto row = [&](const std::string& name, const std::string& value) {
      t.add_row({r.session_id, f.model, name, value, f.failed ? std::string() : format_real(f.loglik),
                 str(f.n_trials), str(f.converged), str(f.at_bound), str(f.n_restarts_used), join_flags(f.flags)});
    };
    if (f.estimates.empty()) row("", "");
    for (const auto& [name, value] : f.estimates) row(name, format_real(value));
  }
  return t;
}

std::string export_csv(CsvView view, std::span<const SessionTrials> sessions) {
  switch (view) {
    case CsvView::kTrials:
      return trials_table(sessions).str();
    case CsvView::kSwitch: {
      std::vector<SessionSwitchCost> rows;
      for (const auto& s : sessions) rows.push_back({s.session_id, switch_cost(s.records)});
      return switch_table(rows).str();
    }
    case CsvView::kCurve: {
      std::vector<SessionCurve> rows;
      for (const auto& s : sessions) rows.push_back({s.session_id, learning_curve(s.records)});
      return curve_table(rows).str();
    }
    case CsvView::kTrust: {
      std::vector<SessionTrust> rows;
      for (const auto& s : sessions) rows.push_back({s.session_id, trust_matrix(s.records)});
      return trust_table(rows).str();
    }
    case CsvView::kFits: {
      std::vector<SessionFit> rows;
      for (const auto& s : sessions) rows.push_back({s.session_id, fit_mle(s.records)});
      return fits_table(rows).str();
    }
  }
  throw std::invalid_argument("unknown view");
}

CsvTable recovery_table(const RecoveryReport& report) {
  CsvTable t({"model", "cell", "truth_alpha", "truth_beta", "parameter", "truth", "mean", "sd", "bias", "rmse",
              "n_fitted", "n_failed", "flags"});
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& cell = report.cells[c];
    for (const auto& [name, p] : cell.params) {
      t.add_row({report.model, std::to_string(c), format_real(cell.params.at("alpha").truth),
                 format_real(cell.params.at("beta").truth), name, format_real(p.truth), format_real(p.mean),
                 format_real(p.sd), format_real(p.bias), format_real(p.rmse), str(cell.n_fitted), str(cell.n_failed),
                 join_flags(cell.flags)});
    }
  }
  return t;
}

}  // namespace supertask
