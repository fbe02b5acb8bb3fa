#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "supertask/analytics.hpp"
#include "supertask/fitting.hpp"

namespace supertask {

enum class CsvView : std::uint8_t { kTrials, kSwitch, kCurve, kTrust, kFits };

template <>
struct EnumNames<CsvView> {
  static constexpr std::array<std::string_view, 5> names{"TRIALS", "SWITCH", "CURVE", "TRUST", "FITS"};
};

/// Case-insensitive. Throws std::invalid_argument for an unknown view.
CsvView parse_csv_view(std::string_view name);

/// Six significant digits (%.6g); empty for NaN or missing values.
std::string format_real(double x);
std::string format_real(const std::optional<double>& x);

/// RFC 4180 quoting: fields containing a comma, quote, CR or LF are wrapped in
/// quotes with inner quotes doubled.
std::string csv_escape(std::string_view field);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  /// Header line first, CRLF-free ("\n") line endings.
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Inputs for the five stable views. Each entry carries the session it came from.
struct SessionTrials {
  std::string session_id;
  std::span<const TrialRecord> records;
};
struct SessionSwitchCost {
  std::string session_id;
  std::optional<SwitchCostResult> cost;
};
struct SessionCurve {
  std::string session_id;
  LearningCurve curve;
};
struct SessionTrust {
  std::string session_id;
  TrustMatrix matrix;
};
struct SessionFit {
  std::string session_id;
  FitResult fit;
};

CsvTable trials_table(std::span<const SessionTrials> sessions);
CsvTable switch_table(std::span<const SessionSwitchCost> rows);
CsvTable curve_table(std::span<const SessionCurve> rows);
CsvTable trust_table(std::span<const SessionTrust> rows);
CsvTable fits_table(std::span<const SessionFit> rows);

/// One-stop export from trial records: the analytics behind the view are
/// computed per session (FITS runs the qlearn MLE).
std::string export_csv(CsvView view, std::span<const SessionTrials> sessions);

/// Recovery and benchmark outputs are written with the same conventions.
CsvTable recovery_table(const RecoveryReport& report);

}  // namespace supertask
