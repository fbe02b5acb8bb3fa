#include "supertask/analytics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <stdexcept>

namespace supertask {

namespace {

struct Moments {
  int n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return sum / n; }
  // Sample variance; 0 for a single observation.
  double var() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1));
  }
};

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

bool engaged_first(const TrialRecord& r) { return !r.actions.empty() && r.actions.front().kind == ActionKind::kEngage; }
bool avoided_first(const TrialRecord& r) { return !r.actions.empty() && r.actions.front().kind == ActionKind::kAvoid; }

}  // namespace

std::optional<SwitchCostResult> switch_cost(std::span<const TrialRecord> records) {
  Moments rt[2];         // correct RTs, [0] switch [1] repeat
  int n[2] = {0, 0};     // all classified trials
  int hits[2] = {0, 0};
  for (const auto& r : records) {
    if (r.mission_kind != MissionKind::kCuedSwitch || !r.is_switch) continue;
    const int c = *r.is_switch ? 0 : 1;
    ++n[c];
    if (r.correct) {
      ++hits[c];
      rt[c].add(static_cast<double>(r.rt_ms));
    }
  }
  if (rt[0].n == 0 || rt[1].n == 0) return std::nullopt;

  SwitchCostResult out;
  out.n_switch = n[0];
  out.n_repeat = n[1];
  out.rt_switch_ms = rt[0].mean();
  out.rt_repeat_ms = rt[1].mean();
  out.acc_switch = static_cast<double>(hits[0]) / n[0];
  out.acc_repeat = static_cast<double>(hits[1]) / n[1];
  out.d_rt_ms = out.rt_switch_ms - out.rt_repeat_ms;
  out.d_acc = out.acc_switch - out.acc_repeat;
  out.sem_rt_ms = std::sqrt(rt[0].var() / rt[0].n + rt[1].var() / rt[1].n);
  out.sem_acc = std::sqrt(out.acc_switch * (1 - out.acc_switch) / n[0] + out.acc_repeat * (1 - out.acc_repeat) / n[1]);
  return out;
}

std::optional<SwitchCostAggregate> aggregate_switch_costs(std::span<const SwitchCostResult> sessions) {
  if (sessions.empty()) return std::nullopt;
  SwitchCostAggregate agg;
  agg.n_sessions = static_cast<int>(sessions.size());
  std::vector<double> d_rt, d_acc;
  std::vector<std::vector<double>> rt_table, acc_table;
  for (const auto& s : sessions) {
    d_rt.push_back(s.d_rt_ms);
    d_acc.push_back(s.d_acc);
    rt_table.push_back({s.rt_switch_ms, s.rt_repeat_ms});
    acc_table.push_back({s.acc_switch, s.acc_repeat});
  }
  agg.d_rt_ms = mean_of(d_rt);
  agg.d_acc = mean_of(d_acc);
  const double root_n = std::sqrt(static_cast<double>(sessions.size()));
  agg.sem_d_rt_ms = sample_sd(d_rt) / root_n;
  agg.sem_d_acc = sample_sd(d_acc) / root_n;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> rt_col, acc_col;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      rt_col.push_back(rt_table[i][c]);
      acc_col.push_back(acc_table[i][c]);
    }
    agg.rt_ms[c] = mean_of(rt_col);
    agg.acc[c] = mean_of(acc_col);
  }
  if (sessions.size() >= 2) {
    const auto rt_sem = within_subject_sem(rt_table);
    const auto acc_sem = within_subject_sem(acc_table);
    agg.rt_sem_within = {rt_sem[0], rt_sem[1]};
    agg.acc_sem_within = {acc_sem[0], acc_sem[1]};
  }
  return agg;
}

ErrorBreakdown error_breakdown(std::span<const TrialRecord> records) {
  ErrorBreakdown out;
  for (const auto& r : records) ++out.counts[static_cast<std::size_t>(r.error_class)];
  out.total = static_cast<int>(records.size());
  if (out.total > 0) {
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.rates[i] = static_cast<double>(out.counts[i]) / out.total;
  }
  return out;
}

LearningCurve learning_curve(std::span<const TrialRecord> records) {
  std::map<std::tuple<int, int, int>, int> exposures;
  std::vector<CurvePoint> points;
  for (const auto& r : records) {
    if (r.mission_kind != MissionKind::kLearnedRule) continue;
    const int k = ++exposures[{r.address.mission_id, r.address.block_index, r.cue_id}];
    if (static_cast<int>(points.size()) < k) points.resize(k);
    CurvePoint& p = points[k - 1];
    ++p.n;
    if (r.congruency == Congruency::kIncongruent) {
      ++p.n_higher;
      if (r.final_response == classify(r.stimulus, r.true_rule)) ++p.higher_correct;
    } else {
      ++p.n_lower;
      if (r.correct) ++p.lower_correct;
    }
  }
  LearningCurve curve;
  for (std::size_t i = 0; i < points.size(); ++i) {
    CurvePoint p = points[i];
    p.exposure_index = static_cast<int>(i) + 1;
    if (p.n_higher > 0) p.higher_order_acc = static_cast<double>(p.higher_correct) / p.n_higher;
    if (p.n_lower > 0) p.lower_order_acc = static_cast<double>(p.lower_correct) / p.n_lower;
    p.low_confidence = p.n < 5;
    curve.points.push_back(p);
  }
  return curve;
}

LearningCurve pool_curves(std::span<const LearningCurve> curves) {
  std::vector<CurvePoint> acc;
  for (const auto& c : curves) {
    if (acc.size() < c.points.size()) acc.resize(c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      acc[i].n += c.points[i].n;
      acc[i].n_higher += c.points[i].n_higher;
      acc[i].n_lower += c.points[i].n_lower;
      acc[i].higher_correct += c.points[i].higher_correct;
      acc[i].lower_correct += c.points[i].lower_correct;
    }
  }
  LearningCurve out;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CurvePoint p = acc[i];
    p.exposure_index = static_cast<int>(i) + 1;
    if (p.n_higher > 0) p.higher_order_acc = static_cast<double>(p.higher_correct) / p.n_higher;
    if (p.n_lower > 0) p.lower_order_acc = static_cast<double>(p.lower_correct) / p.n_lower;
    p.low_confidence = p.n < 5;
    out.points.push_back(p);
  }
  return out;
}

std::optional<double> higher_order_accuracy(const LearningCurve& curve, int first, int last) {
  int hits = 0, n = 0;
  for (const auto& p : curve.points) {
    if (p.exposure_index < first || p.exposure_index > last) continue;
    hits += p.higher_correct;
    n += p.n_higher;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(hits) / n;
}

std::optional<double> curve_slope(const LearningCurve& curve) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : curve.points) {
    if (p.higher_order_acc) xy.emplace_back(p.exposure_index, *p.higher_order_acc);
  }
  if (xy.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (auto [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= xy.size();
  my /= xy.size();
  double sxy = 0, sxx = 0;
  for (auto [x, y] : xy) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

std::optional<double> TrustMatrix::engage_rate(PartnerType p) const {
  const auto& full = at(p, Controllability::kFull);
  const auto& partial = at(p, Controllability::kPartial);
  const int offers = full.offers + partial.offers;
  if (offers == 0) return std::nullopt;
  return static_cast<double>(full.engaged + partial.engaged) / offers;
}

std::optional<bool> trust_ordered(const TrustMatrix& matrix) {
  const auto kind = matrix.engage_rate(PartnerType::kKind);
  const auto clumsy = matrix.engage_rate(PartnerType::kClumsy);
  const auto jerk = matrix.engage_rate(PartnerType::kJerk);
  if (!kind || !clumsy || !jerk) return std::nullopt;
  return *kind > *clumsy && *clumsy > *jerk;
}

TrustMatrix trust_matrix(std::span<const TrialRecord> records, double from_fraction) {
  std::vector<const TrialRecord*> social;
  for (const auto& r : records) {
    if (r.mission_kind == MissionKind::kSocial && r.controllability) social.push_back(&r);
  }
  const auto skip = static_cast<std::size_t>(std::floor(from_fraction * static_cast<double>(social.size())));

  TrustMatrix m;
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t c = 0; c < 2; ++c) {
      m.cells[p * 2 + c].partner = static_cast<PartnerType>(p);
      m.cells[p * 2 + c].phase = static_cast<Controllability>(c);
    }
  }
  for (std::size_t i = skip; i < social.size(); ++i) {
    const TrialRecord& r = *social[i];
    auto& cell = m.cells[static_cast<std::size_t>(*r.partner_type) * 2 + static_cast<std::size_t>(*r.controllability)];
    ++cell.offers;
    if (engaged_first(r)) ++cell.engaged;
  }
  for (auto& cell : m.cells) {
    if (cell.offers > 0) cell.p_engage = static_cast<double>(cell.engaged) / cell.offers;
  }
  return m;
}

std::vector<std::array<std::optional<double>, 3>> trust_series(std::span<const TrialRecord> records, int n_bins) {
  if (n_bins <= 0) throw std::invalid_argument("trust_series: n_bins must be positive");
  std::vector<const TrialRecord*> social;
  for (const auto& r : records) {
    if (r.mission_kind == MissionKind::kSocial && r.partner_type) social.push_back(&r);
  }
  std::vector<std::array<int, 3>> offers(n_bins), engaged(n_bins);
  for (std::size_t i = 0; i < social.size(); ++i) {
    const auto bin = i * static_cast<std::size_t>(n_bins) / social.size();
    const auto p = static_cast<std::size_t>(*social[i]->partner_type);
    ++offers[bin][p];
    if (engaged_first(*social[i])) ++engaged[bin][p];
  }
  std::vector<std::array<std::optional<double>, 3>> out(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    for (int p = 0; p < 3; ++p) {
      if (offers[b][p] > 0) out[b][p] = static_cast<double>(engaged[b][p]) / offers[b][p];
    }
  }
  return out;
}

AvoidanceRates avoidance_rate(std::span<const TrialRecord> records) {
  int avoided[2] = {0, 0};
  int offers[2] = {0, 0};
  for (const auto& r : records) {
    if (r.mission_kind != MissionKind::kSocial || !r.controllability) continue;
    const auto c = static_cast<std::size_t>(*r.controllability);
    ++offers[c];
    if (avoided_first(r)) ++avoided[c];
  }
  AvoidanceRates out;
  out.n_full = offers[0];
  out.n_partial = offers[1];
  if (offers[0] > 0) out.full = static_cast<double>(avoided[0]) / offers[0];
  if (offers[1] > 0) out.partial = static_cast<double>(avoided[1]) / offers[1];
  return out;
}

std::optional<AssociationResult> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r: x and y differ in length");
  if (x.size() < 3) throw std::invalid_argument("pearson_r: need at least 3 observations");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;

  AssociationResult out;
  out.n = static_cast<int>(x.size());
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = out.n - 2;
  if (std::abs(out.r) == 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(df / (1.0 - out.r * out.r));
    const boost::math::students_t dist(df);
    out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return out;
}

std::vector<double> within_subject_sem(const std::vector<std::vector<double>>& table) {
  const std::size_t n = table.size();
  if (n < 2) throw std::invalid_argument("within_subject_sem: need at least 2 subjects");
  const std::size_t c = table.front().size();
  if (c < 2) throw std::invalid_argument("within_subject_sem: need at least 2 conditions");
  for (const auto& row : table) {
    if (row.size() != c) throw std::invalid_argument("within_subject_sem: incomplete table (ragged rows)");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("within_subject_sem: incomplete table (missing cell)");
    }
  }
  double grand = 0.0;
  for (const auto& row : table) grand += mean_of(row);
  grand /= static_cast<double>(n);

  const double morey = std::sqrt(static_cast<double>(c) / static_cast<double>(c - 1));
  std::vector<double> sem(c);
  for (std::size_t j = 0; j < c; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = table[i][j] - mean_of(table[i]) + grand;
    sem[j] = morey * sample_sd(col) / std::sqrt(static_cast<double>(n));
  }
  return sem;
}

}  // namespace supertask
