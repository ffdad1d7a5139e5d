#include "legival/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include "legival/errors.hpp"
#include "legival/stats.hpp"

namespace legival::efficiency {

Embedding renormalize(Embedding v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm == 0.0) throw DataError("cannot normalize a zero embedding");
  for (double& x : v) x /= norm;
  return v;
}

RedundancyProfile redundancy_profile(const std::vector<Embedding>& rows) {
  if (rows.empty()) throw DataError("redundancy_profile needs >= 1 row");
  for (size_t i = 0; i < rows.size(); ++i) {
    double sq = 0.0;
    for (double x : rows[i]) sq += x * x;
    if (std::fabs(std::sqrt(sq) - 1.0) > 1e-4) {
      throw DataError("embedding row " + std::to_string(i) +
                      " is not unit-norm");
    }
    if (i > 0 && rows[i].size() != rows[0].size()) {
      throw DataError("embedding row " + std::to_string(i) +
                      " has mismatched dimension");
    }
  }
  RedundancyProfile profile;
  for (size_t i = 1; i < rows.size(); ++i) {
    double best = -1.0;
    for (size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (size_t d = 0; d < rows[i].size(); ++d) dot += rows[i][d] * rows[j][d];
      best = std::max(best, dot);
    }
    profile.max_prior_sim.push_back(std::clamp(best, -1.0, 1.0));
  }
  return profile;
}

double redundancy_score(const RedundancyProfile& profile, double tau, int m,
                        bool denominator_m_minus_1) {
  if (m < 1) throw DataError("redundancy_score requires m >= 1");
  if (static_cast<int>(profile.max_prior_sim.size()) != m - 1)
    throw DataError("profile length must equal step_count - 1");
  if (m == 1) return 0.0;
  int exceed = 0;
  for (double s : profile.max_prior_sim) {
    if (s > tau) ++exceed;
  }
  int denom = denominator_m_minus_1 ? m - 1 : m;
  return static_cast<double>(exceed) / denom;
}

std::vector<double> default_sweep_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 20; ++i) t.push_back(i * 0.05);
  return t;
}

SweepResult threshold_sweep(const std::vector<TeacherProfile>& profiles,
                            const std::vector<double>& thresholds) {
  SweepResult out;
  out.thresholds = thresholds;

  std::map<std::string, std::vector<const TeacherProfile*>> by_teacher;
  for (const auto& tp : profiles) by_teacher[tp.teacher_id].push_back(&tp);

  for (const auto& [teacher, items] : by_teacher) {
    std::vector<double> means;
    for (double tau : thresholds) {
      double sum = 0.0;
      for (const auto* tp : items)
        sum += redundancy_score(tp->profile, tau, tp->step_count);
      means.push_back(sum / static_cast<double>(items.size()));
    }
    out.mean_scores[teacher] = std::move(means);
  }

  out.rank_stability.assign(thresholds.size(), 0.0);
  for (size_t j = 1; j < thresholds.size(); ++j) {
    std::vector<double> prev, cur;
    for (const auto& [teacher, means] : out.mean_scores) {
      prev.push_back(means[j - 1]);
      cur.push_back(means[j]);
    }
    auto rho = stats::spearman(prev, cur);
    out.rank_stability[j] = rho.value_or(0.0);
  }
  return out;
}

}  // namespace legival::efficiency
