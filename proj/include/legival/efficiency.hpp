#pragma once

#include <map>
#include <string>
#include <vector>

namespace legival::efficiency {

using Embedding = std::vector<double>;

// max_prior_sim[i-1] = max cosine similarity between step i and any
// earlier step (0-indexed steps; step 0 has no predecessor, so the
// profile is one entry shorter than the step count).
struct RedundancyProfile {
  std::string trace_id;
  std::vector<double> max_prior_sim;
};

// Scales v to unit L2 norm. Throws DataError on a zero vector.
Embedding renormalize(Embedding v);

// Rows must be unit vectors (norm within 1e-4 of 1, else DataError);
// cosine is the plain dot product, clamped to [-1, 1].
RedundancyProfile redundancy_profile(const std::vector<Embedding>& rows);

// Fraction of steps whose max prior similarity exceeds tau. The
// denominator is the full step count m: the first step can never be
// redundant but still counts, so scores live in [0, (m-1)/m]. The m-1
// variant is available for sensitivity checks.
double redundancy_score(const RedundancyProfile& profile, double tau, int m,
                        bool denominator_m_minus_1 = false);

// 21 evenly spaced thresholds from 0 to 1, the sweep grid.
std::vector<double> default_sweep_thresholds();

struct SweepResult {
  std::vector<double> thresholds;
  // teacher -> mean redundancy score at each threshold
  std::map<std::string, std::vector<double>> mean_scores;
  // Spearman rho between teacher rank vectors at adjacent thresholds;
  // entry j compares thresholds[j-1] and thresholds[j] (entry 0 unset).
  std::vector<double> rank_stability;
};

struct TeacherProfile {
  std::string teacher_id;
  RedundancyProfile profile;
  int step_count = 0;
};

SweepResult threshold_sweep(const std::vector<TeacherProfile>& profiles,
                            const std::vector<double>& thresholds);

}  // namespace legival::efficiency
