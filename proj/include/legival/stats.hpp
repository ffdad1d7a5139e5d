#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace legival::stats {

// Average ranks (1-based, ties averaged). ascending=true ranks the
// smallest value 1.
std::vector<double> average_ranks(const std::vector<double>& values,
                                  bool ascending = true);

// Spearman's rho: Pearson correlation of average-rank vectors. nullopt
// when either rank vector has zero variance or n < 2.
std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y);

// Kendall's tau-b (tie-corrected). nullopt when either vector is all
// ties or n < 2.
std::optional<double> kendall_tau(const std::vector<double>& x,
                                  const std::vector<double>& y);

// Cohen's kappa over exact categories. Identical vectors give 1 even
// when chance agreement is also perfect.
std::optional<double> kappa_exact(const std::vector<int>& a,
                                  const std::vector<int>& b);

// Cohen's kappa over the binary variable (count > 0).
std::optional<double> kappa_binary(const std::vector<int>& a,
                                   const std::vector<int>& b);

struct AgreementStats {
  std::optional<double> spearman_rho;
  std::optional<double> kendall;
  std::optional<double> exact_kappa;
  std::optional<double> binary_kappa;
  int n = 0;
};

// All four annotator-agreement statistics over two label-count vectors.
// Throws DataError when lengths differ or n < 2.
AgreementStats agreement_stats(const std::vector<int>& a,
                               const std::vector<int>& b);

// Per-(teacher, dataset) aggregate row feeding ranks and correlations.
struct ModelReport {
  std::string teacher_id;
  std::string dataset;
  double accuracy = 0.0;
  double median_tokens = 0.0;
  std::optional<double> mean_redundancy;
  std::optional<double> mean_backtracking;
  std::optional<double> fotu;
  std::optional<double> sotu;
  std::optional<double> regression_rate;
  std::optional<double> mean_reward;
};

// Metric accessors and rank direction (higher_better) for rank tables.
struct MetricSpec {
  std::string name;
  bool higher_better = true;
  std::optional<double> (*get)(const ModelReport&);
};

const std::vector<MetricSpec>& legibility_metrics();  // Len..RR, Table 1 order
const MetricSpec& accuracy_metric();

struct RankEntry {
  std::string teacher_id;
  double value = 0.0;
  double rank = 0.0;        // 1 = best, ties averaged
  double delta_vs_acc = 0.0;  // accuracy rank minus this rank
};

struct RankTable {
  std::string metric;
  std::vector<RankEntry> entries;  // sorted by rank ascending
};

// Ranks models on one metric (direction-aware) and reports the rank
// delta against the accuracy ranking. Models missing the metric are
// skipped. Throws DataError with fewer than 2 ranked models.
RankTable rank_models(const std::vector<ModelReport>& reports,
                      const MetricSpec& metric);

struct StabilityCell {
  std::string split_a;
  std::string split_b;
  std::optional<double> rho;
  int shared_models = 0;
};

struct StabilityRow {
  std::string metric;
  std::vector<StabilityCell> pairs;
  std::optional<double> average;
};

// Pairwise Spearman between model rankings computed on different splits
// (datasets or students) for one metric, plus the row average. Value
// map: split name -> (teacher -> value). Shared-model intersections are
// taken per pair and recorded. Spearman is invariant under monotone
// transforms, so raw metric values stand in for rank vectors.
StabilityRow stability_row(
    const std::map<std::string, std::map<std::string, double>>& values_by_split,
    const std::vector<std::string>& splits, const std::string& metric_name);

struct CorrelationMatrix {
  std::vector<std::string> metrics;
  // row-major; diagonal 1, symmetric; NaN marks unavailable cells
  std::vector<std::vector<double>> rho;
  int datasets_used = 0;
};

// Model-level Spearman between every metric pair, computed per dataset
// (needs >= 3 models) and averaged elementwise across datasets.
CorrelationMatrix correlation_matrix(const std::vector<ModelReport>& reports);

struct RmCorrelationRow {
  std::string level;   // "trace" or "model"
  std::string scorer;
  std::string metric;
  std::optional<double> rho_all;
  int n_all = 0;
  std::optional<double> rho_correct;
  int n_correct = 0;
};

struct TraceScore {
  std::string trace_id;
  std::string teacher_id;
  bool teacher_correct = false;
  double score = 0.0;
};

struct TraceTuMetrics {
  std::string trace_id;
  std::optional<double> fotu;
  std::optional<double> rr_proportion;
};

// Reward-model comparison: Spearman between scores and per-trace TU
// metrics over all traces and over the teacher-correct subset, plus
// model-level correlations over per-teacher mean scores vs FOTU/SOTU/RR.
std::vector<RmCorrelationRow> rm_correlation(
    const std::string& scorer_id, const std::vector<TraceScore>& scores,
    const std::vector<TraceTuMetrics>& trace_metrics,
    const std::vector<ModelReport>& model_reports_all,
    const std::vector<ModelReport>& model_reports_correct);

// Borda (mean-rank) aggregation across the six legibility metrics. This
// artifact's convention for a combined ordering, not a published one.
std::map<std::string, double> borda_mean_rank(
    const std::vector<ModelReport>& reports);

}  // namespace legival::stats
