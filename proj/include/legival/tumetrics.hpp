#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace legival::tu {

// One student continuation of a trace prefix, already graded.
struct RolloutObservation {
  std::string trace_id;
  int k = 0;  // prefix step count
  int m = 1;  // total steps in the trace
  std::string student_id;
  bool correct = false;
};

// Relative-depth binning: bin b covers ((b-1)/bins, b/bins]. k=0 has
// depth 0, which no bin covers; by convention it lands in bin 1 unless a
// separate zero bin is enabled (then it gets bin 0 and the scheme has
// bins+1 cells).
struct BinningScheme {
  int bins = 50;
  bool zero_bin = false;

  int first_bin() const { return zero_bin ? 0 : 1; }
  int cell_count() const { return zero_bin ? bins + 1 : bins; }
  int bin_depth(int k, int m) const;
};

struct BinStat {
  long samples = 0;
  long successes = 0;
};

// Binned student-accuracy curve. A bin with zero samples is absent, not
// zero; bin_mean() reflects that.
struct TransferCurve {
  BinningScheme scheme;
  std::vector<BinStat> cells;  // index 0 = first_bin()

  explicit TransferCurve(BinningScheme s = {})
      : scheme(s), cells(s.cell_count()) {}

  void add(int bin, bool success);
  std::optional<double> bin_mean(int bin) const;
  // Means of non-absent bins in bin order.
  std::vector<double> present_means() const;
  int present_bins() const;
};

TransferCurve transfer_curve(const std::vector<RolloutObservation>& records,
                             BinningScheme scheme = {});

// Unweighted mean of non-absent bin means (area under the curve).
// nullopt when every bin is absent.
std::optional<double> fotu(const TransferCurve& curve);

// Bin of the smallest k with a correct continuation; nullopt when the
// student never succeeds on this trace.
std::optional<int> hazard(const std::vector<RolloutObservation>& trace_records,
                          BinningScheme scheme = {});

// First-success depth distribution over one (teacher, student, dataset).
struct HazardDistribution {
  BinningScheme scheme;
  std::vector<long> counts;  // index 0 = first_bin()
  long covered = 0;          // traces with any success
  long total = 0;            // all traces considered

  explicit HazardDistribution(BinningScheme s = {})
      : scheme(s), counts(s.cell_count()) {}

  void add_hazard(int bin);
  void add_miss() { ++total; }
};

// Normalized Shannon entropy of the hazard distribution: H(counts /
// covered) in bits over log2(cell count). nullopt when covered == 0.
std::optional<double> sotu(const HazardDistribution& dist);

struct RegressionRate {
  int count = 0;       // adjacent strict decreases
  double proportion = 0.0;  // count / adjacent pairs
};

// Strict decreases between adjacent non-absent bin means of one trace's
// curve. nullopt with fewer than 2 non-absent bins.
std::optional<RegressionRate> regression_rate(const TransferCurve& curve);

// Per-trace metric triple plus the model-level aggregation rule: FOTU
// and RR average per-trace values, SOTU comes from the pooled hazard
// distribution.
struct TraceMetrics {
  std::string trace_id;
  std::string student_id;
  std::optional<double> fotu;
  std::optional<int> rr_count;
  std::optional<double> rr_proportion;
  std::optional<int> hazard_bin;
};

struct GroupMetrics {
  std::optional<double> mean_fotu;
  std::optional<double> mean_rr;
  std::optional<double> sotu;
  long traces = 0;
  long covered = 0;
};

std::vector<TraceMetrics> per_trace_metrics(
    const std::vector<RolloutObservation>& records, BinningScheme scheme = {});

GroupMetrics group_metrics(const std::vector<RolloutObservation>& records,
                           BinningScheme scheme = {});

}  // namespace legival::tu
