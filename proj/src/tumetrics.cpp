#include "legival/tumetrics.hpp"

#include <algorithm>
#include <cmath>

#include "legival/errors.hpp"

namespace legival::tu {

int BinningScheme::bin_depth(int k, int m) const {
  if (m < 1 || k < 0 || k > m)
    throw DataError("bin_depth requires 0 <= k <= m, m >= 1");
  if (k == 0) return zero_bin ? 0 : 1;
  // ceil(bins * k / m) in exact integer arithmetic
  long long num = static_cast<long long>(bins) * k;
  return static_cast<int>((num + m - 1) / m);
}

void TransferCurve::add(int bin, bool success) {
  int idx = bin - scheme.first_bin();
  if (idx < 0 || idx >= static_cast<int>(cells.size()))
    throw DataError("bin out of range: " + std::to_string(bin));
  ++cells[idx].samples;
  if (success) ++cells[idx].successes;
}

std::optional<double> TransferCurve::bin_mean(int bin) const {
  int idx = bin - scheme.first_bin();
  if (idx < 0 || idx >= static_cast<int>(cells.size())) return std::nullopt;
  if (cells[idx].samples == 0) return std::nullopt;
  return static_cast<double>(cells[idx].successes) /
         static_cast<double>(cells[idx].samples);
}

std::vector<double> TransferCurve::present_means() const {
  std::vector<double> means;
  for (const auto& c : cells) {
    if (c.samples > 0)
      means.push_back(static_cast<double>(c.successes) /
                      static_cast<double>(c.samples));
  }
  return means;
}

int TransferCurve::present_bins() const {
  int n = 0;
  for (const auto& c : cells) n += c.samples > 0 ? 1 : 0;
  return n;
}

TransferCurve transfer_curve(const std::vector<RolloutObservation>& records,
                             BinningScheme scheme) {
  TransferCurve curve(scheme);
  for (const auto& r : records) {
    curve.add(scheme.bin_depth(r.k, r.m), r.correct);
  }
  return curve;
}

std::optional<double> fotu(const TransferCurve& curve) {
  auto means = curve.present_means();
  if (means.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : means) sum += v;
  return sum / static_cast<double>(means.size());
}

std::optional<int> hazard(const std::vector<RolloutObservation>& trace_records,
                          BinningScheme scheme) {
  std::optional<int> first_k;
  for (const auto& r : trace_records) {
    if (r.correct && (!first_k || r.k < *first_k)) first_k = r.k;
  }
  if (!first_k) return std::nullopt;
  int m = trace_records.front().m;
  return scheme.bin_depth(*first_k, m);
}

void HazardDistribution::add_hazard(int bin) {
  int idx = bin - scheme.first_bin();
  if (idx < 0 || idx >= static_cast<int>(counts.size()))
    throw DataError("hazard bin out of range: " + std::to_string(bin));
  ++counts[idx];
  ++covered;
  ++total;
}

std::optional<double> sotu(const HazardDistribution& dist) {
  if (dist.covered == 0) return std::nullopt;
  double h = 0.0;
  for (long c : dist.counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(dist.covered);
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(dist.scheme.cell_count()));
}

std::optional<RegressionRate> regression_rate(const TransferCurve& curve) {
  auto means = curve.present_means();
  if (means.size() < 2) return std::nullopt;
  RegressionRate rr;
  for (size_t i = 1; i < means.size(); ++i) {
    if (means[i] < means[i - 1]) ++rr.count;
  }
  rr.proportion = static_cast<double>(rr.count) /
                  static_cast<double>(means.size() - 1);
  return rr;
}

namespace {

// Groups records by (trace_id, student_id), iteration order fixed by key.
std::map<std::pair<std::string, std::string>, std::vector<RolloutObservation>>
group_by_trace(const std::vector<RolloutObservation>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<RolloutObservation>>
      groups;
  for (const auto& r : records) {
    groups[{r.trace_id, r.student_id}].push_back(r);
  }
  for (auto& [key, recs] : groups) {
    std::sort(recs.begin(), recs.end(),
              [](const auto& a, const auto& b) { return a.k < b.k; });
  }
  return groups;
}

}  // namespace

std::vector<TraceMetrics> per_trace_metrics(
    const std::vector<RolloutObservation>& records, BinningScheme scheme) {
  std::vector<TraceMetrics> out;
  for (const auto& [key, recs] : group_by_trace(records)) {
    TraceMetrics tm;
    tm.trace_id = key.first;
    tm.student_id = key.second;
    TransferCurve curve = transfer_curve(recs, scheme);
    tm.fotu = fotu(curve);
    if (auto rr = regression_rate(curve)) {
      tm.rr_count = rr->count;
      tm.rr_proportion = rr->proportion;
    }
    tm.hazard_bin = hazard(recs, scheme);
    out.push_back(std::move(tm));
  }
  return out;
}

GroupMetrics group_metrics(const std::vector<RolloutObservation>& records,
                           BinningScheme scheme) {
  GroupMetrics gm;
  HazardDistribution dist(scheme);
  double fotu_sum = 0.0, rr_sum = 0.0;
  long fotu_n = 0, rr_n = 0;
  for (const auto& tm : per_trace_metrics(records, scheme)) {
    ++gm.traces;
    if (tm.fotu) {
      fotu_sum += *tm.fotu;
      ++fotu_n;
    }
    if (tm.rr_proportion) {
      rr_sum += *tm.rr_proportion;
      ++rr_n;
    }
    if (tm.hazard_bin) {
      dist.add_hazard(*tm.hazard_bin);
    } else {
      dist.add_miss();
    }
  }
  if (fotu_n > 0) gm.mean_fotu = fotu_sum / static_cast<double>(fotu_n);
  if (rr_n > 0) gm.mean_rr = rr_sum / static_cast<double>(rr_n);
  gm.sotu = sotu(dist);
  gm.covered = dist.covered;
  return gm;
}

}  // namespace legival::tu
