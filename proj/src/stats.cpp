#include "legival/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "legival/errors.hpp"

namespace legival::stats {

std::vector<double> average_ranks(const std::vector<double>& values,
                                  bool ascending) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ascending ? values[a] < values[b] : values[a] > values[b];
  });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DataError("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

std::optional<double> kendall_tau(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DataError("kendall_tau: length mismatch");
  const size_t n = x.size();
  if (n < 2) return std::nullopt;
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j];
      double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  // tau-b: ties in both vectors drop out of n0 entirely
  long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  long long joint_ties = n0 - concordant - discordant - ties_x - ties_y;
  double denom_x = static_cast<double>(n0 - ties_x - joint_ties);
  double denom_y = static_cast<double>(n0 - ties_y - joint_ties);
  if (denom_x <= 0.0 || denom_y <= 0.0) return std::nullopt;
  return static_cast<double>(concordant - discordant) /
         std::sqrt(denom_x * denom_y);
}

namespace {

std::optional<double> cohen_kappa(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  const size_t n = a.size();
  if (n == 0) return std::nullopt;
  std::map<int, double> pa, pb;
  double observed = 0.0;
  for (size_t i = 0; i < n; ++i) {
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
    if (a[i] == b[i]) observed += 1.0;
  }
  observed /= static_cast<double>(n);
  double expected = 0.0;
  for (const auto& [cat, ca] : pa) {
    auto it = pb.find(cat);
    if (it != pb.end())
      expected += (ca / static_cast<double>(n)) * (it->second / static_cast<double>(n));
  }
  if (expected == 1.0) return observed == 1.0 ? std::optional<double>(1.0)
                                              : std::nullopt;
  return (observed - expected) / (1.0 - expected);
}

}  // namespace

std::optional<double> kappa_exact(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  return cohen_kappa(a, b);
}

std::optional<double> kappa_binary(const std::vector<int>& a,
                                   const std::vector<int>& b) {
  std::vector<int> ba(a.size()), bb(b.size());
  for (size_t i = 0; i < a.size(); ++i) ba[i] = a[i] > 0 ? 1 : 0;
  for (size_t i = 0; i < b.size(); ++i) bb[i] = b[i] > 0 ? 1 : 0;
  return cohen_kappa(ba, bb);
}

AgreementStats agreement_stats(const std::vector<int>& a,
                               const std::vector<int>& b) {
  if (a.size() != b.size())
    throw DataError("agreement_stats: label vectors differ in length");
  if (a.size() < 2)
    throw DataError("agreement_stats: need at least 2 labels");
  std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  AgreementStats s;
  s.n = static_cast<int>(a.size());
  s.spearman_rho = spearman(da, db);
  s.kendall = kendall_tau(da, db);
  s.exact_kappa = kappa_exact(a, b);
  s.binary_kappa = kappa_binary(a, b);
  return s;
}

namespace {

std::optional<double> get_median_tokens(const ModelReport& r) {
  return r.median_tokens;
}
std::optional<double> get_redundancy(const ModelReport& r) {
  return r.mean_redundancy;
}
std::optional<double> get_backtracking(const ModelReport& r) {
  return r.mean_backtracking;
}
std::optional<double> get_fotu(const ModelReport& r) { return r.fotu; }
std::optional<double> get_sotu(const ModelReport& r) { return r.sotu; }
std::optional<double> get_rr(const ModelReport& r) {
  return r.regression_rate;
}
std::optional<double> get_accuracy(const ModelReport& r) {
  return r.accuracy;
}

}  // namespace

const std::vector<MetricSpec>& legibility_metrics() {
  static const std::vector<MetricSpec> metrics = {
      {"length", false, &get_median_tokens},
      {"redundancy", false, &get_redundancy},
      {"backtracking", false, &get_backtracking},
      {"fotu", true, &get_fotu},
      {"sotu", true, &get_sotu},
      {"regression_rate", false, &get_rr},
  };
  return metrics;
}

const MetricSpec& accuracy_metric() {
  static const MetricSpec acc{"accuracy", true, &get_accuracy};
  return acc;
}

RankTable rank_models(const std::vector<ModelReport>& reports,
                      const MetricSpec& metric) {
  std::vector<const ModelReport*> rows;
  for (const auto& r : reports) {
    if (metric.get(r)) rows.push_back(&r);
  }
  if (rows.size() < 2)
    throw DataError("rank_models: need >= 2 models with metric '" +
                    metric.name + "'");
  std::vector<double> values, acc;
  for (const auto* r : rows) {
    values.push_back(*metric.get(*r));
    acc.push_back(r->accuracy);
  }
  // rank 1 = best: ascending for lower-better, descending otherwise
  auto ranks = average_ranks(values, !metric.higher_better);
  auto acc_ranks = average_ranks(acc, false);

  RankTable table;
  table.metric = metric.name;
  for (size_t i = 0; i < rows.size(); ++i) {
    RankEntry e;
    e.teacher_id = rows[i]->teacher_id;
    e.value = values[i];
    e.rank = ranks[i];
    e.delta_vs_acc = acc_ranks[i] - ranks[i];
    table.entries.push_back(e);
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const RankEntry& a, const RankEntry& b) {
              return a.rank < b.rank ||
                     (a.rank == b.rank && a.teacher_id < b.teacher_id);
            });
  return table;
}

StabilityRow stability_row(
    const std::map<std::string, std::map<std::string, double>>& values_by_split,
    const std::vector<std::string>& splits, const std::string& metric_name) {
  StabilityRow row;
  row.metric = metric_name;
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < splits.size(); ++i) {
    for (size_t j = i + 1; j < splits.size(); ++j) {
      StabilityCell cell;
      cell.split_a = splits[i];
      cell.split_b = splits[j];
      auto ita = values_by_split.find(splits[i]);
      auto itb = values_by_split.find(splits[j]);
      if (ita != values_by_split.end() && itb != values_by_split.end()) {
        std::vector<double> va, vb;
        for (const auto& [model, value] : ita->second) {
          auto itm = itb->second.find(model);
          if (itm != itb->second.end()) {
            va.push_back(value);
            vb.push_back(itm->second);
          }
        }
        cell.shared_models = static_cast<int>(va.size());
        if (va.size() >= 2) cell.rho = spearman(va, vb);
      }
      if (cell.rho) {
        sum += *cell.rho;
        ++count;
      }
      row.pairs.push_back(std::move(cell));
    }
  }
  if (count > 0) row.average = sum / count;
  return row;
}

CorrelationMatrix correlation_matrix(const std::vector<ModelReport>& reports) {
  CorrelationMatrix out;
  std::vector<MetricSpec> all = {accuracy_metric()};
  for (const auto& m : legibility_metrics()) all.push_back(m);
  for (const auto& m : all) out.metrics.push_back(m.name);

  std::set<std::string> datasets;
  for (const auto& r : reports) datasets.insert(r.dataset);

  const size_t k = all.size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(k, 0.0));
  std::vector<std::vector<int>> counts(k, std::vector<int>(k, 0));

  for (const auto& ds : datasets) {
    std::vector<const ModelReport*> rows;
    for (const auto& r : reports) {
      if (r.dataset == ds) rows.push_back(&r);
    }
    if (rows.size() < 3) continue;
    ++out.datasets_used;
    for (size_t a = 0; a < k; ++a) {
      for (size_t b = 0; b < k; ++b) {
        std::vector<double> va, vb;
        for (const auto* r : rows) {
          auto xa = all[a].get(*r);
          auto xb = all[b].get(*r);
          if (xa && xb) {
            va.push_back(*xa);
            vb.push_back(*xb);
          }
        }
        if (a == b && va.size() >= 2) {
          sums[a][b] += 1.0;
          ++counts[a][b];
          continue;
        }
        if (va.size() >= 3) {
          if (auto rho = spearman(va, vb)) {
            sums[a][b] += *rho;
            ++counts[a][b];
          }
        }
      }
    }
  }

  out.rho.assign(k, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));
  for (size_t a = 0; a < k; ++a) {
    for (size_t b = 0; b < k; ++b) {
      if (counts[a][b] > 0) out.rho[a][b] = sums[a][b] / counts[a][b];
    }
  }
  return out;
}

namespace {

std::optional<double> paired_spearman(const std::vector<double>& x,
                                      const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  return spearman(x, y);
}

}  // namespace

std::vector<RmCorrelationRow> rm_correlation(
    const std::string& scorer_id, const std::vector<TraceScore>& scores,
    const std::vector<TraceTuMetrics>& trace_metrics,
    const std::vector<ModelReport>& model_reports_all,
    const std::vector<ModelReport>& model_reports_correct) {
  std::vector<RmCorrelationRow> rows;

  std::map<std::string, const TraceScore*> score_by_trace;
  for (const auto& s : scores) score_by_trace[s.trace_id] = &s;

  struct TraceMetricSpec {
    const char* name;
    std::optional<double> (*get)(const TraceTuMetrics&);
  };
  static const TraceMetricSpec trace_specs[] = {
      {"fotu", [](const TraceTuMetrics& t) { return t.fotu; }},
      {"regression_rate",
       [](const TraceTuMetrics& t) { return t.rr_proportion; }},
  };

  for (const auto& spec : trace_specs) {
    RmCorrelationRow row;
    row.level = "trace";
    row.scorer = scorer_id;
    row.metric = spec.name;
    std::vector<double> s_all, m_all, s_cor, m_cor;
    for (const auto& tm : trace_metrics) {
      auto it = score_by_trace.find(tm.trace_id);
      auto value = spec.get(tm);
      if (it == score_by_trace.end() || !value) continue;
      s_all.push_back(it->second->score);
      m_all.push_back(*value);
      if (it->second->teacher_correct) {
        s_cor.push_back(it->second->score);
        m_cor.push_back(*value);
      }
    }
    row.n_all = static_cast<int>(s_all.size());
    row.n_correct = static_cast<int>(s_cor.size());
    row.rho_all = paired_spearman(s_all, m_all);
    row.rho_correct = paired_spearman(s_cor, m_cor);
    rows.push_back(std::move(row));
  }

  // Model level: per-teacher mean score (all traces vs correct-only)
  // against the teacher's TU metrics.
  auto mean_scores = [&](bool correct_only) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& s : scores) {
      if (correct_only && !s.teacher_correct) continue;
      auto& [sum, n] = acc[s.teacher_id];
      sum += s.score;
      ++n;
    }
    std::map<std::string, double> means;
    for (const auto& [teacher, p] : acc)
      means[teacher] = p.first / p.second;
    return means;
  };
  auto all_means = mean_scores(false);
  auto correct_means = mean_scores(true);

  struct ModelMetricSpec {
    const char* name;
    std::optional<double> (*get)(const ModelReport&);
  };
  static const ModelMetricSpec model_specs[] = {
      {"fotu", [](const ModelReport& r) { return r.fotu; }},
      {"sotu", [](const ModelReport& r) { return r.sotu; }},
      {"regression_rate",
       [](const ModelReport& r) { return r.regression_rate; }},
  };

  for (const auto& spec : model_specs) {
    RmCorrelationRow row;
    row.level = "model";
    row.scorer = scorer_id;
    row.metric = spec.name;
    auto collect = [&](const std::map<std::string, double>& means,
                       const std::vector<ModelReport>& reports,
                       std::vector<double>& s, std::vector<double>& m) {
      for (const auto& r : reports) {
        auto it = means.find(r.teacher_id);
        auto value = spec.get(r);
        if (it != means.end() && value) {
          s.push_back(it->second);
          m.push_back(*value);
        }
      }
    };
    std::vector<double> s_all, m_all, s_cor, m_cor;
    collect(all_means, model_reports_all, s_all, m_all);
    collect(correct_means, model_reports_correct, s_cor, m_cor);
    row.n_all = static_cast<int>(s_all.size());
    row.n_correct = static_cast<int>(s_cor.size());
    row.rho_all = paired_spearman(s_all, m_all);
    row.rho_correct = paired_spearman(s_cor, m_cor);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, double> borda_mean_rank(
    const std::vector<ModelReport>& reports) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& metric : legibility_metrics()) {
    std::vector<const ModelReport*> rows;
    for (const auto& r : reports) {
      if (metric.get(r)) rows.push_back(&r);
    }
    if (rows.size() < 2) continue;
    std::vector<double> values;
    for (const auto* r : rows) values.push_back(*metric.get(*r));
    auto ranks = average_ranks(values, !metric.higher_better);
    for (size_t i = 0; i < rows.size(); ++i) {
      auto& [sum, n] = acc[rows[i]->teacher_id];
      sum += ranks[i];
      ++n;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [teacher, p] : acc) out[teacher] = p.first / p.second;
  return out;
}

}  // namespace legival::stats
