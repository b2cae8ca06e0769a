#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dare/error.hpp"
#include "dare/metrics.hpp"
#include "dare/random.hpp"
#include "oracles.hpp"

using namespace dare;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ContractViolation;
}

std::vector<std::size_t> expand(const std::vector<std::vector<std::size_t>>& counts, bool truth) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < counts.size(); ++t)
    for (std::size_t p = 0; p < counts[t].size(); ++p)
      for (std::size_t k = 0; k < counts[t][p]; ++k) out.push_back(truth ? t : p);
  return out;
}

}  // namespace

TEST(Tally, HandCounts) {
  const std::vector<std::size_t> truth{0, 0, 1}, pred{0, 1, 1};
  const ConfusionMatrix cm = tally(truth, pred, 2);
  EXPECT_EQ(cm.tp(0), 1u);
  EXPECT_EQ(cm.fn(0), 1u);
  EXPECT_EQ(cm.fp(1), 1u);
  EXPECT_EQ(cm.tp(1), 1u);
  EXPECT_EQ(cm.tn(0), 1u);
  const std::vector<std::size_t> all{0, 1, 2, 2};
  const ConfusionMatrix diag = tally(all, all, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(diag.at(i, j), 0u);
  EXPECT_EQ(code_of([&] { tally(truth, all, 3); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { tally(all, all, 2); }), ErrorCode::LabelOutOfRange);
}

TEST(Tally, PartitionIdentity) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(6), m = 1 + rng.below(40);
    std::vector<std::size_t> a(m), b(m);
    for (std::size_t k = 0; k < m; ++k) {
      a[k] = rng.below(n);
      b[k] = rng.below(n);
    }
    const ConfusionMatrix cm = tally(a, b, n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(cm.tp(i) + cm.fn(i) + cm.fp(i) + cm.tn(i), m);
  }
}

TEST(Report, HandExamples) {
  // Class 0: TP 3, FN 1, FP 1.
  const auto cm3 = tally(expand({{3, 1}, {1, 5}}, true), expand({{3, 1}, {1, 5}}, false), 2);
  const MetricsReport r3 = report(cm3);
  EXPECT_DOUBLE_EQ(r3.per_class[0].precision, 0.75);
  EXPECT_DOUBLE_EQ(r3.per_class[0].recall, 0.75);
  EXPECT_DOUBLE_EQ(r3.per_class[0].f1, 0.75);

  const std::vector<std::vector<std::size_t>> counts{{8, 2}, {3, 7}};
  const MetricsReport r = report(tally(expand(counts, true), expand(counts, false), 2));
  EXPECT_EQ(r.ccr_percent, 75.0);
  EXPECT_EQ(r.per_class[0].bacc, 0.75);
  EXPECT_NEAR(r.per_class[0].f1, 0.7619, 5e-5);
  EXPECT_NEAR(r.per_class[1].f1, 0.7368, 5e-5);
  EXPECT_NEAR(r.macro_f1, 0.7494, 5e-5);
  EXPECT_EQ(code_of([] { report(ConfusionMatrix(3)); }), ErrorCode::EmptyMatrix);
}

TEST(Report, PerfectClassifier) {
  for (std::size_t n : {2, 5, 20}) {
    std::vector<std::size_t> labels;
    for (std::size_t k = 0; k < 3 * n; ++k) labels.push_back(k % n);
    const MetricsReport r = report(tally(labels, labels, n));
    EXPECT_EQ(r.ccr_percent, 100.0);
    for (const auto& m : r.per_class) EXPECT_EQ(m.bacc, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
  }
}

TEST(Report, MatchesBruteForce) {
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(8), m = 1 + rng.below(60);
    std::vector<std::size_t> a(m), b(m);
    for (std::size_t k = 0; k < m; ++k) {
      a[k] = rng.below(n);
      b[k] = rng.below(2) ? a[k] : rng.below(n);
    }
    const MetricsReport r = report(tally(a, b, n));
    const oracle::BruteMetrics o = oracle::brute_metrics(a, b, n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(r.per_class[i].precision, o.precision[i], 1e-12);
      EXPECT_NEAR(r.per_class[i].recall, o.recall[i], 1e-12);
      EXPECT_NEAR(r.per_class[i].f1, o.f1[i], 1e-12);
      EXPECT_NEAR(r.per_class[i].tnr, o.tnr[i], 1e-12);
      EXPECT_NEAR(r.per_class[i].bacc, o.bacc[i], 1e-12);
      EXPECT_GE(r.per_class[i].f1, 0.0);
      EXPECT_LE(r.per_class[i].f1, std::max(r.per_class[i].precision, r.per_class[i].recall) + 1e-15);
    }
    EXPECT_NEAR(r.macro_f1, o.macro_f1, 1e-12);
    EXPECT_NEAR(r.ccr_percent, o.ccr, 1e-12);
  }
}

TEST(Report, PermutingClassesPermutesMetrics) {
  Rng rng(3);
  const std::size_t n = 5, m = 80;
  std::vector<std::size_t> a(m), b(m), perm{3, 0, 4, 1, 2};
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = rng.below(n);
    b[k] = rng.below(3) ? a[k] : rng.below(n);
  }
  std::vector<std::size_t> pa(m), pb(m);
  for (std::size_t k = 0; k < m; ++k) {
    pa[k] = perm[a[k]];
    pb[k] = perm[b[k]];
  }
  const MetricsReport r = report(tally(a, b, n)), q = report(tally(pa, pb, n));
  EXPECT_EQ(r.ccr_percent, q.ccr_percent);
  EXPECT_NEAR(r.macro_f1, q.macro_f1, 1e-15);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(r.per_class[i].f1, q.per_class[perm[i]].f1);
    EXPECT_EQ(r.per_class[i].bacc, q.per_class[perm[i]].bacc);
  }
}

TEST(Report, ConstantPredictorGivesHalfBacc) {
  const std::vector<std::size_t> truth{0, 1, 2, 3, 1, 2, 3, 0};
  const std::vector<std::size_t> pred(truth.size(), 0);
  const MetricsReport r = report(tally(truth, pred, 4));
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_EQ(r.per_class[i].tpr, 0.0);
    EXPECT_EQ(r.per_class[i].tnr, 1.0);
    EXPECT_EQ(r.per_class[i].bacc, 0.5);
    EXPECT_EQ(r.per_class[i].precision, 0.0);
  }
  EXPECT_EQ(r.ccr_percent, 25.0);
}

TEST(BoxStats, Examples) {
  const BoxStats one = box_stats(std::vector<double>{5});
  EXPECT_EQ(one.min, 5);
  EXPECT_EQ(one.p25, 5);
  EXPECT_EQ(one.max, 5);
  const BoxStats odd = box_stats(std::vector<double>{1, 2, 3, 4, 5});
  EXPECT_EQ(odd.min, 1);
  EXPECT_EQ(odd.median, 3);
  EXPECT_EQ(odd.max, 5);
  const BoxStats even = box_stats(std::vector<double>{4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(even.p25, 1.75);
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.p75, 3.25);
  EXPECT_EQ(code_of([] { box_stats(std::vector<double>{}); }), ErrorCode::EmptyList);
}

TEST(BoxStats, OrderedAndPermutationInvariant) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng.below(20));
    for (double& x : v) x = rng.uniform(-5, 5);
    const BoxStats a = box_stats(v);
    EXPECT_LE(a.min, a.p25);
    EXPECT_LE(a.p25, a.median);
    EXPECT_LE(a.median, a.p75);
    EXPECT_LE(a.p75, a.max);
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, rng);
    std::vector<double> w;
    for (std::size_t i : idx) w.push_back(v[i]);
    const BoxStats b = box_stats(w);
    EXPECT_EQ(a.p25, b.p25);
    EXPECT_EQ(a.median, b.median);
    EXPECT_EQ(a.p75, b.p75);
  }
}

TEST(Kfold, SizesAndPartition) {
  auto sizes = [](const auto& folds) {
    std::vector<std::size_t> s;
    for (const auto& f : folds) s.push_back(f.size());
    return s;
  };
  EXPECT_EQ(sizes(kfold_split(10, 5, 1)), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  EXPECT_EQ(sizes(kfold_split(11, 5, 1)), (std::vector<std::size_t>{3, 2, 2, 2, 2}));
  EXPECT_EQ(code_of([] { kfold_split(10, 1, 1); }), ErrorCode::InvalidK);
  EXPECT_EQ(code_of([] { kfold_split(3, 4, 1); }), ErrorCode::InvalidK);
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.below(8), count = k + rng.below(60);
    const auto folds = kfold_split(count, k, rng.next());
    std::set<std::size_t> seen;
    std::size_t total = 0;
    std::size_t lo = count, hi = 0;
    for (const auto& f : folds) {
      seen.insert(f.begin(), f.end());
      total += f.size();
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
    }
    EXPECT_EQ(total, count);
    EXPECT_EQ(seen.size(), count);
    EXPECT_EQ(*seen.rbegin(), count - 1);
    EXPECT_LE(hi - lo, 1u);
  }
  EXPECT_EQ(kfold_split(30, 3, 9), kfold_split(30, 3, 9));
}

TEST(CrossValidate, StubPredictorGivesPrevalence) {
  FeatureDataset data{1, 4, {}, {}};
  for (std::size_t k = 0; k < 30; ++k) data.push_back(Vector1{static_cast<double>(k)}, k < 9 ? 0 : 1 + k % 3);
  const CrossValidation cv = cross_validate(data, 2, 3, [](const FeatureDataset&, std::size_t) -> Classifier {
    return [](std::span<const Scalar>) { return std::size_t{0}; };
  });
  EXPECT_DOUBLE_EQ(cv.aggregate.ccr_percent, 100.0 * 9.0 / 30.0);
  std::size_t total = 0;
  for (const auto& f : cv.folds) total += f.indices.size();
  EXPECT_EQ(total, 30u);
  EXPECT_EQ(cv.aggregate_matrix.total(), 30u);
}

TEST(CrossValidate, FoldIndexInErrors) {
  FeatureDataset data{1, 2, {}, {}};
  for (std::size_t k = 0; k < 6; ++k) data.push_back(Vector1{0.0}, k % 2);
  try {
    cross_validate(data, 3, 1, [](const FeatureDataset&, std::size_t fold) -> Classifier {
      if (fold == 1) fail(ErrorCode::DegenerateNode, "boom");
      return [](std::span<const Scalar>) { return std::size_t{0}; };
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateNode);
    EXPECT_NE(std::string(e.what()).find("fold 1"), std::string::npos);
  }
}

TEST(Csv, Layout) {
  const std::vector<std::vector<std::size_t>> counts{{8, 2}, {3, 7}};
  const MetricsReport r = report(tally(expand(counts, true), expand(counts, false), 2));
  std::ostringstream out;
  const std::vector<std::string> names{"start", "up"};
  write_metrics_csv(out, r, names);
  std::istringstream lines(out.str());
  std::vector<std::string> rows;
  for (std::string line; std::getline(lines, line);) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "class,precision,recall,f1,tpr,tnr,bacc");
  EXPECT_EQ(rows[1].rfind("start,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("summary,macro_f1=", 0), 0u);
  EXPECT_NE(rows[3].find("ccr_percent=75"), std::string::npos);
  std::ostringstream box;
  write_box_csv(box, r);
  EXPECT_EQ(box.str().substr(0, box.str().find('\n')), "metric,min,p25,median,p75,max");
  EXPECT_NE(box.str().find("\nbacc,"), std::string::npos);
  EXPECT_NE(box.str().find("\nf1,"), std::string::npos);
}
