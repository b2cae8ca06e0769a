#include "dare/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

#include "dare/error.hpp"
#include "dare/random.hpp"

namespace dare {

ConfusionMatrix::ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= n_ || predicted >= n_) {
    fail(ErrorCode::LabelOutOfRange,
         "label pair (" + std::to_string(truth) + ", " + std::to_string(predicted) + ") outside " + std::to_string(n_));
  }
  ++counts_[truth * n_ + predicted];
  ++total_;
}

std::uint64_t ConfusionMatrix::tp(std::size_t i) const { return at(i, i); }

std::uint64_t ConfusionMatrix::fn(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += at(i, j);
  return s - at(i, i);
}

std::uint64_t ConfusionMatrix::fp(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += at(j, i);
  return s - at(i, i);
}

std::uint64_t ConfusionMatrix::tn(std::size_t i) const { return total_ - tp(i) - fn(i) - fp(i); }

ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, std::size_t n) {
  if (truth.size() != predicted.size()) {
    fail(ErrorCode::LengthMismatch,
         std::to_string(truth.size()) + " true labels vs " + std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(n);
  for (std::size_t k = 0; k < truth.size(); ++k) cm.add(truth[k], predicted[k]);
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorCode::EmptyMatrix, "no scored samples");
  MetricsReport r;
  r.n = cm.classes();
  std::uint64_t correct = 0;
  double f1_sum = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const auto tp = cm.tp(i), fn = cm.fn(i), fp = cm.fp(i), tn = cm.tn(i);
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.tpr = m.recall;
    m.tnr = ratio(tn, tn + fp);
    m.bacc = (m.tpr + m.tnr) / 2.0;
    r.per_class.push_back(m);
    f1_sum += m.f1;
    correct += tp;
  }
  r.macro_f1 = f1_sum / static_cast<double>(r.n);
  r.ccr_percent = 100.0 * ratio(correct, cm.total());
  return r;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::EmptyList, "quantile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? values[lo] : values[lo] + frac * (values[hi] - values[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyList, "box stats of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {v.front(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), v.back()};
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t count, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidK, "k must be at least 2, got " + std::to_string(k));
  if (count < k) fail(ErrorCode::InvalidK, std::to_string(count) + " samples cannot fill " + std::to_string(k) + " folds");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = count / k + (f < count % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r, std::span<const std::string> names) {
  const auto old = out.precision();
  out << std::setprecision(17);
  out << "class,precision,recall,f1,tpr,tnr,bacc\n";
  for (std::size_t i = 0; i < r.n; ++i) {
    const ClassMetrics& m = r.per_class[i];
    out << (i < names.size() ? names[i] : std::to_string(i)) << ',' << m.precision << ',' << m.recall << ','
        << m.f1 << ',' << m.tpr << ',' << m.tnr << ',' << m.bacc << '\n';
  }
  out << "summary,macro_f1=" << r.macro_f1 << ",ccr_percent=" << r.ccr_percent << '\n';
  out.precision(old);
}

void write_box_csv(std::ostream& out, const MetricsReport& r) {
  std::vector<double> bacc, f1;
  for (const auto& m : r.per_class) {
    bacc.push_back(m.bacc);
    f1.push_back(m.f1);
  }
  const auto old = out.precision();
  out << std::setprecision(17);
  out << "metric,min,p25,median,p75,max\n";
  for (const auto& [name, values] : {std::pair{"bacc", &bacc}, std::pair{"f1", &f1}}) {
    const BoxStats b = box_stats(*values);
    out << name << ',' << b.min << ',' << b.p25 << ',' << b.median << ',' << b.p75 << ',' << b.max << '\n';
  }
  out.precision(old);
}

}  // namespace dare
