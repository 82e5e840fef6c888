#include "gms3dqa/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "gms3dqa/error.hpp"
#include "gms3dqa/rng.hpp"

namespace gms {

double logistic_map(const std::array<double, 5>& b, double y) {
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(b[1] * (y - b[2])))) + b[3] * y + b[4];
}

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

double sum_squares(const std::array<double, 5>& beta, std::span<const double> y, std::span<const double> q) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = logistic_map(beta, y[i]) - q[i];
    s += r * r;
  }
  return s;
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double stddev(std::span<const double> v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

LogisticParams levenberg_marquardt(std::array<double, 5> beta, std::span<const double> y, std::span<const double> q,
                                   const LogisticFitOptions& opts) {
  double sse = sum_squares(beta, y, q);
  double mu = opts.initial_damping;
  const std::size_t n = y.size();

  LogisticParams out;
  Eigen::Matrix<double, Eigen::Dynamic, 5> jac(static_cast<Eigen::Index>(n), 5);
  Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
  int it = 0;
  for (; it < opts.max_iterations && sse > 0; ++it) {
    for (std::size_t i = 0; i < n; ++i) resid[static_cast<Eigen::Index>(i)] = logistic_map(beta, y[i]) - q[i];
    for (int j = 0; j < 5; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(beta[j]));
      auto plus = beta, minus = beta;
      plus[j] += h;
      minus[j] -= h;
      for (std::size_t i = 0; i < n; ++i) {
        jac(static_cast<Eigen::Index>(i), j) = (logistic_map(plus, y[i]) - logistic_map(minus, y[i])) / (2 * h);
      }
    }
    const Mat5 jtj = jac.transpose() * jac;
    const Vec5 grad = jac.transpose() * resid;

    bool accepted = false;
    double step_norm = 0;
    while (mu < 1e16) {
      Mat5 damped = jtj;
      for (int j = 0; j < 5; ++j) damped(j, j) += mu * std::max(jtj(j, j), 1e-12);
      const Vec5 delta = damped.ldlt().solve(-grad);
      step_norm = delta.norm();
      std::array<double, 5> cand = beta;
      for (int j = 0; j < 5; ++j) cand[j] += delta[j];
      const double cand_sse = sum_squares(cand, y, q);
      if (std::isfinite(cand_sse) && cand_sse < sse) {
        beta = cand;
        sse = cand_sse;
        mu = std::max(mu * 0.1, 1e-15);
        accepted = true;
        if (opts.sse_trace != nullptr) opts.sse_trace->push_back(sse);
        break;
      }
      mu *= 10;
      if (step_norm < opts.step_tolerance) break;
    }
    if (!accepted || step_norm < opts.step_tolerance) {
      // No descent step left at any damping, or the accepted step was negligible.
      out.converged = true;
      ++it;
      break;
    }
  }
  if (sse == 0) out.converged = true;
  out.beta = beta;
  out.sse = sse;
  out.iterations = it;
  return out;
}

}  // namespace

LogisticParams fit_logistic(std::span<const double> y, std::span<const double> q, const LogisticFitOptions& opts) {
  if (y.size() != q.size()) throw Error(Errc::LengthMismatch, "predictions and labels differ in length");
  if (y.size() < 5) throw Error(Errc::TooFewSamples, "logistic fit needs at least 5 samples");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(q[i])) throw Error(Errc::DegenerateLabels, "non-finite input");
  }
  const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
  if (*qmin == *qmax) throw Error(Errc::DegenerateLabels, "all labels are equal");

  const double sy = stddev(y);
  const double my = mean(y), mq = mean(q);
  const std::array<double, 5> start{*qmax - *qmin, sy > 0 ? 1.0 / sy : 1.0, my, 0.0, mq};
  LogisticParams best = levenberg_marquardt(start, y, q, opts);

  // The sigmoid can imitate a straight line only in a long flat valley, so
  // near-linear data also gets a start from the least-squares line.
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (y[i] - my) * (q[i] - mq);
    sxx += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  std::vector<double> trace;
  LogisticFitOptions alt = opts;
  if (opts.sse_trace != nullptr) alt.sse_trace = &trace;
  const LogisticParams linear =
      levenberg_marquardt({0.0, sy > 0 ? 1.0 / sy : 1.0, my, slope, mq - slope * my}, y, q, alt);
  if (linear.sse < best.sse) {
    best = linear;
    if (opts.sse_trace != nullptr) *opts.sse_trace = std::move(trace);
  }
  return best;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "pearson inputs differ in length");
  if (a.empty()) return 0;
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) return 0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

namespace {

/// Merge sort on `v` counting exchanges needed (inversions).
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, tmp, lo, mid) + count_inversions(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

template <typename Eq>
std::uint64_t tied_pairs(std::size_t n, Eq same_as_prev) {
  std::uint64_t ties = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (same_as_prev(i)) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

}  // namespace

double kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "kendall inputs differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 0;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
  });
  std::vector<double> sa(n), sb(n);
  for (std::size_t i = 0; i < n; ++i) {
    sa[i] = a[idx[i]];
    sb[i] = b[idx[i]];
  }
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t ties_a = tied_pairs(n, [&](std::size_t i) { return sa[i] == sa[i - 1]; });
  const std::uint64_t ties_ab =
      tied_pairs(n, [&](std::size_t i) { return sa[i] == sa[i - 1] && sb[i] == sb[i - 1]; });
  std::vector<double> tmp(n);
  const std::uint64_t swaps = count_inversions(sb, tmp, 0, n);
  const std::uint64_t ties_b = tied_pairs(n, [&](std::size_t i) { return sb[i] == sb[i - 1]; });
  if (ties_a == n0 || ties_b == n0) return 0;
  // concordant - discordant = n0 - ties_a - ties_b + ties_ab - 2 * swaps
  const double num = static_cast<double>(static_cast<std::int64_t>(n0 - ties_a - ties_b + ties_ab) -
                                         2 * static_cast<std::int64_t>(swaps));
  const double den = std::sqrt(static_cast<double>(n0 - ties_a) * static_cast<double>(n0 - ties_b));
  return std::clamp(num / den, -1.0, 1.0);
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> mos) {
  if (pred.size() != mos.size()) throw Error(Errc::LengthMismatch, "predictions and labels differ in length");
  if (pred.size() < 5) throw Error(Errc::TooFewSamples, "metrics need at least 5 samples");
  MetricsReport r;
  r.n = pred.size();
  r.srcc = spearman(pred, mos);
  r.krcc = kendall_tau_b(pred, mos);
  r.logistic = fit_logistic(pred, mos);
  std::vector<double> mapped(pred.size());
  double se = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mapped[i] = logistic_map(r.logistic.beta, pred[i]);
    se += (mapped[i] - mos[i]) * (mapped[i] - mos[i]);
  }
  r.plcc = pearson(mapped, mos);
  r.rmse = std::sqrt(se / static_cast<double>(pred.size()));
  return r;
}

FoldPlan make_folds(const DatasetManifest& manifest, int k, std::optional<std::uint64_t> shuffle_seed) {
  if (k < 1) throw Error(Errc::InvalidConfig, "fold count must be >= 1");
  std::set<std::string> distinct;
  for (const auto& e : manifest.entries) distinct.insert(e.content_id);
  if (static_cast<int>(distinct.size()) < k) {
    throw Error(Errc::TooFewGroups, std::to_string(distinct.size()) + " content groups cannot fill " +
                                        std::to_string(k) + " folds");
  }
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  if (shuffle_seed) {
    Rng rng(derive_seed(*shuffle_seed, "folds"));
    rng.shuffle(std::span<std::string>(ids));
  }
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(static_cast<std::size_t>(k));
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int f = static_cast<int>(i % static_cast<std::size_t>(k));
    plan.folds[f].push_back(ids[i]);
    fold_of[ids[i]] = f;
  }
  plan.train.resize(static_cast<std::size_t>(k));
  plan.test.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const int owner = fold_of.at(manifest.entries[i].content_id);
    for (int f = 0; f < k; ++f) (f == owner ? plan.test : plan.train)[f].push_back(i);
  }
  return plan;
}

DatasetManifest subset(const DatasetManifest& manifest, std::span<const std::size_t> indices) {
  DatasetManifest out;
  out.base_dir = manifest.base_dir;
  out.entries.reserve(indices.size());
  for (auto i : indices) out.entries.push_back(manifest.entries.at(i));
  return out;
}

std::vector<double> OracleModel::predict(const DatasetManifest& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& e : data.entries) out.push_back(sign_ * e.mos);
  return out;
}

MeanMetrics mean_of(std::span<const MetricsReport> reports) {
  MeanMetrics m;
  m.folds = reports.size();
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.srcc += r.srcc;
    m.plcc += r.plcc;
    m.krcc += r.krcc;
    m.rmse += r.rmse;
  }
  const auto n = static_cast<double>(reports.size());
  m.srcc /= n;
  m.plcc /= n;
  m.krcc /= n;
  m.rmse /= n;
  return m;
}

namespace {

std::vector<double> labels_of(const DatasetManifest& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& e : m.entries) out.push_back(e.mos);
  return out;
}

}  // namespace

CrossValidationReport run_cross_validation(const DatasetManifest& manifest, int k, const ModelFactory& factory,
                                           int threads, std::optional<std::uint64_t> shuffle_seed) {
  if (k < 2) throw Error(Errc::InvalidConfig, "cross validation needs k >= 2");
  CrossValidationReport report;
  report.plan = make_folds(manifest, k, shuffle_seed);
  report.folds.resize(static_cast<std::size_t>(k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));

  auto run_fold = [&](int f) {
    try {
      const DatasetManifest train_set = subset(manifest, report.plan.train[f]);
      const DatasetManifest test_set = subset(manifest, report.plan.test[f]);
      require_trainable(train_set);
      auto model = factory(f);
      model->fit(train_set);
      const auto pred = model->predict(test_set);
      report.folds[f] = compute_metrics(pred, labels_of(test_set));
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  if (threads <= 1) {
    for (int f = 0; f < k; ++f) run_fold(f);
  } else {
    std::vector<std::jthread> pool;
    const int n = std::min(threads, k);
    for (int t = 0; t < n; ++t) {
      pool.emplace_back([&, t] {
        for (int f = t; f < k; f += n) run_fold(f);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.mean = mean_of(report.folds);
  return report;
}

CrossValidationReport run_cross_database(const DatasetManifest& train_set, const DatasetManifest& test_set,
                                         int test_k, const ModelFactory& factory) {
  require_trainable(train_set);
  CrossValidationReport report;
  report.plan = make_folds(test_set, test_k);
  auto model = factory(0);
  model->fit(train_set);
  for (int f = 0; f < test_k; ++f) {
    const DatasetManifest part = subset(test_set, report.plan.test[f]);
    report.folds.push_back(compute_metrics(model->predict(part), labels_of(part)));
  }
  report.mean = mean_of(report.folds);
  return report;
}

}  // namespace gms
