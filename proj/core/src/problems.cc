/*
 * Copyright 2026 The fedlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fedlab/problems.h"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

namespace fedlab {
namespace {

using detail::ProblemModel;

void check_index(const ProblemModel& m, std::size_t i, std::size_t j) {
  if (i >= m.counts.size())
    throw InvalidArgument("problem: client index " + std::to_string(i) +
                          " out of range");
  if (j >= m.counts[i])
    throw InvalidArgument("problem: component index " + std::to_string(j) +
                          " out of range for client " + std::to_string(i));
}

void check_point(const ProblemModel& m, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != m.dim)
    throw InvalidArgument("problem: point has dimension " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(m.dim));
}

std::vector<double> weights_from_counts(const std::vector<std::size_t>& counts) {
  const double total =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(counts[i]) / total;
  return w;
}

double symmetric_max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

double symmetric_min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// log(1 + exp(-z))
double softplus_neg(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

// 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

class AnchorModel final : public ProblemModel {
 public:
  double component_value(std::size_t i, std::size_t, const Vector& x) const override {
    Vector diff = x;
    diff[i] -= 1.0;
    return diff.squaredNorm();
  }
  Vector component_grad(std::size_t i, std::size_t, const Vector& x) const override {
    Vector g = 2.0 * x;
    g[i] -= 2.0;
    return g;
  }
  double client_value(std::size_t i, const Vector& x) const override {
    return component_value(i, 0, x);
  }
  Vector client_grad(std::size_t i, const Vector& x) const override {
    return component_grad(i, 0, x);
  }
};

class CounterexampleModel final : public ProblemModel {
 public:
  std::vector<Vector> a;

  double component_value(std::size_t i, std::size_t, const Vector& x) const override {
    const double inner = a[i].dot(x);
    return inner * inner + 0.25 * x.squaredNorm();
  }
  Vector component_grad(std::size_t i, std::size_t, const Vector& x) const override {
    return 2.0 * a[i].dot(x) * a[i] + 0.5 * x;
  }
};

class LogisticModel final : public ProblemModel {
 public:
  std::vector<Matrix> features;
  std::vector<Vector> labels;
  double lambda2 = 0.0;

  double component_value(std::size_t i, std::size_t j, const Vector& x) const override {
    const double z = labels[i][j] * features[i].row(j).dot(x);
    return softplus_neg(z) + 0.5 * lambda2 * x.squaredNorm();
  }
  Vector component_grad(std::size_t i, std::size_t j, const Vector& x) const override {
    const double z = labels[i][j] * features[i].row(j).dot(x);
    return -labels[i][j] * sigmoid_neg(z) * features[i].row(j).transpose() +
           lambda2 * x;
  }
  Vector client_grad(std::size_t i, const Vector& x) const override {
    const Vector z = labels[i].cwiseProduct(features[i] * x);
    Vector coeff(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j)
      coeff[j] = -labels[i][j] * sigmoid_neg(z[j]);
    return features[i].transpose() * coeff / static_cast<double>(z.size()) +
           lambda2 * x;
  }

  Matrix hessian(const Vector& x) const {
    Matrix h = lambda2 * Matrix::Identity(dim, dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const Vector z = labels[i].cwiseProduct(features[i] * x);
      Vector curvature(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double s = sigmoid_neg(z[j]);
        curvature[j] = s * (1.0 - s);
      }
      h += weights[i] / static_cast<double>(z.size()) *
           (features[i].transpose() * curvature.asDiagonal() * features[i]);
    }
    return h;
  }
};

class LeastSquaresModel final : public ProblemModel {
 public:
  Matrix a;
  std::vector<Matrix> targets;  // one row per component

  double component_value(std::size_t i, std::size_t j, const Vector& x) const override {
    return 0.5 * x.dot(a * x) - targets[i].row(j).dot(x);
  }
  Vector component_grad(std::size_t i, std::size_t j, const Vector& x) const override {
    return a * x - targets[i].row(j).transpose();
  }
};

Vector full_gradient(const ProblemModel& m, const Vector& x) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(m.dim));
  for (std::size_t i = 0; i < m.counts.size(); ++i)
    g += m.weights[i] * m.client_grad(i, x);
  return g;
}

double full_value(const ProblemModel& m, const Vector& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < m.counts.size(); ++i)
    v += m.weights[i] * m.client_value(i, x);
  return v;
}

Vector solve_logistic(const LogisticModel& m) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(m.dim));
  if (m.reg.kind == Regularizer::Kind::kNone) {
    for (int iter = 0; iter < 100; ++iter) {
      const Vector g = full_gradient(m, x);
      if (g.norm() < 1e-15) break;
      const Vector step = m.hessian(x).ldlt().solve(g);
      double t = 1.0;
      const double f0 = full_value(m, x);
      while (t > 1e-10 && full_value(m, x - t * step) > f0 - 0.25 * t * g.dot(step))
        t *= 0.5;
      x -= t * step;
      if ((t * step).norm() < 1e-16 * (1.0 + x.norm())) break;
    }
    return x;
  }
  // Accelerated proximal gradient.
  const double step = 1.0 / m.smoothness.L_f;
  Vector y = x;
  double t = 1.0;
  for (int iter = 0; iter < 200000; ++iter) {
    const Vector next = prox(m.reg, step, y - step * full_gradient(m, y));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    const double change = (next - x).norm();
    x = next;
    t = t_next;
    if (change < 1e-16 && iter > 10) break;
  }
  // Unaccelerated polish.
  for (int iter = 0; iter < 20000; ++iter) {
    const Vector next = prox(m.reg, step, x - step * full_gradient(m, x));
    const double change = (next - x).norm();
    x = next;
    if (change == 0.0) break;
  }
  return x;
}

void finalize_optimum(ProblemModel& m) {
  if (m.optimum) m.optimal_value = full_value(m, *m.optimum) + m.reg.value(*m.optimum);
}

}  // namespace

Regularizer Regularizer::l1(double lambda) {
  require(lambda >= 0.0, "l1 regularizer: lambda must be >= 0");
  return {Kind::kL1, lambda};
}

double Regularizer::value(const Vector& x) const {
  return kind == Kind::kL1 ? lambda * x.lpNorm<1>() : 0.0;
}

Vector prox(const Regularizer& reg, double gamma, const Vector& x) {
  require(gamma > 0.0, "prox: gamma must be positive");
  if (reg.kind == Regularizer::Kind::kNone) return x;
  const double t = gamma * reg.lambda;
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) - t;
    out[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
  return out;
}

Partition Partition::equal(std::size_t samples, std::size_t clients) {
  require(clients >= 1, "partition: clients must be >= 1");
  require(samples >= clients, "partition: fewer samples than clients");
  Partition p;
  p.counts.assign(clients, samples / clients);
  for (std::size_t i = 0; i < samples % clients; ++i) ++p.counts[i];
  return p;
}

Partition Partition::explicit_counts(std::vector<std::size_t> counts) {
  require(!counts.empty(), "partition: no clients");
  for (std::size_t c : counts) require(c >= 1, "partition: empty client");
  return Partition{std::move(counts)};
}

std::size_t Partition::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InvalidArgument(path + ":" + std::to_string(line_no) +
                              ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(path + ":" + std::to_string(line_no) +
                            ": inconsistent column count");
    if (row.size() < 2)
      throw InvalidArgument(path + ":" + std::to_string(line_no) +
                            ": need at least one feature and a label");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path + ": no samples");
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  data.features.resize(n, d);
  data.labels.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) data.features(r, c) = rows[r][c];
    data.labels[r] = rows[r][d];
  }
  return data;
}

double detail::ProblemModel::client_value(std::size_t i, const Vector& x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < counts[i]; ++j) v += component_value(i, j, x);
  return v / static_cast<double>(counts[i]);
}

Vector detail::ProblemModel::client_grad(std::size_t i, const Vector& x) const {
  Vector g = Vector::Zero(x.size());
  for (std::size_t j = 0; j < counts[i]; ++j) g += component_grad(i, j, x);
  return g / static_cast<double>(counts[i]);
}

FiniteSumProblem::FiniteSumProblem(std::shared_ptr<const ProblemModel> model)
    : model_(std::move(model)) {
  require(model_ != nullptr, "problem: null model");
}

ProblemKind FiniteSumProblem::kind() const { return model_->kind; }
std::string FiniteSumProblem::describe() const { return model_->description; }
std::size_t FiniteSumProblem::clients() const { return model_->counts.size(); }
std::size_t FiniteSumProblem::dim() const { return model_->dim; }

std::size_t FiniteSumProblem::components(std::size_t client) const {
  check_index(*model_, client, 0);
  return model_->counts[client];
}

std::span<const double> FiniteSumProblem::weights() const {
  return model_->weights;
}

const Regularizer& FiniteSumProblem::regularizer() const { return model_->reg; }
SmoothnessInfo FiniteSumProblem::smoothness() const { return model_->smoothness; }

const std::optional<Vector>& FiniteSumProblem::optimum() const {
  return model_->optimum;
}

const std::optional<Vector>& FiniteSumProblem::inconsistent_point() const {
  return model_->inconsistent_point;
}

std::optional<double> FiniteSumProblem::optimal_value() const {
  return model_->optimal_value;
}

double FiniteSumProblem::component_value(std::size_t client, std::size_t j,
                                         const Vector& x) const {
  check_index(*model_, client, j);
  check_point(*model_, x);
  return model_->component_value(client, j, x);
}

double FiniteSumProblem::client_value(std::size_t client, const Vector& x) const {
  check_index(*model_, client, 0);
  check_point(*model_, x);
  return model_->client_value(client, x);
}

double FiniteSumProblem::value(const Vector& x) const {
  check_point(*model_, x);
  return full_value(*model_, x);
}

double FiniteSumProblem::objective(const Vector& x) const {
  return value(x) + model_->reg.value(x);
}

Vector FiniteSumProblem::grad(std::size_t client, std::size_t j,
                              const Vector& x) const {
  check_index(*model_, client, j);
  check_point(*model_, x);
  return model_->component_grad(client, j, x);
}

Vector FiniteSumProblem::grad_client(std::size_t client, const Vector& x) const {
  check_index(*model_, client, 0);
  check_point(*model_, x);
  return model_->client_grad(client, x);
}

Vector FiniteSumProblem::grad_full(const Vector& x) const {
  check_point(*model_, x);
  return full_gradient(*model_, x);
}

Vector FiniteSumProblem::stochastic_grad(std::size_t client, const Vector& x,
                                         RandomStream& rng,
                                         std::size_t batch) const {
  check_index(*model_, client, 0);
  check_point(*model_, x);
  require(batch >= 1, "stochastic_grad: batch must be >= 1");
  Vector g = Vector::Zero(x.size());
  for (std::size_t b = 0; b < batch; ++b)
    g += model_->component_grad(client, rng.below(model_->counts[client]), x);
  return g / static_cast<double>(batch);
}

FiniteSumProblem quadratic_anchors(std::span<const std::size_t> counts,
                                   std::size_t d) {
  require(!counts.empty(), "quadratic_anchors: no clients");
  require(d >= counts.size(), "quadratic_anchors: need d >= n");
  auto m = std::make_shared<AnchorModel>();
  m->kind = ProblemKind::kQuadraticAnchors;
  m->dim = d;
  m->counts.assign(counts.begin(), counts.end());
  for (std::size_t c : m->counts) require(c >= 1, "quadratic_anchors: empty client");
  m->weights = weights_from_counts(m->counts);
  m->smoothness = {2.0, 2.0, 2.0};
  Vector opt = Vector::Zero(static_cast<Eigen::Index>(d));
  Vector tilde = Vector::Zero(static_cast<Eigen::Index>(d));
  double sq = 0.0;
  for (std::size_t i = 0; i < m->counts.size(); ++i) {
    const double c = static_cast<double>(m->counts[i]);
    opt[i] = m->weights[i];
    tilde[i] = c * c;
    sq += c * c;
  }
  m->optimum = opt;
  m->inconsistent_point = tilde / sq;
  std::ostringstream desc;
  desc << "quadratic_anchors(n=" << counts.size() << ",d=" << d << ")";
  m->description = desc.str();
  finalize_optimum(*m);
  return FiniteSumProblem(std::move(m));
}

FiniteSumProblem counterexample_problem() {
  auto m = std::make_shared<CounterexampleModel>();
  m->kind = ProblemKind::kCounterexample;
  m->dim = 3;
  m->counts = {1, 1, 1};
  m->weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  m->a = {Vector{{-3.0, 2.0, 2.0}}, Vector{{2.0, -3.0, 2.0}},
          Vector{{2.0, 2.0, -3.0}}};
  Matrix hessian = 0.5 * Matrix::Identity(3, 3);
  double component_l = 0.0;
  for (const auto& a : m->a) {
    hessian += (2.0 / 3.0) * a * a.transpose();
    component_l = std::max(component_l, 2.0 * a.squaredNorm() + 0.5);
  }
  m->smoothness.L = component_l;
  m->smoothness.L_f = symmetric_max_eigenvalue(hessian);
  m->smoothness.mu = symmetric_min_eigenvalue(hessian);
  m->optimum = Vector::Zero(3);
  m->description = "counterexample";
  finalize_optimum(*m);
  return FiniteSumProblem(std::move(m));
}

FiniteSumProblem logistic_regression(const Matrix& features,
                                     const Vector& labels, double lambda2,
                                     const Partition& partition,
                                     Regularizer reg) {
  require(features.rows() == labels.size(),
          "logistic_regression: features have " +
              std::to_string(features.rows()) + " rows but labels have " +
              std::to_string(labels.size()) + " entries");
  require(features.cols() >= 1, "logistic_regression: no features");
  require(lambda2 >= 0.0, "logistic_regression: lambda2 must be >= 0");
  require(partition.total() == static_cast<std::size_t>(labels.size()),
          "logistic_regression: partition does not cover the dataset");
  for (Eigen::Index r = 0; r < labels.size(); ++r)
    require(labels[r] == 1.0 || labels[r] == -1.0,
            "logistic_regression: labels must be +1 or -1");
  require(features.allFinite(), "logistic_regression: non-finite feature");
  require(reg.kind == Regularizer::Kind::kNone || lambda2 > 0.0 ||
              reg.lambda >= 0.0,
          "logistic_regression: invalid regularizer");

  auto m = std::make_shared<LogisticModel>();
  m->kind = ProblemKind::kLogistic;
  m->dim = static_cast<std::size_t>(features.cols());
  m->counts = partition.counts;
  m->weights = weights_from_counts(m->counts);
  m->lambda2 = lambda2;
  m->reg = reg;
  Eigen::Index row = 0;
  double max_row_sq = 0.0;
  for (std::size_t c : m->counts) {
    const auto rows = static_cast<Eigen::Index>(c);
    m->features.push_back(features.middleRows(row, rows));
    m->labels.push_back(labels.segment(row, rows));
    row += rows;
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    max_row_sq = std::max(max_row_sq, features.row(r).squaredNorm());
  Matrix gram = Matrix::Zero(features.cols(), features.cols());
  for (std::size_t i = 0; i < m->counts.size(); ++i)
    gram += m->weights[i] / static_cast<double>(m->counts[i]) *
            (m->features[i].transpose() * m->features[i]);
  m->smoothness.L = lambda2 + max_row_sq / 4.0;
  m->smoothness.L_f = lambda2 + symmetric_max_eigenvalue(gram) / 4.0;
  m->smoothness.mu = lambda2;
  std::ostringstream desc;
  desc << "logistic(n=" << m->counts.size() << ",N=" << labels.size()
       << ",d=" << m->dim << ",lambda2=" << lambda2 << ")";
  m->description = desc.str();
  if (lambda2 > 0.0) {
    m->optimum = solve_logistic(*m);
    finalize_optimum(*m);
  }
  return FiniteSumProblem(std::move(m));
}

FiniteSumProblem synthetic_logistic(const SyntheticLogisticOptions& options) {
  require(options.clients >= 1 && options.samples_per_client >= 1 &&
              options.dim >= 1,
          "synthetic_logistic: sizes must be positive");
  const auto d = static_cast<Eigen::Index>(options.dim);
  const std::size_t total = options.clients * options.samples_per_client;
  Matrix features(static_cast<Eigen::Index>(total), d);
  Vector labels(static_cast<Eigen::Index>(total));
  RandomStream base = make_stream(options.seed, Purpose::kDataGeneration);
  Vector shared(d);
  for (Eigen::Index k = 0; k < d; ++k) shared[k] = base.normal();
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < options.clients; ++i) {
    RandomStream rng = make_stream(options.seed, Purpose::kDataGeneration, 0, i + 1);
    Vector model = shared;
    for (Eigen::Index k = 0; k < d; ++k)
      model[k] += options.heterogeneity * rng.normal();
    for (std::size_t j = 0; j < options.samples_per_client; ++j, ++row) {
      Vector a(d);
      for (Eigen::Index k = 0; k < d; ++k) a[k] = rng.normal();
      a /= a.norm();
      features.row(row) = a.transpose();
      const double p_plus = 1.0 / (1.0 + std::exp(-3.0 * a.dot(model)));
      labels[row] = rng.uniform() < p_plus ? 1.0 : -1.0;
    }
  }
  return logistic_regression(
      features, labels, options.lambda2,
      Partition::equal(total, options.clients), options.reg);
}

FiniteSumProblem least_squares(const LeastSquaresOptions& options) {
  require(options.clients >= 1 && options.samples_per_client >= 1 &&
              options.dim >= 1,
          "least_squares: sizes must be positive");
  require(options.condition >= 1.0, "least_squares: condition must be >= 1");
  const auto d = static_cast<Eigen::Index>(options.dim);
  RandomStream rng = make_stream(options.seed, Purpose::kDataGeneration);
  Matrix gauss(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) gauss(r, c) = rng.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  Vector eig(d);
  for (Eigen::Index k = 0; k < d; ++k)
    eig[k] = d == 1 ? 1.0
                    : std::pow(options.condition,
                               static_cast<double>(k) / static_cast<double>(d - 1));
  auto m = std::make_shared<LeastSquaresModel>();
  m->kind = ProblemKind::kLeastSquares;
  m->dim = options.dim;
  m->counts.assign(options.clients, options.samples_per_client);
  m->weights = weights_from_counts(m->counts);
  m->a = q * eig.asDiagonal() * q.transpose();
  m->a = 0.5 * (m->a + m->a.transpose()).eval();
  Vector mean_target = Vector::Zero(d);
  for (std::size_t i = 0; i < options.clients; ++i) {
    Matrix y(static_cast<Eigen::Index>(options.samples_per_client), d);
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      for (Eigen::Index c = 0; c < d; ++c) y(r, c) = rng.normal();
    mean_target += m->weights[i] * y.colwise().mean().transpose();
    m->targets.push_back(std::move(y));
  }
  m->smoothness.L = symmetric_max_eigenvalue(m->a);
  m->smoothness.L_f = m->smoothness.L;
  m->smoothness.mu = symmetric_min_eigenvalue(m->a);
  m->optimum = m->a.ldlt().solve(mean_target);
  std::ostringstream desc;
  desc << "least_squares(n=" << options.clients << ",d=" << options.dim
       << ",condition=" << options.condition << ")";
  m->description = desc.str();
  finalize_optimum(*m);
  return FiniteSumProblem(std::move(m));
}

std::vector<std::size_t> permute_epoch(const FiniteSumProblem& problem,
                                       std::size_t client, RandomStream& rng) {
  const std::size_t count = problem.components(client);
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = count; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

HeterogeneityEstimate estimate_heterogeneity(const FiniteSumProblem& problem,
                                             std::span<const Vector> points) {
  HeterogeneityEstimate out;
  const auto w = problem.weights();
  auto dissimilarity = [&](const Vector& x) {
    const Vector g = problem.grad_full(x);
    double total = 0.0;
    for (std::size_t i = 0; i < problem.clients(); ++i)
      total += w[i] * (problem.grad_client(i, x) - g).squaredNorm();
    return total;
  };
  for (const auto& x : points)
    out.max_dissimilarity = std::max(out.max_dissimilarity, dissimilarity(x));
  if (problem.optimum()) {
    double total = 0.0;
    for (std::size_t i = 0; i < problem.clients(); ++i)
      total += w[i] * problem.grad_client(i, *problem.optimum()).squaredNorm();
    out.at_optimum = total;
  }
  return out;
}

}  // namespace fedlab
