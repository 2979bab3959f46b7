#include "shiftsel/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "shiftsel/kernels.hpp"
#include "shiftsel/optim.hpp"

namespace shiftsel {

namespace {

constexpr std::array<std::string_view, kNumAlgorithms> kNames{"ERM", "GroupDRO", "Oversample",
                                                              "Undersample", "LogitAdjust"};

// exp() argument cap for the DRO update.
constexpr double kMaxExponent = 700.0;

}  // namespace

std::string_view algorithm_name(AlgorithmId id) { return kNames[static_cast<std::size_t>(id)]; }

AlgorithmId parse_algorithm(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<AlgorithmId>(i);
  }
  throw Error(ErrorKind::kParse, "unknown algorithm '" + std::string(name) + "'");
}

std::vector<std::string> algorithm_names() { return {kNames.begin(), kNames.end()}; }

double LinearModel::score(std::span<const double> x) const {
  if (x.size() != w.size()) throw Error(ErrorKind::kInvalidArgument, "LinearModel::score: dimension mismatch");
  double s = b;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::kInvalidArgument, "train config: epochs must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "train config: lr must be > 0");
  if (weight_decay < 0.0) throw Error(ErrorKind::kInvalidArgument, "train config: weight_decay must be >= 0");
  if (!(dro_eta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "train config: dro_eta must be > 0");
  if (tau < 0.0) throw Error(ErrorKind::kInvalidArgument, "train config: tau must be >= 0");
}

Split resample_groups(const Split& train, ResampleMode mode, Rng& rng) {
  const auto members = group_indices(train);
  std::size_t largest = 0;
  std::size_t smallest = train.size();
  for (const auto& m : members) {
    largest = std::max(largest, m.size());
    smallest = std::min(smallest, m.size());
  }
  if (mode == ResampleMode::kUnder && smallest == 0) {
    throw Error(ErrorKind::kDegenerateInput, "undersampling: a training group is empty");
  }
  if (largest == 0) throw Error(ErrorKind::kDegenerateInput, "resampling: empty training set");

  Split out;
  out.dim = train.dim;
  for (const auto& m : members) {
    if (m.empty()) continue;
    if (mode == ResampleMode::kOver) {
      for (auto i : m) out.append_row(train, i);
      std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
      for (std::size_t k = m.size(); k < largest; ++k) out.append_row(train, m[pick(rng)]);
    } else {
      std::vector<std::size_t> chosen;
      chosen.reserve(smallest);
      std::sample(m.begin(), m.end(), std::back_inserter(chosen), smallest, rng);
      for (auto i : chosen) out.append_row(train, i);
    }
  }
  return out;
}

GroupVector dro_weight_update(const GroupVector& q, const GroupVector& group_losses, double eta) {
  GroupVector logits{};
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    logits[g] = (q[g] > 0.0) ? std::log(q[g]) + std::clamp(eta * group_losses[g], -kMaxExponent, kMaxExponent)
                             : -std::numeric_limits<double>::infinity();
    top = std::max(top, logits[g]);
  }
  GroupVector out{};
  double z = 0.0;
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    out[g] = std::isfinite(logits[g]) ? std::exp(logits[g] - top) : 0.0;
    z += out[g];
  }
  for (auto& v : out) v /= z;
  return out;
}

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit_offset(double group_prior, double tau) {
  if (!(group_prior > 0.0) || group_prior > 1.0) {
    throw Error(ErrorKind::kDegenerateInput, "logit adjustment: group prior must lie in (0, 1]");
  }
  return -tau * std::log(group_prior);
}

double adjusted_logistic_loss(double margin, double group_prior, double tau) {
  return softplus(-margin + logit_offset(group_prior, tau));
}

GroupVector group_priors(const Split& train) {
  if (train.size() == 0) throw Error(ErrorKind::kDegenerateInput, "group priors of an empty training set");
  const auto hist = group_histogram(train);
  const double n = static_cast<double>(train.size());
  GroupVector out{};
  for (int g = 0; g < kNumGroups; ++g) {
    out[static_cast<std::size_t>(g)] = std::max(static_cast<double>(hist[g]) / n, 1.0 / (2.0 * n));
  }
  return out;
}

namespace {

// Per-sample loss and d(loss)/d(score) for the current parameters.
struct MarginPass {
  std::vector<double> scores;
  std::vector<double> loss;
  std::vector<double> dscore;
};

void margin_pass(const Split& data, const LinearModel& model, std::span<const double> offsets, MarginPass& pass) {
  const std::size_t n = data.size();
  pass.scores.resize(n);
  pass.loss.resize(n);
  pass.dscore.resize(n);
  kernels::affine(data.x, n, data.dim, model.w, model.b, pass.scores);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = data.y[i];
    double z = -y * pass.scores[i];
    if (!offsets.empty()) z += offsets[i];
    pass.loss[i] = softplus(z);
    pass.dscore[i] = -y * sigmoid(z);
  }
}

// Gradient of sum_i weight_i * loss_i (no weight decay).
void data_gradient(const Split& data, const MarginPass& pass, std::span<const double> weights,
                   std::vector<double>& coeff, std::vector<double>& grad_w, double& grad_b) {
  const std::size_t n = data.size();
  coeff.resize(n);
  grad_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    coeff[i] = weights[i] * pass.dscore[i];
    grad_b += coeff[i];
  }
  grad_w.resize(data.dim);
  kernels::weighted_column_sum(data.x, n, data.dim, coeff, grad_w);
}

double l2_penalty(const LinearModel& model, double weight_decay) {
  double s = model.b * model.b;
  for (double v : model.w) s += v * v;
  return 0.5 * weight_decay * s;
}

std::vector<double> logit_offsets(const Split& data, double tau) {
  const auto priors = group_priors(data);
  GroupVector per_group{};
  for (std::size_t g = 0; g < kNumGroups; ++g) per_group[g] = logit_offset(priors[g], tau);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = per_group[static_cast<std::size_t>(data.group(i))];
  return out;
}

void check_finite(double loss, AlgorithmId algorithm, int epoch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::kDivergence, std::string(algorithm_name(algorithm)) + ": non-finite loss at epoch " +
                                            std::to_string(epoch) + "; try a lower learning rate");
  }
}

// Full-batch descent on a fixed weighted objective (ERM, resampled ERM,
// logit adjustment).
TrainResult fit_weighted(AlgorithmId algorithm, const Split& data, const TrainConfig& config,
                         std::span<const double> offsets) {
  const std::size_t n = data.size();
  const std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  TrainResult result;
  result.model.w.assign(data.dim, 0.0);
  std::vector<double> params(data.dim + 1, 0.0);
  Adam adam(params.size(), AdamConfig{config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  MarginPass pass;
  std::vector<double> coeff, grad_w, grad(params.size());
  double grad_b = 0.0;
  result.loss_trace.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    margin_pass(data, result.model, offsets, pass);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += weights[i] * pass.loss[i];
    loss += l2_penalty(result.model, config.weight_decay);
    check_finite(loss, algorithm, epoch);
    result.loss_trace.push_back(loss);
    data_gradient(data, pass, weights, coeff, grad_w, grad_b);
    std::copy(grad_w.begin(), grad_w.end(), grad.begin());
    grad.back() = grad_b;
    adam.step(params, grad);
    std::copy(params.begin(), params.end() - 1, result.model.w.begin());
    result.model.b = params.back();
  }
  margin_pass(data, result.model, offsets, pass);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += weights[i] * pass.loss[i];
  result.final_loss = loss + l2_penalty(result.model, config.weight_decay);
  check_finite(result.final_loss, algorithm, config.epochs);
  return result;
}

TrainResult fit_group_dro(const Split& data, const TrainConfig& config) {
  const std::size_t n = data.size();
  const auto hist = group_histogram(data);
  std::vector<int> group_of(n);
  for (std::size_t i = 0; i < n; ++i) group_of[i] = data.group(i);

  GroupVector q{};
  int nonempty = 0;
  for (int g = 0; g < kNumGroups; ++g) nonempty += hist[g] > 0 ? 1 : 0;
  for (int g = 0; g < kNumGroups; ++g) q[static_cast<std::size_t>(g)] = hist[g] > 0 ? 1.0 / nonempty : 0.0;

  TrainResult result;
  result.model.w.assign(data.dim, 0.0);
  std::vector<double> params(data.dim + 1, 0.0);
  Adam adam(params.size(), AdamConfig{config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  MarginPass pass;
  std::vector<double> weights(n), coeff, grad_w, grad(params.size());
  double grad_b = 0.0;

  auto group_losses = [&](const MarginPass& p) {
    GroupVector sums{};
    for (std::size_t i = 0; i < n; ++i) sums[static_cast<std::size_t>(group_of[i])] += p.loss[i];
    for (int g = 0; g < kNumGroups; ++g) {
      if (hist[g] > 0) sums[static_cast<std::size_t>(g)] /= static_cast<double>(hist[g]);
    }
    return sums;
  };
  auto robust_loss = [&](const GroupVector& losses) {
    double s = 0.0;
    for (std::size_t g = 0; g < kNumGroups; ++g) s += q[g] * losses[g];
    return s + l2_penalty(result.model, config.weight_decay);
  };

  result.loss_trace.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    margin_pass(data, result.model, {}, pass);
    const GroupVector losses = group_losses(pass);
    q = dro_weight_update(q, losses, config.dro_eta);
    const double loss = robust_loss(losses);
    check_finite(loss, AlgorithmId::kGroupDRO, epoch);
    result.loss_trace.push_back(loss);
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = static_cast<std::size_t>(group_of[i]);
      weights[i] = q[g] / static_cast<double>(hist[static_cast<int>(g)]);
    }
    data_gradient(data, pass, weights, coeff, grad_w, grad_b);
    std::copy(grad_w.begin(), grad_w.end(), grad.begin());
    grad.back() = grad_b;
    adam.step(params, grad);
    std::copy(params.begin(), params.end() - 1, result.model.w.begin());
    result.model.b = params.back();
  }
  margin_pass(data, result.model, {}, pass);
  result.final_loss = robust_loss(group_losses(pass));
  check_finite(result.final_loss, AlgorithmId::kGroupDRO, config.epochs);
  result.dro_weights = q;
  return result;
}

}  // namespace

LossGrad logistic_objective(const Split& data, const LinearModel& model, std::span<const double> weights,
                            std::span<const double> offsets, double weight_decay) {
  if (weights.size() != data.size()) throw Error(ErrorKind::kInvalidArgument, "logistic_objective: weight count");
  if (!offsets.empty() && offsets.size() != data.size()) {
    throw Error(ErrorKind::kInvalidArgument, "logistic_objective: offset count");
  }
  MarginPass pass;
  margin_pass(data, model, offsets, pass);
  LossGrad out;
  for (std::size_t i = 0; i < data.size(); ++i) out.loss += weights[i] * pass.loss[i];
  out.loss += l2_penalty(model, weight_decay);
  std::vector<double> coeff;
  data_gradient(data, pass, weights, coeff, out.grad_w, out.grad_b);
  for (std::size_t j = 0; j < out.grad_w.size(); ++j) out.grad_w[j] += weight_decay * model.w[j];
  out.grad_b += weight_decay * model.b;
  return out;
}

TrainResult train_model(AlgorithmId algorithm, const Split& train, const TrainConfig& config,
                        std::uint64_t seed) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorKind::kDegenerateInput, "train_model: empty training split");
  Rng rng(seed);
  switch (algorithm) {
    case AlgorithmId::kERM:
      return fit_weighted(algorithm, train, config, {});
    case AlgorithmId::kGroupDRO:
      return fit_group_dro(train, config);
    case AlgorithmId::kOversample:
      return fit_weighted(algorithm, resample_groups(train, ResampleMode::kOver, rng), config, {});
    case AlgorithmId::kUndersample:
      return fit_weighted(algorithm, resample_groups(train, ResampleMode::kUnder, rng), config, {});
    case AlgorithmId::kLogitAdjust: {
      const auto offsets = logit_offsets(train, config.tau);
      return fit_weighted(algorithm, train, config, offsets);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "train_model: unknown algorithm");
}

double GroupErrors::worst() const { return *std::max_element(per_group.begin(), per_group.end()); }

double GroupErrors::average() const {
  return std::accumulate(per_group.begin(), per_group.end(), 0.0) / static_cast<double>(kNumGroups);
}

UniformEnsemble::UniformEnsemble(std::vector<LinearModel> members) : members_(std::move(members)) {
  if (members_.size() < 2) throw Error(ErrorKind::kInvalidArgument, "ensemble needs at least two models");
  for (const auto& m : members_) {
    if (m.w.size() != members_.front().w.size()) {
      throw Error(ErrorKind::kInvalidArgument, "ensemble members have different dimensions");
    }
  }
}

double UniformEnsemble::score(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& m : members_) s += m.score(x);
  return s / static_cast<double>(members_.size());
}

}  // namespace shiftsel
