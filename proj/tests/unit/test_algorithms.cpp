#include <cmath>
#include <numeric>

#include "doctest.h"
#include "shiftsel/algorithms.hpp"
#include "shiftsel/error.hpp"

using namespace shiftsel;

namespace {

// Group g gets `counts[g]` rows; feature 0 carries the label, feature 1 the
// attribute, both with small deterministic jitter.
Split make_split(const std::array<int, kNumGroups>& counts, double jitter = 0.3) {
  Split s;
  s.dim = 2;
  Rng rng(42);
  for (int g = 0; g < kNumGroups; ++g) {
    for (int i = 0; i < counts[static_cast<std::size_t>(g)]; ++i) {
      const double f[] = {group_label(g) * (1.0 + jitter * uniform01(rng)),
                          group_attribute(g) * (1.0 + jitter * uniform01(rng))};
      s.push_back(f, group_label(g), group_attribute(g));
    }
  }
  return s;
}

Split make_noisy(std::size_t n, int dim, std::uint64_t seed) {
  Split s;
  s.dim = static_cast<std::size_t>(dim);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> f(s.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = (i % 2 == 0) ? 1 : -1;
    const int a = (i % 3 == 0) ? 1 : -1;
    for (auto& v : f) v = normal(rng) + 0.3 * y;
    s.push_back(f, y, a);
  }
  return s;
}

// Independent evaluation of the weighted logistic objective.
double objective_value(const Split& data, const LinearModel& m, const std::vector<double>& weights,
                       const std::vector<double>& offsets, double wd) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = m.b;
    for (std::size_t j = 0; j < data.dim; ++j) s += m.w[j] * data.row(i)[j];
    const double z = -data.y[i] * s + (offsets.empty() ? 0.0 : offsets[i]);
    total += weights[i] * std::log1p(std::exp(z));
  }
  double sq = m.b * m.b;
  for (double w : m.w) sq += w * w;
  return total + 0.5 * wd * sq;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

}  // namespace

TEST_CASE("resampling balances the group histogram") {
  const auto train = make_split({450, 50, 50, 450});
  Rng rng(1);
  const auto over = resample_groups(train, ResampleMode::kOver, rng);
  CHECK(group_histogram(over) == GroupCounts{{450, 450, 450, 450}});
  CHECK(over.size() == 4 * 450);
  const auto under = resample_groups(train, ResampleMode::kUnder, rng);
  CHECK(group_histogram(under) == GroupCounts{{50, 50, 50, 50}});
  CHECK(under.size() == 4 * 50);

  const auto balanced = make_split({30, 30, 30, 30});
  CHECK(group_histogram(resample_groups(balanced, ResampleMode::kOver, rng)) == group_histogram(balanced));
  CHECK(group_histogram(resample_groups(balanced, ResampleMode::kUnder, rng)) == group_histogram(balanced));

  const auto empty_group = make_split({10, 0, 5, 5});
  try {
    resample_groups(empty_group, ResampleMode::kUnder, rng);
    FAIL("expected a degenerate-input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateInput);
  }
}

TEST_CASE("GroupDRO weight update") {
  const GroupVector uniform{0.25, 0.25, 0.25, 0.25};
  const auto q = dro_weight_update(uniform, {std::log(2.0), 0.0, 0.0, 0.0}, 1.0);
  CHECK(q[0] == doctest::Approx(0.4));
  for (int g = 1; g < 4; ++g) CHECK(q[static_cast<std::size_t>(g)] == doctest::Approx(0.2));

  const auto same = dro_weight_update(uniform, {0.7, 0.7, 0.7, 0.7}, 5.0);
  for (std::size_t g = 0; g < 4; ++g) CHECK(same[g] == doctest::Approx(uniform[g]));

  const auto limit = dro_weight_update(uniform, {1.0, 0.0, 0.0, 0.0}, 1e6);
  CHECK(limit[0] == doctest::Approx(1.0));
  CHECK(limit[1] == doctest::Approx(0.0));

  // Repeated steps under frozen losses: stays on the simplex and concentrates.
  GroupVector w = uniform;
  const GroupVector frozen{0.3, 0.9, 0.1, 0.5};
  for (int step = 0; step < 5000; ++step) {
    w = dro_weight_update(w, frozen, 0.01);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  CHECK(w[1] > 0.99);
}

TEST_CASE("logit adjustment loss") {
  CHECK(adjusted_logistic_loss(0.7, 0.1, 0.0) == softplus(-0.7));
  // Equal priors: the same constant inside the exponent for every sample.
  for (double m : {-2.0, -0.1, 0.0, 0.5, 3.0}) {
    CHECK(adjusted_logistic_loss(m, 0.25, 1.0) == doctest::Approx(softplus(-m + std::log(4.0))));
  }
  CHECK(adjusted_logistic_loss(1.0, 0.05, 1.0) > adjusted_logistic_loss(1.0, 0.45, 1.0));
  CHECK_THROWS_AS(logit_offset(0.0, 1.0), Error);
  CHECK_THROWS_AS(logit_offset(1.5, 1.0), Error);
}

TEST_CASE("analytic gradients match central differences") {
  const auto data = make_noisy(40, 3, 5);
  Rng rng(8);
  std::normal_distribution<double> normal;
  const auto priors = group_priors(data);
  std::vector<double> weights(data.size(), 1.0 / static_cast<double>(data.size()));
  std::vector<double> offsets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    offsets[i] = logit_offset(priors[static_cast<std::size_t>(data.group(i))], 1.0);
  }
  const double wd = 1e-2;
  for (int point = 0; point < 20; ++point) {
    LinearModel m;
    m.w = {normal(rng), normal(rng), normal(rng)};
    m.b = normal(rng);
    const std::vector<double> empty;
    for (const auto* o_ptr : std::array<const std::vector<double>*, 2>{&empty, &offsets}) {
      const auto& o = *o_ptr;
      const auto g = logistic_objective(data, m, weights, o, wd);
      CHECK(g.loss == doctest::Approx(objective_value(data, m, weights, o, wd)).epsilon(1e-12));
      const double h = 1e-5;
      for (std::size_t j = 0; j <= m.w.size(); ++j) {
        LinearModel plus = m, minus = m;
        double& p = j < m.w.size() ? plus.w[j] : plus.b;
        double& q = j < m.w.size() ? minus.w[j] : minus.b;
        p += h;
        q -= h;
        const double fd =
            (objective_value(data, plus, weights, o, wd) - objective_value(data, minus, weights, o, wd)) / (2 * h);
        const double an = j < m.w.size() ? g.grad_w[j] : g.grad_b;
        CHECK(rel_err(an, fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("LogitAdjust with tau 0 reproduces ERM bit for bit") {
  const auto data = make_noisy(300, 4, 9);
  TrainConfig erm;
  erm.epochs = 200;
  TrainConfig la = erm;
  la.tau = 0.0;
  const auto a = train_model(AlgorithmId::kERM, data, erm, 3);
  const auto b = train_model(AlgorithmId::kLogitAdjust, data, la, 3);
  CHECK(a.model == b.model);
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("all algorithms separate a separable balanced task") {
  const auto data = make_split({40, 40, 40, 40});
  for (auto id : kAllAlgorithms) {
    const auto r = train_model(id, data, TrainConfig{}, 1);
    const auto errors = group_errors(r.model, data);
    CAPTURE(algorithm_name(id));
    CHECK(errors.worst() == 0.0);
  }
}

TEST_CASE("training is deterministic and settles") {
  const auto data = make_noisy(400, 5, 12);
  for (auto id : kAllAlgorithms) {
    CAPTURE(algorithm_name(id));
    const auto a = train_model(id, data, TrainConfig{}, 77);
    const auto b = train_model(id, data, TrainConfig{}, 77);
    CHECK(a.model == b.model);
    REQUIRE(a.loss_trace.size() == 1000);
    if (id == AlgorithmId::kGroupDRO) continue;  // objective weights move with q
    for (std::size_t e = 901; e < a.loss_trace.size(); ++e) CHECK(a.loss_trace[e] <= a.loss_trace[e - 1] + 1e-3);
  }
}

TEST_CASE("GroupDRO reports weights on the simplex") {
  const auto data = make_split({200, 20, 20, 200}, 2.0);
  const auto r = train_model(AlgorithmId::kGroupDRO, data, TrainConfig{}, 4);
  CHECK(std::accumulate(r.dro_weights.begin(), r.dro_weights.end(), 0.0) == doctest::Approx(1.0));
  for (double q : r.dro_weights) CHECK(q >= 0.0);
}

TEST_CASE("divergence is reported with a learning-rate hint") {
  auto data = make_noisy(50, 2, 1);
  data.x[0] = std::numeric_limits<double>::infinity();
  try {
    train_model(AlgorithmId::kERM, data, TrainConfig{}, 1);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
    CHECK(std::string(e.what()).find("learning rate") != std::string::npos);
  }
}

TEST_CASE("group error metrics") {
  const auto data = make_split({5, 5, 5, 5});
  LinearModel perfect{{1.0, 0.0}, 0.0};
  CHECK(worst_group_error(perfect, data) == 0.0);
  CHECK(average_group_error(perfect, data) == 0.0);
  LinearModel plus_one{{0.0, 0.0}, 0.0};  // score 0 -> +1
  CHECK(worst_group_error(plus_one, data) == 1.0);
  CHECK(average_group_error(plus_one, data) == 0.5);

  GroupErrors e;
  e.per_group = {0.1, 0.2, 0.05, 0.4};
  CHECK(e.worst() == 0.4);
  CHECK(e.average() == doctest::Approx(0.1875));

  const auto missing = make_split({5, 0, 5, 5});
  CHECK_THROWS_AS(worst_group_error(perfect, missing), Error);
}

TEST_CASE("uniform ensemble") {
  const auto data = make_noisy(60, 2, 3);
  LinearModel m{{0.4, -1.2}, 0.1};
  UniformEnsemble same({m, m, m});
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(same.predict(data.row(i)) == m.predict(data.row(i)));
  LinearModel neg{{-0.4, 1.2}, 0.0};
  LinearModel pos{{0.4, -1.2}, 0.0};
  UniformEnsemble cancel({pos, neg});
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(cancel.score(data.row(i)) == 0.0);
    CHECK(cancel.predict(data.row(i)) == 1);
  }
  CHECK_THROWS_AS(UniformEnsemble({m}), Error);
  CHECK_THROWS_AS(UniformEnsemble({m, LinearModel{{1.0}, 0.0}}), Error);

  // On a trained task the ensemble's WG error is computable and not below the best member's.
  Rng rng(2);
  const auto task = generate_synthetic_task(400, 3, 10.0, {0.85, 0.5, 0.5}, 400, rng);
  std::vector<LinearModel> members;
  double best = 1.0;
  for (auto id : kAllAlgorithms) {
    members.push_back(train_model(id, task.train, TrainConfig{}, 5).model);
    best = std::min(best, worst_group_error(members.back(), task.test));
  }
  const double ens = worst_group_error(UniformEnsemble(members), task.test);
  CHECK(ens >= 0.0);
  CHECK(ens <= 1.0);
  CHECK(ens >= best);
}
