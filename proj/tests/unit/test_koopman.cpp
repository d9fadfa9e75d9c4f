#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"

#include "common/error.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/model.hpp"
#include "koopman/serialize.hpp"
#include "numerics/ridge.hpp"

using namespace kcbf;
using namespace kcbf::koopman;

namespace {

Vec V(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// One contiguous trajectory of z⁺ = 0.9 z + 0.1 u.
std::vector<Transition> ScalarLinearData(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> data;
  double z = 0.5;
  for (int i = 0; i < n; ++i) {
    const double a = u(rng);
    const double next = 0.9 * z + 0.1 * a;
    data.push_back({V({z}), V({a}), V({next})});
    z = next;
  }
  return data;
}

std::vector<Vec> GaussianBlobs(int per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<Vec> data;
  for (const Vec& c : {V({0, 0, 0}), V({3, 0, 1}), V({0, 4, -2}), V({-3, -3, 0})}) {
    for (int i = 0; i < per_blob; ++i) {
      data.push_back(c + V({nd(rng), nd(rng), nd(rng)}));
    }
  }
  return data;
}

}  // namespace

TEST_SUITE("dictionary") {
  TEST_CASE("two separated clusters") {
    std::vector<Vec> data;
    for (int i = 0; i < 50; ++i) data.push_back(V({0, 0}));
    for (int i = 0; i < 50; ++i) data.push_back(V({10, 10}));
    const Dictionary d = FitCenters(data, 2, 42);
    REQUIRE(d.num_features() == 2);
    const bool first_low = d.centers()[0](0) < 5.0;
    const Vec& lo = d.centers()[first_low ? 0 : 1];
    const Vec& hi = d.centers()[first_low ? 1 : 0];
    CHECK(lo.norm() < 1e-12);
    CHECK((hi - V({10, 10})).norm() < 1e-12);
  }

  TEST_CASE("one center per data point") {
    const std::vector<Vec> data = {V({0, 1}), V({2, 3}), V({-1, 5}), V({4, 4}),
                                   V({7, -2}), V({0.5, 0.5}), V({3, 9})};
    const Dictionary d = FitCenters(data, static_cast<int>(data.size()), 9);
    for (const Vec& y : data) {
      int matches = 0;
      for (const Vec& c : d.centers()) matches += (c.array() == y.array()).all();
      CHECK(matches == 1);
    }
    // 7 centers: bandwidth = median of the 5 nearest other centers.
    for (int j = 0; j < d.num_features(); ++j) CHECK(d.bandwidths()[static_cast<size_t>(j)] > 0.0);
  }

  TEST_CASE("coincident data cannot host several centers") {
    const std::vector<Vec> data(10, V({1, 1}));
    try {
      (void)FitCenters(data, 2, 1);
      FAIL("expected DegenerateData");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerateData);
    }
    CHECK(FitCenters(data, 1, 1).num_features() == 1);
  }

  TEST_CASE("fit is deterministic for a seed") {
    const auto data = GaussianBlobs(100, 4);
    const Dictionary a = FitCenters(data, 6, 123);
    const Dictionary b = FitCenters(data, 6, 123);
    for (int j = 0; j < 6; ++j) {
      CHECK((a.centers()[static_cast<size_t>(j)].array() ==
             b.centers()[static_cast<size_t>(j)].array()).all());
      CHECK(a.bandwidths()[static_cast<size_t>(j)] == b.bandwidths()[static_cast<size_t>(j)]);
    }
  }

  TEST_CASE("k-means++ seeding is no worse than the worst random restart") {
    const auto data = GaussianBlobs(200, 5);
    const double ours = WithinClusterSumOfSquares(data, FitCenters(data, 4, 2024).centers());
    double worst = 0.0;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
    for (int restart = 0; restart < 10; ++restart) {
      // Oracle: plain Lloyd from uniformly drawn data points.
      std::vector<Vec> c;
      for (int j = 0; j < 4; ++j) c.push_back(data[pick(rng)]);
      for (int it = 0; it < 100; ++it) {
        std::vector<Vec> sum(4, Vec::Zero(3));
        std::vector<int> cnt(4, 0);
        for (const Vec& y : data) {
          int best = 0;
          for (int j = 1; j < 4; ++j) {
            if ((y - c[static_cast<size_t>(j)]).squaredNorm() <
                (y - c[static_cast<size_t>(best)]).squaredNorm()) best = j;
          }
          sum[static_cast<size_t>(best)] += y;
          ++cnt[static_cast<size_t>(best)];
        }
        for (int j = 0; j < 4; ++j) {
          if (cnt[static_cast<size_t>(j)] > 0) c[static_cast<size_t>(j)] = sum[static_cast<size_t>(j)] / cnt[static_cast<size_t>(j)];
        }
      }
      worst = std::max(worst, WithinClusterSumOfSquares(data, c));
    }
    CHECK(ours <= worst + 1e-9);
  }

  TEST_CASE("lift without features is the identity") {
    const Dictionary d(3);
    const Vec y = V({0.1, -2.0, 3.5});
    CHECK((d.Lift(y).array() == y.array()).all());
  }

  TEST_CASE("kernel values") {
    const Dictionary d(2, {V({1.0, 2.0}), V({0.0, 0.0})}, {0.5, 2.0});
    const Vec at_center = d.Lift(V({1.0, 2.0}));
    CHECK(at_center(2) == 1.0);
    // ‖y − c₂‖ = σ₂ = 2 → exp(−½).
    const Vec z = d.Lift(V({0.0, 2.0}));
    CHECK(z(3) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  }

  TEST_CASE("state block of the lift is bitwise the input") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd(0.0, 10.0);
    const Dictionary d = FitCenters(GaussianBlobs(50, 2), 8, 3);
    for (int trial = 0; trial < 500; ++trial) {
      const Vec y = V({nd(rng), nd(rng), nd(rng)});
      const Vec z = d.Lift(y);
      CHECK((z.head(3).array() == y.array()).all());
      CHECK((z.tail(8).array() >= 0.0).all());
      CHECK((z.tail(8).array() <= 1.0).all());
    }
  }
}

TEST_SUITE("edmd") {
  TEST_CASE("recovers a known scalar linear system") {
    const auto data = ScalarLinearData(200, 1);
    const KoopmanModel m = FitModel(Dictionary(1), data, 1e-10);
    CHECK(std::abs(m.A(0, 0) - 0.9) < 1e-8);
    CHECK(std::abs(m.B(0, 0) - 0.1) < 1e-8);
    CHECK(m.fit_mse1 < 1e-12);
  }

  TEST_CASE("static system fits identity with no input gain") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    std::vector<Transition> data;
    for (int i = 0; i < 100; ++i) {
      const Vec y = V({nd(rng), nd(rng)});
      data.push_back({y, V({nd(rng)}), y});
    }
    const KoopmanModel m = FitModel(Dictionary(2), data, 1e-8);
    CHECK((m.A - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.B.cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("residual of an exact linear system vanishes") {
    const auto data = ScalarLinearData(50, 3);
    KoopmanModel m;
    m.dictionary = Dictionary(1);
    m.A = Mat::Constant(1, 1, 0.9);
    m.B = Mat::Constant(1, 1, 0.1);
    for (const Transition& t : data) CHECK(std::abs(Residual(m, t)(0)) < 1e-15);
  }

  TEST_CASE("residual state block under a unit model") {
    const Dictionary d(2, {V({0.0, 0.0})}, {1.0});
    KoopmanModel m;
    m.dictionary = d;
    m.A = Mat::Identity(3, 3);
    m.B = Mat::Zero(3, 1);
    const Transition t{V({0.3, -0.2}), V({0.7}), V({0.4, -0.2})};
    const Vec r = Residual(m, t);
    CHECK(r(0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(r(1) == 0.0);
    CHECK(r(2) == doctest::Approx(d.Lift(t.y_plus)(2) - d.Lift(t.y)(2)));
  }

  TEST_CASE("residual closes the lifted identity") {
    const auto blobs = GaussianBlobs(30, 8);
    const Dictionary d = FitCenters(blobs, 5, 8);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::vector<Transition> data;
    for (size_t i = 0; i + 1 < blobs.size(); ++i) {
      data.push_back({blobs[i], V({nd(rng)}), blobs[i + 1]});
    }
    const KoopmanModel m = FitModel(d, data, 1e-4);
    for (const Transition& t : data) {
      const Vec lhs = d.Lift(t.y_plus);
      const Vec rhs = m.A * d.Lift(t.y) + m.B * t.u + Residual(m, t);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("fitted operator is a minimizer of the ridge objective") {
    const auto blobs = GaussianBlobs(40, 10);
    const Dictionary d = FitCenters(blobs, 6, 10);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    std::vector<Transition> data;
    for (size_t i = 0; i + 1 < blobs.size(); ++i) {
      data.push_back({blobs[i], V({nd(rng), nd(rng)}), blobs[i + 1]});
    }
    const double lambda = 1e-4;
    const KoopmanModel m = FitModel(d, data, lambda);
    const int nz = d.lifted_dim();
    Mat features(nz + 2, static_cast<Eigen::Index>(data.size()));
    Mat targets(nz, static_cast<Eigen::Index>(data.size()));
    for (size_t i = 0; i < data.size(); ++i) {
      features.col(static_cast<Eigen::Index>(i)) << d.Lift(data[i].y), data[i].u;
      targets.col(static_cast<Eigen::Index>(i)) = d.Lift(data[i].y_plus);
    }
    Mat G(nz, nz + 2);
    G << m.A, m.B;
    const double base = numerics::RidgeObjective(features, targets, G, lambda);
    for (int trial = 0; trial < 50; ++trial) {
      Mat dG(nz, nz + 2);
      for (auto& v : dG.reshaped()) v = nd(rng);
      dG *= 1e-3 / dG.norm();
      CHECK(numerics::RidgeObjective(features, targets, G + dG, lambda) >= base);
    }
  }

  TEST_CASE("one-step horizon reproduces the one-step error") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0.0, 0.1);
    std::vector<Transition> data;
    Vec y = V({0.2, -0.1});
    for (int i = 0; i < 300; ++i) {
      const Vec u = V({nd(rng)});
      const Vec next = V({y(0) + 0.05 * y(1), y(1) - 0.05 * std::sin(y(0)) + u(0)});
      data.push_back({y, u, next});
      y = (i % 50 == 49) ? V({nd(rng), nd(rng)}) : next;
    }
    std::vector<Vec> states;
    for (const auto& t : data) states.push_back(t.y);
    const KoopmanModel m = FitModel(FitCenters(states, 6, 1), data, 1e-4, 1);
    CHECK(std::abs(MultiStepMse(m, data, 1) - m.fit_mse1) < 1e-12);
    CHECK(std::abs(OneStepMse(m, data) - m.fit_mse1) < 1e-12);
    CHECK(MultiStepMse(m, data, 10) >= 0.0);
  }
}

TEST_SUITE("model serialization") {
  TEST_CASE("round trip is exact") {
    const auto blobs = GaussianBlobs(25, 21);
    const Dictionary d = FitCenters(blobs, 5, 21);
    std::vector<Transition> data;
    for (size_t i = 0; i + 1 < blobs.size(); ++i) {
      data.push_back({blobs[i], V({0.01 * static_cast<double>(i)}), blobs[i + 1]});
    }
    const KoopmanModel m = FitModel(d, data, 1e-4, 3);
    const std::string path = "koopman_roundtrip_test.json";
    SaveModel(m, path);
    const KoopmanModel r = LoadModel(path);
    std::remove(path.c_str());
    CHECK((r.A.array() == m.A.array()).all());
    CHECK((r.B.array() == m.B.array()).all());
    CHECK(r.ridge_lambda == m.ridge_lambda);
    CHECK(r.fit_mse1 == m.fit_mse1);
    CHECK(r.fit_mseH == m.fit_mseH);
    CHECK(r.horizon == 3);
    for (int j = 0; j < d.num_features(); ++j) {
      CHECK((r.dictionary.centers()[static_cast<size_t>(j)].array() ==
             d.centers()[static_cast<size_t>(j)].array()).all());
      CHECK(r.dictionary.bandwidths()[static_cast<size_t>(j)] == d.bandwidths()[static_cast<size_t>(j)]);
    }
  }

  TEST_CASE("wrong format is a schema mismatch") {
    Json j = {{"format", "something-else"}, {"version", 1}};
    try {
      (void)ModelFromJson(j);
      FAIL("expected SchemaMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemaMismatch);
    }
  }
}
