#include "koopman/model.hpp"

#include <iostream>
#include <limits>
#include <string>

#include "common/error.hpp"
#include "numerics/ridge.hpp"

namespace kcbf::koopman {
namespace {

bool Continues(const Transition& prev, const Transition& next) {
  return prev.y_plus.size() == next.y.size() &&
         (prev.y_plus.array() == next.y.array()).all();
}

void CheckTransitions(const Dictionary& dict,
                      const std::vector<Transition>& transitions) {
  KCBF_REQUIRE(!transitions.empty(), ErrorCode::kInvalidArgument,
               "no transitions supplied");
  const auto nu = transitions.front().u.size();
  for (const Transition& t : transitions) {
    KCBF_REQUIRE(t.y.size() == dict.state_dim() &&
                     t.y_plus.size() == dict.state_dim() && t.u.size() == nu,
                 ErrorCode::kInvalidArgument,
                 "transition dimensions do not match the dictionary");
  }
}

}  // namespace

KoopmanModel FitModel(const Dictionary& dictionary,
                      const std::vector<Transition>& transitions,
                      double ridge_lambda, int horizon) {
  CheckTransitions(dictionary, transitions);
  const int nz = dictionary.lifted_dim();
  const auto nu = static_cast<int>(transitions.front().u.size());
  const auto n = static_cast<Eigen::Index>(transitions.size());
  if (n < nz + nu) {
    std::cerr << "warning: fitting a " << nz + nu << "-feature model from only "
              << n << " transitions\n";
  }

  Mat features(nz + nu, n);
  Mat targets(nz, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = transitions[static_cast<size_t>(i)];
    features.col(i).head(nz) = dictionary.Lift(t.y);
    features.col(i).tail(nu) = t.u;
    targets.col(i) = dictionary.Lift(t.y_plus);
  }
  const Mat G = numerics::SolveRidge(features, targets, ridge_lambda);

  KoopmanModel model;
  model.dictionary = dictionary;
  model.A = G.leftCols(nz);
  model.B = G.rightCols(nu);
  model.ridge_lambda = ridge_lambda;
  model.horizon = horizon;
  model.num_samples = static_cast<int>(n);
  model.fit_mse1 = (targets - G * features).colwise().squaredNorm().mean();
  model.fit_mseH = MultiStepMse(model, transitions, horizon);
  return model;
}

Vec Residual(const KoopmanModel& model, const Transition& t) {
  return model.Lift(t.y_plus) - model.A * model.Lift(t.y) - model.B * t.u;
}

double OneStepMse(const KoopmanModel& model,
                  const std::vector<Transition>& transitions) {
  KCBF_REQUIRE(!transitions.empty(), ErrorCode::kInvalidArgument,
               "no transitions supplied");
  double total = 0.0;
  for (const Transition& t : transitions) total += Residual(model, t).squaredNorm();
  return total / static_cast<double>(transitions.size());
}

double MultiStepMse(const KoopmanModel& model,
                    const std::vector<Transition>& transitions, int horizon) {
  KCBF_REQUIRE(horizon >= 1, ErrorCode::kInvalidArgument,
               "prediction horizon must be >= 1");
  const size_t n = transitions.size();
  // run_length[i] = number of contiguous transitions starting at i.
  std::vector<int> run_length(n, 1);
  for (size_t i = n; i-- > 1;) {
    if (Continues(transitions[i - 1], transitions[i])) {
      run_length[i - 1] = run_length[i] + 1;
    }
  }
  double total = 0.0;
  size_t starts = 0;
  for (size_t i = 0; i < n; ++i) {
    if (run_length[i] < horizon) continue;
    ++starts;
    Vec z_hat = model.Lift(transitions[i].y);
    for (int k = 0; k < horizon; ++k) {
      const Transition& t = transitions[i + static_cast<size_t>(k)];
      z_hat = model.A * z_hat + model.B * t.u;
      total += (model.Lift(t.y_plus) - z_hat).squaredNorm();
    }
  }
  if (starts == 0) return std::numeric_limits<double>::quiet_NaN();
  return total / static_cast<double>(starts);
}

}  // namespace kcbf::koopman
