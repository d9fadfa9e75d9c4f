#pragma once

#include <string>
#include <vector>

#include "common/types.hpp"
#include "koopman/dictionary.hpp"

namespace kcbf::koopman {

// One sampled step (y, u, y⁺) in modeling-state coordinates.
struct Transition {
  Vec y;
  Vec u;
  Vec y_plus;
};

// Lifted linear predictor z⁺ = A z + B u (+ residual).
struct KoopmanModel {
  Dictionary dictionary;
  Mat A;
  Mat B;
  double ridge_lambda = 0.0;
  double fit_mse1 = 0.0;
  double fit_mseH = 0.0;
  int horizon = 0;
  int num_samples = 0;

  int lifted_dim() const { return dictionary.lifted_dim(); }
  int action_dim() const { return static_cast<int>(B.cols()); }

  Vec Lift(const Vec& y) const { return dictionary.Lift(y); }
  Vec Predict(const Vec& z, const Vec& u) const { return A * z + B * u; }
};

// Fits [A B] by ridge regression on the lifted transitions and records the
// one-step and H-step prediction errors. Contiguous runs of transitions
// (y_plus of one bitwise equal to y of the next) form the segments used for
// the H-step rollout.
KoopmanModel FitModel(const Dictionary& dictionary,
                      const std::vector<Transition>& transitions,
                      double ridge_lambda, int horizon = 10);

// r = ψ(y⁺) − Aψ(y) − Bu.
Vec Residual(const KoopmanModel& model, const Transition& t);

// (1/N) Σ ‖z⁺ − Az − Bu‖².
double OneStepMse(const KoopmanModel& model,
                  const std::vector<Transition>& transitions);

// (1/N_H) Σ_i Σ_{k=1..H} ‖z_{i+k} − ẑ_{i+k}‖² over every start i that has H
// contiguous successors; ẑ is the open-loop lifted rollout from z_i.
double MultiStepMse(const KoopmanModel& model,
                    const std::vector<Transition>& transitions, int horizon);

}  // namespace kcbf::koopman
