#pragma once

#include <vector>

#include "barrier/barrier.hpp"
#include "common/types.hpp"
#include "filter/safety_filter.hpp"
#include "koopman/model.hpp"

namespace kcbf::agent {

// What the learner sees of the safety layer: constraint rows at a lifted
// state and the projection of a nominal action onto them.
class ActionFilter {
 public:
  virtual ~ActionFilter() = default;
  virtual const Box& box() const = 0;
  virtual std::vector<filter::ConstraintRow> Rows(const Vec& z) const = 0;
  virtual filter::FilterResult Apply(const std::vector<filter::ConstraintRow>& rows,
                                     const Vec& u_nom) const = 0;
  // u_safe only; cheaper than Apply for identity filtering.
  virtual Vec Project(const std::vector<filter::ConstraintRow>& rows,
                      const Vec& u_nom) const {
    return Apply(rows, u_nom).u_safe;
  }
};

class KcbfFilter : public ActionFilter {
 public:
  KcbfFilter(const koopman::KoopmanModel& model,
             std::vector<barrier::LiftedBarrier> barriers, Box box,
             filter::FilterOptions options = {});

  const Box& box() const override { return box_; }
  std::vector<filter::ConstraintRow> Rows(const Vec& z) const override;
  filter::FilterResult Apply(const std::vector<filter::ConstraintRow>& rows,
                             const Vec& u_nom) const override;

  const std::vector<barrier::LiftedBarrier>& barriers() const { return barriers_; }

 private:
  Mat A_;
  Mat B_;
  std::vector<barrier::LiftedBarrier> barriers_;
  Box box_;
  filter::FilterOptions options_;
};

// Pass-through used for unfiltered baselines: no rows, u_safe = u_nom.
class IdentityFilter : public ActionFilter {
 public:
  explicit IdentityFilter(Box box) : box_(std::move(box)) {}

  const Box& box() const override { return box_; }
  std::vector<filter::ConstraintRow> Rows(const Vec&) const override { return {}; }
  filter::FilterResult Apply(const std::vector<filter::ConstraintRow>& rows,
                             const Vec& u_nom) const override;
  Vec Project(const std::vector<filter::ConstraintRow>&, const Vec& u_nom) const override {
    return u_nom;
  }

 private:
  Box box_;
};

}  // namespace kcbf::agent
