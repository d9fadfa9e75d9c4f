#include "agent/action_filter.hpp"

#include "common/error.hpp"

namespace kcbf::agent {

KcbfFilter::KcbfFilter(const koopman::KoopmanModel& model,
                       std::vector<barrier::LiftedBarrier> barriers, Box box,
                       filter::FilterOptions options)
    : A_(model.A),
      B_(model.B),
      barriers_(std::move(barriers)),
      box_(std::move(box)),
      options_(options) {
  KCBF_REQUIRE(B_.cols() == box_.dim(), ErrorCode::kInvalidArgument,
               "action box does not match the model");
}

std::vector<filter::ConstraintRow> KcbfFilter::Rows(const Vec& z) const {
  return filter::AssembleConstraints(A_, B_, barriers_, z);
}

filter::FilterResult KcbfFilter::Apply(const std::vector<filter::ConstraintRow>& rows,
                                       const Vec& u_nom) const {
  return filter::FilterRows(rows, u_nom, box_, options_);
}

filter::FilterResult IdentityFilter::Apply(const std::vector<filter::ConstraintRow>& rows,
                                           const Vec& u_nom) const {
  KCBF_REQUIRE(u_nom.size() == box_.dim(), ErrorCode::kInvalidArgument,
               "nominal action has the wrong dimension");
  filter::FilterResult r;
  r.u_safe = u_nom;
  r.xi = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  r.rows = rows;
  return r;
}

}  // namespace kcbf::agent
