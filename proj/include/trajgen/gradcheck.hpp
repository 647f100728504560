#ifndef TRAJGEN_GRADCHECK_HPP_
#define TRAJGEN_GRADCHECK_HPP_

#include "trajgen/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

namespace trajgen {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients of a scalar loss against central
/// differences over every entry of `params`. The error per entry is
/// |analytic - numeric| / max(1, |numeric|).
///
/// `loss` must build its graph on the supplied tape and be deterministic;
/// it is evaluated twice at the base point to check that.
template <typename Scalar>
GradCheckReport finite_difference_check(
    const std::function<Var<Scalar>(Tape<Scalar>&)>& loss,
    std::span<Parameter<Scalar>* const> params, double h) {
  if (!(h > 0.0)) throw Error("finite_difference_check: step must be positive");

  for (auto* p : params) p->zero_grad();
  double base = 0.0;
  {
    Tape<Scalar> tape;
    Var<Scalar> l = loss(tape);
    base = static_cast<double>(l.item());
    tape.backward(l);
  }
  const auto evaluate = [&]() {
    Tape<Scalar> probe(false);
    return static_cast<double>(loss(probe).item());
  };
  if (evaluate() != base) {
    throw Error("finite_difference_check: loss is not deterministic");
  }

  GradCheckReport report;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      Scalar& x = p->value.data()[i];
      const Scalar saved = x;
      x = static_cast<Scalar>(saved + h);
      const double up = evaluate();
      x = static_cast<Scalar>(saved - h);
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = static_cast<double>(p->grad.data()[i]);
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
      ++report.entries_checked;
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = err;
        report.worst_parameter = p->name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace trajgen

#endif  // TRAJGEN_GRADCHECK_HPP_
