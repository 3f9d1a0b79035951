#pragma once
// Central finite-difference gradient checking shared by the tensor, model
// and acceptance suites. The oracle only ever calls the forward path.

#include <cmath>
#include <functional>
#include <string>

#include "stpudgat/tensor.hpp"

namespace stpudgat::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// `loss` must run a fresh forward pass from the store's current values and
// return the scalar loss. `backward` must populate Param::grad for the same
// point. Relative error uses max(1, |analytic|, |numeric|) as denominator.
inline GradCheckResult gradcheck(ParamStore& store,
                                 const std::function<double()>& loss,
                                 const std::function<void()>& backward,
                                 double h = 1e-5) {
  store.zero_grad();
  backward();

  GradCheckResult r;
  for (const auto& p : store.all()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss();
      p->value[i] = saved - h;
      const double down = loss();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom =
          std::max({1.0, std::abs(numeric), std::abs(analytic)});
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst_param = p->name;
        r.worst_index = i;
      }
    }
  }
  return r;
}

}  // namespace stpudgat::testing
