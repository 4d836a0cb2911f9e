#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace ppdiag {

template <typename F>
std::pair<double, double> golden_section_max(F&& f, double lo, double hi, int evaluations) {
  if (evaluations < 2) throw std::invalid_argument("golden_section_max: need at least 2 evaluations");
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  double best_x = x1;
  double best_f = f1;
  if (f2 > best_f) {
    best_x = x2;
    best_f = f2;
  }
  for (int k = 2; k < evaluations; ++k) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
      if (f1 > best_f) {
        best_x = x1;
        best_f = f1;
      }
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
      if (f2 > best_f) {
        best_x = x2;
        best_f = f2;
      }
    }
  }
  return {best_x, best_f};
}

}  // namespace ppdiag
