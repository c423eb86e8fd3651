#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace adaptany::testing {

using Rational = boost::multiprecision::cpp_rational;

// The double nearest to the exact mean, ties to even. The rational-to-double
// conversion is only trusted to land within one ulp; the neighbours are
// compared exactly.
inline double rational_mean(const std::vector<double>& values) {
  Rational sum = 0;
  for (double v : values) sum += Rational(v);
  const Rational q = sum / static_cast<long>(values.size());
  const double guess = q.convert_to<double>();
  double best = guess;
  Rational best_err = abs(Rational(guess) - q);
  for (double cand : {std::nextafter(guess, -std::numeric_limits<double>::infinity()),
                      std::nextafter(guess, std::numeric_limits<double>::infinity())}) {
    const Rational err = abs(Rational(cand) - q);
    if (err < best_err) {
      best = cand;
      best_err = err;
    } else if (err == best_err) {
      int e1 = 0, e2 = 0;
      const auto m1 = static_cast<long long>(std::ldexp(std::frexp(best, &e1), 53));
      const auto m2 = static_cast<long long>(std::ldexp(std::frexp(cand, &e2), 53));
      if ((m1 & 1) && !(m2 & 1)) best = cand;
    }
  }
  return best;
}

}  // namespace adaptany::testing
