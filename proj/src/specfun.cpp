#include "ddm/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

// Evaluation strategy per region:
//   x <= 17          ascending series in long double with compensated sums
//                    (the alternating series loses ~x/2.3 digits in double,
//                    long double + Kahan keeps the loss below 1e-13)
//   x >  17, n <= 1  Hankel asymptotic expansion; its optimal truncation
//                    error ~ exp(-2x) is below 2e-15 from x = 17 on
//   n >= 2           upward recurrence when stable (n < x), otherwise
//                    Miller's downward recurrence normalised against
//                    J_0 + 2 sum J_2k = 1; Y always recurs upward (stable).

namespace ddm {
namespace {

constexpr long double pi_ld = 3.14159265358979323846264338327950288L;
constexpr long double gamma_ld = 0.57721566490153286060651209008240243L;
constexpr double series_cut = 17.0;

void check_order(int n) {
  if (n < 0 || n > specfun_max_order)
    throw NumericalError("bessel order out of range [0,60]: " + std::to_string(n));
}

struct KahanLd {
  long double sum = 0.0L;
  long double comp = 0.0L;
  void add(long double term) {
    long double y = term - comp;
    long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// J_n via the ascending series, n in {0, 1}.
long double j_series(int n, long double x) {
  const long double x2 = 0.25L * x * x;
  long double term = (n == 0) ? 1.0L : 0.5L * x;
  KahanLd acc;
  acc.add(term);
  long double peak = fabsl(term);
  for (int m = 1; m < 200; ++m) {
    term *= -x2 / (static_cast<long double>(m) * (m + n));
    acc.add(term);
    peak = std::max(peak, fabsl(term));
    if (fabsl(term) < 1e-22L * peak) break;
  }
  return acc.sum;
}

// Y_0 = (2/pi)(ln(x/2)+gamma) J_0 + (2/pi) sum_{m>=1} (-1)^{m+1} H_m (x^2/4)^m / (m!)^2
long double y0_series(long double x) {
  const long double x2 = 0.25L * x * x;
  long double term = 1.0L;
  long double harmonic = 0.0L;
  KahanLd acc;
  long double peak = 0.0L;
  for (int m = 1; m < 200; ++m) {
    term *= x2 / (static_cast<long double>(m) * m);
    harmonic += 1.0L / m;
    long double signedterm = ((m & 1) ? term : -term) * harmonic;
    acc.add(signedterm);
    peak = std::max(peak, fabsl(signedterm));
    if (fabsl(signedterm) < 1e-22L * peak && m > 4) break;
  }
  long double j0 = j_series(0, x);
  return (2.0L / pi_ld) * ((logl(0.5L * x) + gamma_ld) * j0 + acc.sum);
}

// Y_1 = -2/(pi x) + (2/pi)(ln(x/2)+gamma) J_1
//       - (1/pi) sum_{m>=0} (-1)^m (H_m + H_{m+1}) (x/2)^{2m+1} / (m!(m+1)!)
long double y1_series(long double x) {
  const long double x2 = 0.25L * x * x;
  long double term = 0.5L * x;
  long double hm = 0.0L, hm1 = 1.0L;
  KahanLd acc;
  acc.add(term * (hm + hm1));
  long double peak = fabsl(term);
  for (int m = 1; m < 200; ++m) {
    term *= -x2 / (static_cast<long double>(m) * (m + 1));
    hm += 1.0L / m;
    hm1 += 1.0L / (m + 1);
    long double signedterm = term * (hm + hm1);
    acc.add(signedterm);
    peak = std::max(peak, fabsl(signedterm));
    if (fabsl(signedterm) < 1e-22L * peak) break;
  }
  long double j1 = j_series(1, x);
  return -2.0L / (pi_ld * x) + (2.0L / pi_ld) * (logl(0.5L * x) + gamma_ld) * j1 -
         acc.sum / pi_ld;
}

// Asymptotic modulus/phase pieces: J = amp (P cos chi - Q sin chi),
// Y = amp (P sin chi + Q cos chi), chi = x - (2n+1) pi/4.
void asym_pq(int n, long double x, long double& p, long double& q) {
  const long double mu = 4.0L * n * n;
  long double c = 1.0L;
  p = 1.0L;
  q = 0.0L;
  long double prev = fabsl(c);
  for (int j = 1; j <= 50; ++j) {
    long double odd = 2.0L * j - 1.0L;
    c *= (mu - odd * odd) / (8.0L * j * x);
    if (fabsl(c) > prev) break;  // past optimal truncation
    prev = fabsl(c);
    int k = j / 2;
    long double sgn = (k & 1) ? -1.0L : 1.0L;
    if (j & 1)
      q += sgn * c;
    else
      p += sgn * c;
    if (fabsl(c) < 1e-20L) break;
  }
}

void jy_asymptotic(int n, long double x, long double& j, long double& y) {
  long double p, q;
  asym_pq(n, x, p, q);
  long double chi = x - (2 * n + 1) * (pi_ld / 4.0L);
  long double amp = sqrtl(2.0L / (pi_ld * x));
  long double c = cosl(chi), s = sinl(chi);
  j = amp * (p * c - q * s);
  y = amp * (p * s + q * c);
}

double j_low_order(int n, double x) {
  if (x <= series_cut) return static_cast<double>(j_series(n, x));
  long double j, y;
  jy_asymptotic(n, x, j, y);
  return static_cast<double>(j);
}

double j_miller(int n, double x) {
  int start = std::max(n, static_cast<int>(std::ceil(x))) + 42;
  if (start % 2) ++start;
  long double jnext = 0.0L;
  long double jcur = 1e-30L;
  KahanLd norm;
  long double result = 0.0L;
  for (int m = start; m >= 1; --m) {
    long double jprev = (2.0L * m / x) * jcur - jnext;
    jnext = jcur;
    jcur = jprev;  // holds j_{m-1}
    int order = m - 1;
    if (order == n) result = jcur;
    if (order >= 2 && order % 2 == 0) norm.add(2.0L * jcur);
    if (fabsl(jcur) > 1e280L) {
      jcur *= 1e-280L;
      jnext *= 1e-280L;
      norm.sum *= 1e-280L;
      norm.comp *= 1e-280L;
      result *= 1e-280L;
    }
  }
  norm.add(jcur);  // j_0 term of the normalisation identity
  return static_cast<double>(result / norm.sum);
}

}  // namespace

double bessel_j(int n, double x) {
  check_order(n);
  if (!(x >= 0.0) || !std::isfinite(x))
    throw NumericalError("bessel_j needs finite x >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n <= 1) return j_low_order(n, x);
  if (x > series_cut && n < x) {
    // stable upward recurrence below the turning point
    long double j0, j1, y0, y1;
    jy_asymptotic(0, x, j0, y0);
    jy_asymptotic(1, x, j1, y1);
    long double jm = j0, jc = j1;
    for (int m = 1; m < n; ++m) {
      long double jn = (2.0L * m / x) * jc - jm;
      jm = jc;
      jc = jn;
    }
    return static_cast<double>(jc);
  }
  return j_miller(n, x);
}

double bessel_y(int n, double x) {
  check_order(n);
  if (!(x > 0.0) || !std::isfinite(x))
    throw NumericalError("bessel_y needs finite x > 0");
  long double y0, y1;
  if (x <= series_cut) {
    y0 = y0_series(x);
    if (n == 0) return static_cast<double>(y0);
    y1 = y1_series(x);
  } else {
    long double j;
    jy_asymptotic(0, x, j, y0);
    if (n == 0) return static_cast<double>(y0);
    jy_asymptotic(1, x, j, y1);
  }
  if (n == 1) return static_cast<double>(y1);
  long double ym = y0, yc = y1;
  for (int m = 1; m < n; ++m) {
    long double yn = (2.0L * m / x) * yc - ym;
    ym = yc;
    yc = yn;
  }
  return static_cast<double>(yc);
}

Complex hankel1(int n, double x) { return {bessel_j(n, x), bessel_y(n, x)}; }

}  // namespace ddm
