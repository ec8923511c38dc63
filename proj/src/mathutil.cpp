#include "deformgp/mathutil.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace deformgp {

double norm_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double norm_cdf(double z) {
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

double norm_quantile(double p) {
  // AS241 algorithm PPND16
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double q = p - 0.5;
  double r, x;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return x;
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -x : x;
}

double bvn_pdf(double x, double y, double rho) {
  const double omr2 = 1.0 - rho * rho;
  const double z = (x * x - 2.0 * rho * x * y + y * y) / omr2;
  return std::exp(-0.5 * z) / (2.0 * M_PI * std::sqrt(omr2));
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1], 24 points (half listed, symmetric)
const double gl24_x[12] = {
    0.0640568928626056260850430826247450385909,
    0.1911188674736163091586398207570696318404,
    0.3150426796961633743867932913198102407864,
    0.4337935076260451384870842319133497124524,
    0.5454214713888395356583756172183723700107,
    0.6480936519369755692524957869107476266696,
    0.7401241915785543642438281030999784255232,
    0.8200019859739029219539498726697452080761,
    0.8864155270044010342131543419821967550873,
    0.9382745520027327585236490017087214496548,
    0.9747285559713094981983919930081690617411,
    0.9951872199970213601799974097007368118745};
const double gl24_w[12] = {
    0.1279381953467521569740561652246953718517,
    0.1258374563468282961213753825111836887264,
    0.1216704729278033912044631534762624256070,
    0.1155056680537256013533444839067835598622,
    0.1074442701159656347825773424466062227946,
    0.0976186521041138882698806644642471544279,
    0.0861901615319532759171852029837426671850,
    0.0733464814110803057340336152531165181193,
    0.0592985849154367807463677585001085845412,
    0.0442774388174198061686027482113382288593,
    0.0285313886289336631813078159518782864491,
    0.0123412297999871995468056670700372915759};

// integrand of the angular form: exp(-(h^2+k^2-2hk sin t)/(2 cos^2 t))
inline double bvn_integrand(double h, double k, double t) {
  const double s = std::sin(t);
  const double c2 = std::cos(t) * std::cos(t);
  if (c2 <= 0.0) return 0.0;
  return std::exp(-(h * h + k * k - 2.0 * h * k * s) / (2.0 * c2));
}

double bvn_angular_integral(double h, double k, double t0, double t1, int reps) {
  // composite 24-point Gauss-Legendre over [t0, t1] split into reps panels
  double total = 0.0;
  const double step = (t1 - t0) / reps;
  for (int p = 0; p < reps; ++p) {
    const double mid = t0 + (p + 0.5) * step;
    const double half = 0.5 * step;
    double acc = 0.0;
    for (int i = 0; i < 12; ++i) {
      acc += gl24_w[i] * (bvn_integrand(h, k, mid - half * gl24_x[i]) +
                          bvn_integrand(h, k, mid + half * gl24_x[i]));
    }
    total += acc * half;
  }
  return total;
}

} // namespace

double bvn_cdf(double h, double k, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    if (rho >= 1.0) return norm_cdf(std::min(h, k));
    if (rho <= -1.0) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  }
  if (std::isinf(h) || std::isinf(k)) {
    if (h < 0 || k < 0) return 0.0;
    if (std::isinf(h) && std::isinf(k)) return 1.0;
    return std::isinf(h) ? norm_cdf(k) : norm_cdf(h);
  }
  // Phi2(h,k;rho) = Phi(h)Phi(k) + (1/2pi) int_0^{asin rho} integrand dt.
  // The integrand is analytic on (-pi/2, pi/2); more panels near |rho| = 1.
  const double a = std::asin(rho);
  const double ar = std::fabs(rho);
  const int reps = ar < 0.75 ? 1 : (ar < 0.95 ? 2 : 5);
  double v = norm_cdf(h) * norm_cdf(k);
  if (a != 0.0) v += bvn_angular_integral(h, k, 0.0, a, reps) / (2.0 * M_PI);
  return std::min(1.0, std::max(0.0, v));
}

double gpd_cdf(double y, double psi, double xi) {
  if (psi <= 0.0) throw std::invalid_argument("gpd_cdf: psi must be positive");
  if (y <= 0.0) return 0.0;
  if (std::fabs(xi) < 1e-12) return -std::expm1(-y / psi);
  const double t = 1.0 + xi * y / psi;
  if (t <= 0.0) return xi < 0.0 ? 1.0 : 0.0; // above upper endpoint when xi < 0
  return -std::expm1(-std::log1p(xi * y / psi) / xi);
}

double gpd_quantile(double q, double psi, double xi) {
  if (psi <= 0.0) throw std::invalid_argument("gpd_quantile: psi must be positive");
  if (q < 0.0 || q >= 1.0) throw std::invalid_argument("gpd_quantile: q must be in [0,1)");
  if (q == 0.0) return 0.0;
  if (std::fabs(xi) < 1e-12) return -psi * std::log1p(-q);
  return psi / xi * std::expm1(-xi * std::log1p(-q));
}

double Rng::uniform() {
  // 53-bit mantissa draw in (0, 1)
  const std::uint64_t u = eng_();
  return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double Rng::normal() { return norm_quantile(uniform()); }

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return Rng(z);
}

double brent_minimize(const std::function<double(double)>& f, double a,
                      double b, double tol, double* fmin, int max_iter) {
  if (!(a < b)) throw std::invalid_argument("brent_minimize: need a < b");
  const double gold = 0.3819660112501051;
  double x = a + gold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = tol * std::fabs(x) + 1e-12;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double etmp = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * etmp) && p > q * (a - x) &&
          p < q * (b - x)) {
        parabolic = true;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = gold * e;
    }
    const double u = (std::fabs(d) >= tol1) ? x + d : x + ((d > 0) ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  if (fmin) *fmin = fx;
  return x;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double hscale) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = hscale * (1.0 + std::fabs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                            const Eigen::VectorXd& x, double hscale) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = hscale * (1.0 + std::fabs(x[j]));
    xp[j] = x[j] + h;
    const Eigen::VectorXd gp = g(xp);
    xp[j] = x[j] - h;
    const Eigen::VectorXd gm = g(xp);
    xp[j] = x[j];
    J.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (J + J.transpose());
}

} // namespace deformgp
