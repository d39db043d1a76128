#include "blopt/problem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace blopt {

FlatVector inner_logp_grad_with(const BloProblem& p, const FlatVector& lambda,
                                const FlatVector& theta,
                                std::span<const double> params) {
  FlatVector g = grad_theta(p.inner_loss(), lambda, theta, params);
  g.scale(-1.0 / p.temperature());
  return g;
}

FlatVector inner_logp_grad(const BloProblem& p, const FlatVector& lambda,
                           const FlatVector& theta, Rng& rng) {
  const std::vector<double> params = p.resolve_inner_params(rng);
  return inner_logp_grad_with(p, lambda, theta, params);
}

// ---------------------------------------------------------------------------
// synth1d
// ---------------------------------------------------------------------------

namespace {

ScalarField synth1d_outer() {
  return ScalarField(1, 1,
                     [](std::span<const ad::Ad> lam, std::span<const ad::Ad> th,
                        std::span<const double>) {
                       ad::Ad d = lam[0] - th[0];
                       ad::Ad c = th[0] - 0.5;
                       return d * d + c * c;
                     });
}

// params = {eps1, eps2}: L_T = (1/3 + eps1) theta^3 - (1 - lambda^2 + eps2) theta
ScalarField synth1d_inner() {
  return ScalarField(1, 1,
                     [](std::span<const ad::Ad> lam, std::span<const ad::Ad> th,
                        std::span<const double> params) {
                       const double e1 = params.empty() ? 0.0 : params[0];
                       const double e2 = params.empty() ? 0.0 : params[1];
                       ad::Ad cubic = (1.0 / 3.0 + e1) * (th[0] * th[0] * th[0]);
                       ad::Ad lin = (ad::Ad(1.0 + e2) - lam[0] * lam[0]) * th[0];
                       return cubic - lin;
                     },
                     {0.0, 0.0});
}

BloProblem synth1d_base(double temperature) {
  BloProblem p(synth1d_outer(), synth1d_inner(), temperature,
               InitPolicy::independent_fixed(
                   FlatVector(Space::Theta, {0.5})));
  p.set_theta_box(Box{0.0, 1.0});
  p.set_lambda_box(Box{0.0, 1.0});
  p.set_known_solution(FlatVector(Space::Lambda, {0.7487}),
                       FlatVector(Space::Theta, {0.6629}));
  return p;
}

}  // namespace

BloProblem make_synth1d(double temperature) { return synth1d_base(temperature); }

BloProblem make_noisy_synth1d(std::uint64_t seed, double temperature) {
  BloProblem p = synth1d_base(temperature);
  // The seed only tags the instance; draws come from the caller's stream so
  // concurrent chains stay independent.
  (void)seed;
  p.set_noise_hook([](Rng& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const double e1 = u(rng);
    const double e2 = u(rng);
    return std::vector<double>{e1, e2};
  });
  return p;
}

// ---------------------------------------------------------------------------
// poly toy
// ---------------------------------------------------------------------------

namespace {

constexpr double kTrainX[2] = {-0.75, 0.75};
constexpr double kTrainY[2] = {-0.375, -0.675};
constexpr double kValX[2] = {-0.5, 0.5};
constexpr double kValY[2] = {-0.3, -0.5};

ad::Ad poly_model(const ad::Ad& lambda, std::span<const ad::Ad> th, double x) {
  return lambda * (x * x * x) + th[2] * (x * x) + th[1] * x + th[0];
}

ScalarField poly_loss(bool train) {
  return ScalarField(1, 3,
                     [train](std::span<const ad::Ad> lam,
                             std::span<const ad::Ad> th, std::span<const double>) {
                       const double* xs = train ? kTrainX : kValX;
                       const double* ys = train ? kTrainY : kValY;
                       ad::Ad s = 0.0;
                       for (int i = 0; i < 2; ++i) {
                         ad::Ad r = poly_model(lam[0], th, xs[i]) - ys[i];
                         s += r * r;
                       }
                       return s;
                     });
}

}  // namespace

PolyToy make_poly_toy(double temperature) {
  BloProblem problem(poly_loss(false), poly_loss(true), temperature,
                     InitPolicy::independent_random(Box{-1.0, 1.0}, 7));
  problem.set_theta_box(Box{-1.0, 1.0});
  problem.set_lambda_box(Box{-1.0, 1.0});

  TabularToySpec spec;
  const std::size_t n_lambda = 21;
  const std::size_t n_free = 11;
  for (std::size_t i = 0; i < n_lambda; ++i)
    spec.lambda_grid.push_back(-1.0 + 2.0 * static_cast<double>(i) / (n_lambda - 1));
  for (std::size_t j = 0; j < n_free; ++j)
    spec.free_param_grid.push_back(-1.0 + 2.0 * static_cast<double>(j) / (n_free - 1));

  // Zero training loss pins theta_0 and theta_1 given (lambda, theta_2):
  // interpolate both train points exactly. Solved as the 2x2 linear system in
  // (theta_0, theta_1) with theta_2 free.
  Eigen::Matrix2d a;
  a << 1.0, kTrainX[0], 1.0, kTrainX[1];
  for (double lam : spec.lambda_grid) {
    for (double t2 : spec.free_param_grid) {
      Eigen::Vector2d rhs;
      for (int i = 0; i < 2; ++i)
        rhs(i) = kTrainY[i] - lam * std::pow(kTrainX[i], 3) - t2 * kTrainX[i] * kTrainX[i];
      const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(rhs);
      const double th0 = sol(0), th1 = sol(1);
      spec.theta_solutions.insert(spec.theta_solutions.end(), {th0, th1, t2});
      double lv = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double x = kValX[i];
        const double f = lam * x * x * x + t2 * x * x + th1 * x + th0;
        lv += (f - kValY[i]) * (f - kValY[i]);
      }
      spec.val_loss.push_back(lv);
    }
  }
  return PolyToy{std::move(problem), std::move(spec)};
}

// ---------------------------------------------------------------------------
// quadratic
// ---------------------------------------------------------------------------

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat random_orthogonal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  return q;
}

Mat to_eigen(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(
      data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

std::vector<double> from_eigen(const Mat& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows() * m.cols()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out.data(), m.rows(), m.cols()) = m;
  return out;
}

Vec to_vec(const FlatVector& v) {
  return Eigen::Map<const Vec>(v.raw().data(), static_cast<Eigen::Index>(v.size()));
}

FlatVector to_flat(Space s, const Vec& v) {
  return FlatVector(s, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

FlatVector QuadraticInfo::theta_star(const FlatVector& lambda) const {
  const Mat h = to_eigen(hessian, dim_theta, dim_theta);
  const Mat c = to_eigen(coupling, dim_lambda, dim_theta);
  const Vec result = -h.llt().solve(c.transpose() * to_vec(lambda));
  return to_flat(Space::Theta, result);
}

FlatVector QuadraticInfo::lambda_star() const {
  const Mat h = to_eigen(hessian, dim_theta, dim_theta);
  const Mat c = to_eigen(coupling, dim_lambda, dim_theta);
  const Mat k = h.llt().solve(c.transpose());  // H^{-1} C^T, dim_theta x dim_lambda
  const Vec t = Eigen::Map<const Vec>(theta_target.data(), static_cast<Eigen::Index>(dim_theta));
  const Vec s = Eigen::Map<const Vec>(lambda_target.data(), static_cast<Eigen::Index>(dim_lambda));
  const Mat kt_k = k.transpose() * k;
  const Mat lhs = kt_k + Mat::Identity(static_cast<Eigen::Index>(dim_lambda),
                                       static_cast<Eigen::Index>(dim_lambda));
  const Vec rhs = s - k.transpose() * t;
  return to_flat(Space::Lambda, lhs.llt().solve(rhs));
}

FlatVector QuadraticInfo::hypergrad(const FlatVector& lambda) const {
  const Mat h = to_eigen(hessian, dim_theta, dim_theta);
  const Mat c = to_eigen(coupling, dim_lambda, dim_theta);
  const Mat k = h.llt().solve(c.transpose());  // dim_theta x dim_lambda
  const Vec t = Eigen::Map<const Vec>(theta_target.data(), static_cast<Eigen::Index>(dim_theta));
  const Vec s = Eigen::Map<const Vec>(lambda_target.data(), static_cast<Eigen::Index>(dim_lambda));
  const Vec lam = to_vec(lambda);
  // F(lambda) = 0.5 |K lam + t|^2 + 0.5 |lam - s|^2 with theta* = -K lam.
  const Vec grad = k.transpose() * (k * lam + t) + (lam - s);
  return to_flat(Space::Lambda, grad);
}

double QuadraticInfo::outer_at_inner_optimum(const FlatVector& lambda) const {
  const FlatVector th = theta_star(lambda);
  const Vec t = Eigen::Map<const Vec>(theta_target.data(), static_cast<Eigen::Index>(dim_theta));
  const Vec s = Eigen::Map<const Vec>(lambda_target.data(), static_cast<Eigen::Index>(dim_lambda));
  const Vec dth = to_vec(th) - t;
  const Vec dlam = to_vec(lambda) - s;
  return 0.5 * dth.squaredNorm() + 0.5 * dlam.squaredNorm();
}

QuadraticBlo make_quadratic_blo(std::size_t dim_theta, std::size_t dim_lambda,
                                double condition_number, std::uint64_t seed,
                                double temperature, double coupling_scale) {
  if (condition_number < 1.0)
    throw std::invalid_argument("make_quadratic_blo: condition_number must be >= 1");

  Rng rng(seed);
  const Mat q = random_orthogonal(dim_theta, rng);
  Vec eigs(static_cast<Eigen::Index>(dim_theta));
  for (std::size_t i = 0; i < dim_theta; ++i) {
    const double frac = dim_theta == 1 ? 1.0
                                       : static_cast<double>(i) /
                                             static_cast<double>(dim_theta - 1);
    // Geometric spacing from 1/condition up to 1.
    eigs(static_cast<Eigen::Index>(i)) = std::pow(condition_number, frac) / condition_number;
  }
  const Mat h = q * eigs.asDiagonal() * q.transpose();

  // Orthonormal-row mixing for the coupling keeps theta*(lambda) = -rho G^T lambda.
  const Mat g_full = random_orthogonal(std::max(dim_theta, dim_lambda), rng);
  const Mat g = g_full.topLeftCorner(static_cast<Eigen::Index>(dim_lambda),
                                     static_cast<Eigen::Index>(dim_theta));
  const Mat c = coupling_scale * g * h;

  // Seeded optimum with zero outer gradient: t = theta*(ls), s = ls.
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec ls(static_cast<Eigen::Index>(dim_lambda));
  for (std::size_t i = 0; i < dim_lambda; ++i) ls(static_cast<Eigen::Index>(i)) = gauss(rng);
  ls *= 1.0 / std::sqrt(static_cast<double>(dim_lambda));
  const Vec t = -coupling_scale * g.transpose() * ls;
  const Vec s = ls;

  QuadraticInfo info;
  info.dim_theta = dim_theta;
  info.dim_lambda = dim_lambda;
  info.hessian = from_eigen(h);
  info.coupling = from_eigen(c);
  info.theta_target.assign(t.data(), t.data() + t.size());
  info.lambda_target.assign(s.data(), s.data() + s.size());
  info.eig_min = eigs.minCoeff();
  info.eig_max = eigs.maxCoeff();

  auto h_data = info.hessian;
  auto c_data = info.coupling;
  auto t_data = info.theta_target;
  auto s_data = info.lambda_target;

  ScalarField inner(
      dim_lambda, dim_theta,
      [h_data, c_data, dim_theta, dim_lambda](std::span<const ad::Ad> lam,
                                              std::span<const ad::Ad> th,
                                              std::span<const double>) {
        ad::Ad acc = 0.0;
        for (std::size_t i = 0; i < dim_theta; ++i) {
          ad::Ad row = 0.0;
          for (std::size_t j = 0; j < dim_theta; ++j)
            row += h_data[i * dim_theta + j] * th[j];
          acc += 0.5 * (th[i] * row);
        }
        for (std::size_t i = 0; i < dim_lambda; ++i) {
          ad::Ad row = 0.0;
          for (std::size_t j = 0; j < dim_theta; ++j)
            row += c_data[i * dim_theta + j] * th[j];
          acc += lam[i] * row;
        }
        return acc;
      });

  ScalarField outer(
      dim_lambda, dim_theta,
      [t_data, s_data, dim_theta, dim_lambda](std::span<const ad::Ad> lam,
                                              std::span<const ad::Ad> th,
                                              std::span<const double>) {
        ad::Ad acc = 0.0;
        for (std::size_t i = 0; i < dim_theta; ++i) {
          ad::Ad d = th[i] - t_data[i];
          acc += 0.5 * (d * d);
        }
        for (std::size_t i = 0; i < dim_lambda; ++i) {
          ad::Ad d = lam[i] - s_data[i];
          acc += 0.5 * (d * d);
        }
        return acc;
      });

  BloProblem problem(std::move(outer), std::move(inner), temperature,
                     InitPolicy::independent_fixed(
                         FlatVector::zeros(Space::Theta, dim_theta)));
  problem.set_known_solution(info.lambda_star(),
                             info.theta_star(info.lambda_star()));
  return QuadraticBlo{std::move(problem), std::move(info)};
}

// ---------------------------------------------------------------------------
// tiny MLP with per-weight L1
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kIn = 2, kHidden = 10, kOut = 2;
constexpr std::size_t kMlpDim = kIn * kHidden + kHidden + kHidden * kOut;  // 50
constexpr std::size_t kTrainN = 64, kValN = 64;

struct Dataset {
  std::vector<double> x;  // row-major n x 2
  std::vector<int> y;
};

Dataset make_blobs(Rng& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 0.8);
  Dataset d;
  d.x.resize(n * 2);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double cx = label == 0 ? -1.2 : 1.2;
    const double cy = label == 0 ? -1.2 : 1.2;
    d.x[i * 2] = cx + gauss(rng);
    d.x[i * 2 + 1] = cy + gauss(rng);
    d.y[i] = label;
  }
  return d;
}

ad::Ad mlp_cross_entropy(std::span<const ad::Ad> th, const Dataset& data) {
  ad::Ad total = 0.0;
  const std::size_t n = data.y.size();
  for (std::size_t s = 0; s < n; ++s) {
    const double x0 = data.x[s * 2], x1 = data.x[s * 2 + 1];
    std::vector<ad::Ad> hidden(kHidden);
    for (std::size_t i = 0; i < kHidden; ++i) {
      ad::Ad z = th[i * kIn] * x0 + th[i * kIn + 1] * x1 + th[kIn * kHidden + i];
      hidden[i] = tanh(z);
    }
    std::vector<ad::Ad> logits(kOut);
    const std::size_t w2_off = kIn * kHidden + kHidden;
    for (std::size_t o = 0; o < kOut; ++o) {
      ad::Ad z = 0.0;
      for (std::size_t i = 0; i < kHidden; ++i) z += th[w2_off + o * kHidden + i] * hidden[i];
      logits[o] = z;
    }
    total += ad::logsumexp(logits) - logits[static_cast<std::size_t>(data.y[s])];
  }
  return total / static_cast<double>(n);
}

}  // namespace

BloProblem make_tiny_mlp_l1(std::uint64_t seed, double temperature) {
  Rng rng(seed);
  const Dataset train = make_blobs(rng, kTrainN);
  const Dataset val = make_blobs(rng, kValN);

  ScalarField inner(
      kMlpDim, kMlpDim,
      [train](std::span<const ad::Ad> lam, std::span<const ad::Ad> th,
              std::span<const double>) {
        ad::Ad loss = mlp_cross_entropy(th, train);
        for (std::size_t j = 0; j < kMlpDim; ++j)
          loss += ad::softplus(lam[j]) * abs(th[j]);
        return loss;
      });
  ScalarField outer(kMlpDim, kMlpDim,
                    [val](std::span<const ad::Ad>, std::span<const ad::Ad> th,
                          std::span<const double>) {
                      return mlp_cross_entropy(th, val);
                    });

  std::normal_distribution<double> gauss(0.0, 0.5);
  std::vector<double> theta0(kMlpDim);
  for (double& w : theta0) w = gauss(rng);
  return BloProblem(std::move(outer), std::move(inner), temperature,
                    InitPolicy::independent_fixed(
                        FlatVector(Space::Theta, std::move(theta0))));
}

std::vector<std::string> problem_names() {
  return {"synth1d", "noisy-synth1d", "poly-toy", "quadratic", "tiny-mlp-l1"};
}

}  // namespace blopt
