#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rshift/geometry.hpp"
#include "rshift/random.hpp"

namespace rshift {

/// Analytic pair-correlation function: Poisson (g ≡ 1) or LGCP g(r) = exp(σ² e^{-r/s}).
struct PairCorrelation {
  enum class Kind { poisson, lgcp };
  Kind kind = Kind::poisson;
  double variance = 0.0;
  double scale = 1.0;

  static PairCorrelation poisson() { return {}; }
  static PairCorrelation lgcp(double variance, double scale) { return {Kind::lgcp, variance, scale}; }

  bool is_poisson() const { return kind == Kind::poisson || variance == 0.0; }
  double operator()(double r) const;
  std::string describe() const;
};

/// λ-free integrals entering the moments of R and S, one entry per radius.
///
/// Names follow the position of the term: J for var R, K for cov(R, S), G for var S.
struct Theorem2Integrals {
  Eigen::VectorXd r;
  Eigen::VectorXd j2;                 // ∫_{W²} f_r
  Eigen::VectorXd j3_1, j3_2;         // triple terms of var R
  Eigen::VectorXd jw4_var;            // W⁴ bracket term of var R
  Eigen::VectorXd k3_1, k3_2;         // triple terms of cov(R, S)
  Eigen::VectorXd jw4_cov;            // W⁴ bracket term of cov(R, S)
  double g1 = 0.0, g2 = 0.0;          // ∫_{W²} g
  // Monte Carlo standard errors (zero where the value is exact).
  Eigen::VectorXd se_j3_1, se_j3_2, se_jw4_var, se_k3_1, se_k3_2, se_jw4_cov;
  double se_g1 = 0.0, se_g2 = 0.0;
  double area = 0.0;
};

/// Monte Carlo evaluation with `mc_points` samples per integral, ball-indicator f_r.
Theorem2Integrals theorem2_integrals(const PairCorrelation& g1, const PairCorrelation& g2, const Window& w,
                                     const Eigen::VectorXd& r_grid, long mc_points, std::uint64_t seed);

struct Theorem2Moments {
  double mu_r = 0.0, mu_s = 0.0;
  double var_r = 0.0, var_s = 0.0, cov_rs = 0.0;
  double se_var_r = 0.0, se_var_s = 0.0, se_cov_rs = 0.0;
};

/// Moments at radius index j of `integrals`.
Theorem2Moments theorem2_moments(double lambda1, double lambda2, const Theorem2Integrals& integrals,
                                 Eigen::Index j);

/// Single-radius convenience form.
Theorem2Moments theorem2_moments(double lambda1, double lambda2, const PairCorrelation& g1,
                                 const PairCorrelation& g2, double r, const Window& w, long mc_points,
                                 Rng& rng);

/// Delta-method variance of R/S.
double var_ratio_taylor(const Theorem2Moments& m);

/// Integrals tabulated over window sizes (a, b) in [width - reach, width] x [height - reach, height].
///
/// Intersection windows W ∩ (W + v) differ only in size, so one table serves
/// every shift. Nodes share a seed, so the table is smooth in (a, b); values
/// in between are bilinear.
class Theorem2Surface {
 public:
  Theorem2Surface(const PairCorrelation& g1, const PairCorrelation& g2, const Window& base, double reach,
                  const Eigen::VectorXd& r_grid, int nodes, long mc_points, std::uint64_t seed,
                  unsigned workers = 1);

  /// Integrals for a window of the given size.
  Theorem2Integrals at(double width, double height) const;
  // Taylor ratio variance per radius, blended from the four surrounding nodes. Each node value is a
  // variance, so the blend stays non-negative where interpolating the integrals one by one need not.
  Eigen::VectorXd ratio_variance(double lambda1, double lambda2, double width, double height) const;
  const Eigen::VectorXd& r() const { return r_; }

 private:
  PairCorrelation g1_, g2_;
  Eigen::VectorXd r_;
  std::vector<double> widths_, heights_;
  std::vector<Theorem2Integrals> table_;  // index ia + nodes * ib
};

}  // namespace rshift
