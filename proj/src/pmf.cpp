#include "biotcrb/pmf.hpp"

#include <cmath>
#include <sstream>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

AlphabetPmf AlphabetPmf::tabulated(Eigen::VectorXd probs,
                                   std::optional<Eigen::VectorXd> dtheta,
                                   std::optional<Eigen::MatrixXd> dxi) {
  AlphabetPmf pmf{std::move(probs), std::move(dtheta), std::move(dxi)};
  pmf.validate();
  return pmf;
}

void AlphabetPmf::validate() const {
  const auto n = probs.size();
  if (n < 2) {
    raise(ErrorCode::InvalidParameter,
          "pmf needs at least two alphabet symbols, got " + std::to_string(n));
  }
  for (Eigen::Index o = 0; o < n; ++o) {
    const double v = probs[o];
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream msg;
      msg << "pmf entry " << o << " = " << v << " outside [0,1]";
      raise(ErrorCode::InvalidParameter, msg.str());
    }
  }
  const double mass = probs.sum();
  if (std::abs(mass - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "pmf mass " << mass << " deviates from 1 by more than 1e-12";
    raise(ErrorCode::InvalidParameter, msg.str());
  }
  if (dtheta) {
    if (dtheta->size() != n) {
      raise(ErrorCode::InvalidParameter,
            "dtheta length does not match the alphabet size");
    }
    if (std::abs(dtheta->sum()) > 1e-10) {
      raise(ErrorCode::InvalidParameter,
            "dtheta column must sum to 0 within 1e-10 (mass conservation)");
    }
  }
  if (dxi) {
    if (dxi->rows() != n) {
      raise(ErrorCode::InvalidParameter,
            "dxi row count does not match the alphabet size");
    }
    for (Eigen::Index k = 0; k < dxi->cols(); ++k) {
      if (std::abs(dxi->col(k).sum()) > 1e-10) {
        raise(ErrorCode::InvalidParameter,
              "dxi column " + std::to_string(k) +
                  " must sum to 0 within 1e-10 (mass conservation)");
      }
    }
  }
}

std::vector<std::string> AlphabetPmf::warnings() const {
  std::vector<std::string> notes;
  for (Eigen::Index o = 0; o < probs.size(); ++o) {
    if (probs[o] < 1e-12) {
      std::ostringstream msg;
      msg << "pmf entry " << o << " = " << probs[o]
          << " is below 1e-12; weight ratios may lose precision";
      notes.push_back(msg.str());
    }
  }
  return notes;
}

AlphabetPmf injection_attack_pmf(double theta, const Eigen::VectorXd& xi,
                                 double threshold, double noise_std) {
  if (xi.size() != 1) {
    raise(ErrorCode::InvalidParameter,
          "injection attack pmf expects a 1-dimensional xi, got " +
              std::to_string(xi.size()));
  }
  if (!(noise_std > 0.0)) {
    raise(ErrorCode::InvalidParameter, "noise std must be positive");
  }
  const double z = (threshold - theta - xi[0]) / noise_std;
  // Both tails through erfc so neither entry loses relative precision.
  const double p0 = normal_cdf(z);
  const double p1 = normal_cdf(-z);
  const double slope = -normal_pdf(z) / noise_std;  // d p0 / d theta
  AlphabetPmf pmf;
  pmf.probs = Eigen::Vector2d(p0, p1);
  pmf.dtheta = Eigen::Vector2d(slope, -slope);
  pmf.dxi = Eigen::MatrixXd(2, 1);
  (*pmf.dxi)(0, 0) = slope;
  (*pmf.dxi)(1, 0) = -slope;
  return pmf;
}

AlphabetPmf gaussian_quantizer_pmf(double theta, double threshold,
                                   double noise_std) {
  // Same arithmetic path as the injection pmf at xi = 0, so the two agree
  // bitwise there; the honest model just has no xi column.
  AlphabetPmf pmf = injection_attack_pmf(theta, Eigen::VectorXd::Zero(1),
                                         threshold, noise_std);
  pmf.dxi.reset();
  return pmf;
}

PmfFamily gaussian_quantizer_family(double threshold, double noise_std) {
  return [threshold, noise_std](double theta, const Eigen::VectorXd&) {
    return gaussian_quantizer_pmf(theta, threshold, noise_std);
  };
}

PmfFamily injection_attack_family(double threshold, double noise_std) {
  return [threshold, noise_std](double theta, const Eigen::VectorXd& xi) {
    return injection_attack_pmf(theta, xi, threshold, noise_std);
  };
}

FdPartials finite_difference_partials(const PmfFamily& family, double theta,
                                      const Eigen::VectorXd& xi, double step) {
  if (!(step > 0.0)) {
    raise(ErrorCode::InvalidParameter, "finite difference step must be > 0");
  }
  const Eigen::VectorXd base = family(theta, xi).probs;
  FdPartials out;
  out.dtheta = (family(theta + step, xi).probs -
                family(theta - step, xi).probs) /
               (2.0 * step);
  out.dxi.resize(base.size(), xi.size());
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    Eigen::VectorXd hi = xi, lo = xi;
    hi[k] += step;
    lo[k] -= step;
    out.dxi.col(k) =
        (family(theta, hi).probs - family(theta, lo).probs) / (2.0 * step);
  }
  return out;
}

}  // namespace biotcrb
