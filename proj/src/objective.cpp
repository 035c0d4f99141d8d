#include "mce/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mce/compute.hpp"
#include "mce/linalg.hpp"

namespace mce {

double cross_entropy_clipped(double f_y, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("cross_entropy_clipped: epsilon must lie in (0, 1)");
  }
  return -std::log(std::clamp(f_y, epsilon, 1.0));
}

double cross_entropy_clipped(int label, const Eigen::VectorXd& p, double epsilon) {
  return cross_entropy_clipped(p[label], epsilon);
}

namespace {

double frob_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

// f_i = y_i^T p_i for one-hot rows
Eigen::VectorXd picked_probs(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& P) {
  return (Y.array() * P.array()).rowwise().sum().matrix();
}

double mean_clipped_loss(const Eigen::VectorXd& f, double epsilon) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    acc += cross_entropy_clipped(f[i], epsilon);
  }
  return acc / static_cast<double>(f.size());
}

// d(mean loss)/dP: -(1/n) y_ic / f_i strictly inside the clip interval, else 0
Eigen::MatrixXd loss_sensitivity(const Eigen::MatrixXd& Y, const Eigen::VectorXd& f,
                                 double epsilon) {
  const double inv_n = 1.0 / static_cast<double>(f.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    if (f[i] > epsilon && f[i] < 1.0) {
      G.row(i) = Y.row(i) * (-inv_n / f[i]);
    }
  }
  return G;
}

void check_batches(const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Yt,
                   const Eigen::MatrixXd* Xv, const Eigen::MatrixXd* Yv) {
  if (Xt.rows() < 1) throw std::invalid_argument("objective: batch must be nonempty");
  if (Xt.rows() != Yt.rows()) throw std::invalid_argument("objective: X/Y row mismatch");
  if (Xv) {
    if (Xv->rows() < 1) throw std::invalid_argument("objective: validation sub-batch is empty");
    if (Xv->rows() != Yv->rows()) throw std::invalid_argument("objective: X/Y row mismatch");
    if (Xv->cols() != Xt.cols()) throw std::invalid_argument("objective: attribute mismatch");
  }
}

void check_finite(const Eigen::VectorXd& grad) {
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::runtime_error("grad_objective: non-finite gradient entry at parameter index " +
                               std::to_string(i));
    }
  }
}

// Shared state of one implicit-path evaluation. X_val == nullptr means
// single-batch mode (risk on the fitting batch itself).
struct ImplicitEval {
  Eigen::Index n_t = 0;
  Eigen::MatrixXd K_tt;   // batch gram
  Eigen::MatrixXd K_vt;   // validation cross-gram (empty in single-batch mode)
  Eigen::MatrixXd Z_t;    // features (linear_features only)
  Eigen::MatrixXd Z_v;
  FeatureForward bundle_t;
  FeatureForward bundle_v;
  CholFactor chol;
  Eigen::MatrixXd V;      // (K + n lambda I)^{-1} Y
  Eigen::MatrixXd P_t;    // K_tt V
  Eigen::MatrixXd P_v;    // risk-side probabilities
  Eigen::VectorXd f;
  double t = 0.0;         // trace(V^T K V)
  double alpha = 0.0;
  int alpha_row = -1;     // argmax feature-norm row (linear_features)
  ObjectiveValue value;
};

ImplicitEval eval_implicit(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& Xt,
                           const Eigen::MatrixXd& Yt, const Eigen::MatrixXd* Xv,
                           const Eigen::MatrixXd* Yv, const LossConfig& cfg,
                           bool need_gradient_state) {
  check_batches(Xt, Yt, Xv, Yv);
  ImplicitEval ev;
  ev.n_t = Xt.rows();

  const bool linear = spec.variant == KernelVariant::linear_features;
  if (linear) {
    ev.Z_t = feature_forward(*spec.feature_map, Xt, need_gradient_state ? &ev.bundle_t : nullptr);
    ev.K_tt.setZero(ev.n_t, ev.n_t);
    ev.K_tt.selfadjointView<Eigen::Lower>().rankUpdate(ev.Z_t);
    compute::symmetrize_from_lower(ev.K_tt);
    Eigen::Index best = 0;
    const Eigen::VectorXd norms = ev.Z_t.rowwise().norm();
    ev.alpha = norms.maxCoeff(&best);
    ev.alpha_row = static_cast<int>(best);
  } else {
    ev.K_tt = gram(spec, Xt);
    ev.alpha = spec.sigma_f();
  }

  ev.chol = cholesky_psd_shifted(ev.K_tt, static_cast<double>(ev.n_t) * lambda);
  ev.V = solve_chol(ev.chol, Yt);
  ev.P_t = ev.K_tt * ev.V;

  const Eigen::MatrixXd* Yr = &Yt;
  if (Xv) {
    if (linear) {
      ev.Z_v = feature_forward(*spec.feature_map, *Xv, need_gradient_state ? &ev.bundle_v : nullptr);
      ev.K_vt = ev.Z_v * ev.Z_t.transpose();
    } else {
      ev.K_vt = cross_gram(spec, Xt, *Xv);
    }
    ev.P_v = ev.K_vt * ev.V;
    Yr = Yv;
  } else {
    ev.P_v = ev.P_t;
  }

  ev.f = picked_probs(*Yr, ev.P_v);
  ev.t = frob_dot(ev.V, ev.P_t);
  ev.value.empirical_risk = mean_clipped_loss(ev.f, cfg.epsilon);
  ev.value.rcb = ev.alpha * std::sqrt(std::max(ev.t, 0.0));
  ev.value.q = ev.value.empirical_risk + cfg.tau * ev.value.rcb;
  return ev;
}

ObjectiveGrad grad_implicit(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& Xt,
                            const Eigen::MatrixXd& Yt, const Eigen::MatrixXd* Xv,
                            const Eigen::MatrixXd* Yv, const LossConfig& cfg) {
  ImplicitEval ev = eval_implicit(spec, lambda, Xt, Yt, Xv, Yv, cfg, true);
  const bool linear = spec.variant == KernelVariant::linear_features;
  const bool validated = Xv != nullptr;
  const Eigen::MatrixXd& Yr = validated ? *Yv : Yt;

  const Eigen::MatrixXd G = loss_sensitivity(Yr, ev.f, cfg.epsilon);
  // H = A^{-1} K_vt^T G and U = A^{-1} K_tt V through one batched solve;
  // in single-batch mode K_vt == K_tt (symmetric)
  const Eigen::Index m = Yt.cols();
  Eigen::MatrixXd rhs(ev.n_t, 2 * m);
  rhs.leftCols(m) = validated ? Eigen::MatrixXd(ev.K_vt.transpose() * G)
                              : Eigen::MatrixXd(ev.K_tt * G);
  rhs.rightCols(m) = ev.P_t;
  const Eigen::MatrixXd HU = solve_chol(ev.chol, rhs);
  const Eigen::MatrixXd H = HU.leftCols(m);
  const Eigen::MatrixXd U = HU.rightCols(m);

  const double sqrt_t = std::sqrt(std::max(ev.t, 0.0));
  const double c_r = (cfg.tau != 0.0 && ev.t > 0.0) ? cfg.tau * ev.alpha / (2.0 * sqrt_t) : 0.0;

  // K_tt sensitivity as a rank-m product C V^T
  Eigen::MatrixXd C = -H + c_r * (ev.V - 2.0 * U);
  if (!validated) C += G;

  const double n_lambda = static_cast<double>(ev.n_t) * lambda;
  const double grad_log_lambda =
      -n_lambda * (frob_dot(H, ev.V) + 2.0 * c_r * frob_dot(U, ev.V));

  Eigen::VectorXd grad(spec.param_count() + 1);

  if (linear) {
    // dK_tt = dZ Z^T + Z dZ^T pulled back through the feature map
    Eigen::MatrixXd dZ_t = C * (ev.V.transpose() * ev.Z_t) + ev.V * (C.transpose() * ev.Z_t);
    if (validated) {
      const Eigen::MatrixXd dZ_v = G * (ev.V.transpose() * ev.Z_t);
      dZ_t += ev.V * (G.transpose() * ev.Z_v);
      if (ev.alpha > 0.0 && cfg.tau != 0.0 && ev.t > 0.0) {
        dZ_t.row(ev.alpha_row) +=
            (cfg.tau * sqrt_t / ev.alpha) * ev.Z_t.row(ev.alpha_row);
      }
      const Eigen::VectorXd g_map =
          feature_backward(ev.bundle_t, dZ_t) + feature_backward(ev.bundle_v, dZ_v);
      grad.head(spec.param_count()) = g_map;
    } else {
      if (ev.alpha > 0.0 && cfg.tau != 0.0 && ev.t > 0.0) {
        dZ_t.row(ev.alpha_row) +=
            (cfg.tau * sqrt_t / ev.alpha) * ev.Z_t.row(ev.alpha_row);
      }
      grad.head(spec.param_count()) = feature_backward(ev.bundle_t, dZ_t);
    }
  } else {
    // <C V^T, K> collapses to <C, K V>; the per-dimension reduction streams
    // K once instead of materializing (C V^T) .* K
    double k_sens = frob_dot(C, ev.P_t);
    Eigen::VectorXd per_dim = compute::lowrank_weighted_sqdist_grad(C, ev.V, ev.K_tt, Xt, Xt);
    if (validated) {
      k_sens += frob_dot(G, ev.P_v);
      per_dim += compute::lowrank_weighted_sqdist_grad(G, ev.V, ev.K_vt, *Xv, Xt);
    }
    grad[0] = 2.0 * k_sens + cfg.tau * sqrt_t * ev.alpha;  // log sigma_f
    const Eigen::VectorXd w = sqdist_weights(spec, Xt.cols());
    if (spec.variant == KernelVariant::gaussian_iso) {
      grad[1] = per_dim.sum() * w[0];
    } else {
      grad.segment(1, Xt.cols()) = per_dim.cwiseProduct(w);
    }
  }

  grad[grad.size() - 1] = grad_log_lambda;
  check_finite(grad);
  return ObjectiveGrad{ev.value, std::move(grad)};
}

// --- explicit-feature path ---------------------------------------------

struct ExplicitEval {
  Eigen::Index n_t = 0;
  Eigen::MatrixXd Z_t;
  Eigen::MatrixXd Z_v;
  FeatureForward bundle_t;
  FeatureForward bundle_v;
  CholFactor chol;        // of Z^T Z + n lambda I_p
  Eigen::MatrixXd W;      // p x m
  Eigen::MatrixXd P_t;    // Z_t W
  Eigen::MatrixXd P_v;
  Eigen::VectorXd f;
  double s = 0.0;         // ||W||_F^2
  double alpha = 0.0;
  int alpha_row = -1;
  ObjectiveValue value;
};

ExplicitEval eval_explicit(const FeatureMap& map, double lambda, const Eigen::MatrixXd& Xt,
                           const Eigen::MatrixXd& Yt, const Eigen::MatrixXd* Xv,
                           const Eigen::MatrixXd* Yv, const LossConfig& cfg,
                           bool need_gradient_state) {
  check_batches(Xt, Yt, Xv, Yv);
  ExplicitEval ev;
  ev.n_t = Xt.rows();
  ev.Z_t = feature_forward(map, Xt, need_gradient_state ? &ev.bundle_t : nullptr);

  const Eigen::Index p = ev.Z_t.cols();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
  B.selfadjointView<Eigen::Lower>().rankUpdate(ev.Z_t.transpose());
  compute::symmetrize_from_lower(B);
  ev.chol = cholesky_psd_shifted(B, static_cast<double>(ev.n_t) * lambda);
  ev.W = solve_chol(ev.chol, ev.Z_t.transpose() * Yt);
  ev.P_t = ev.Z_t * ev.W;

  const Eigen::MatrixXd* Yr = &Yt;
  if (Xv) {
    ev.Z_v = feature_forward(map, *Xv, need_gradient_state ? &ev.bundle_v : nullptr);
    ev.P_v = ev.Z_v * ev.W;
    Yr = Yv;
  } else {
    ev.P_v = ev.P_t;
  }

  Eigen::Index best = 0;
  ev.alpha = ev.Z_t.rowwise().norm().maxCoeff(&best);
  ev.alpha_row = static_cast<int>(best);
  ev.s = ev.W.squaredNorm();
  ev.f = picked_probs(*Yr, ev.P_v);
  ev.value.empirical_risk = mean_clipped_loss(ev.f, cfg.epsilon);
  ev.value.rcb = ev.alpha * std::sqrt(ev.s);
  ev.value.q = ev.value.empirical_risk + cfg.tau * ev.value.rcb;
  return ev;
}

ObjectiveGrad grad_explicit(const FeatureMap& map, double lambda, const Eigen::MatrixXd& Xt,
                            const Eigen::MatrixXd& Yt, const Eigen::MatrixXd* Xv,
                            const Eigen::MatrixXd* Yv, const LossConfig& cfg) {
  ExplicitEval ev = eval_explicit(map, lambda, Xt, Yt, Xv, Yv, cfg, true);
  const bool validated = Xv != nullptr;
  const Eigen::MatrixXd& Yr = validated ? *Yv : Yt;
  const Eigen::MatrixXd& Z_r = validated ? ev.Z_v : ev.Z_t;

  const Eigen::MatrixXd G = loss_sensitivity(Yr, ev.f, cfg.epsilon);
  const Eigen::MatrixXd E = solve_chol(ev.chol, Z_r.transpose() * G);
  const Eigen::MatrixXd D = solve_chol(ev.chol, ev.W);

  const double sqrt_s = std::sqrt(ev.s);
  const double c = (cfg.tau != 0.0 && ev.s > 0.0) ? cfg.tau * ev.alpha / (2.0 * sqrt_s) : 0.0;

  // risk through W plus the RCB pullback, both supported on the fit batch
  Eigen::MatrixXd dZ_t = (Yt - ev.P_t) * (E + 2.0 * c * D).transpose() -
                         ev.Z_t * (E * ev.W.transpose() + 2.0 * c * D * ev.W.transpose());
  if (ev.alpha > 0.0 && cfg.tau != 0.0 && ev.s > 0.0) {
    dZ_t.row(ev.alpha_row) += (cfg.tau * sqrt_s / ev.alpha) * ev.Z_t.row(ev.alpha_row);
  }

  const double n_lambda = static_cast<double>(ev.n_t) * lambda;
  const double grad_log_lambda =
      -n_lambda * (frob_dot(E, ev.W) + 2.0 * c * frob_dot(D, ev.W));

  Eigen::VectorXd g_map;
  if (validated) {
    const Eigen::MatrixXd dZ_v = G * ev.W.transpose();
    g_map = feature_backward(ev.bundle_t, dZ_t) + feature_backward(ev.bundle_v, dZ_v);
  } else {
    dZ_t += G * ev.W.transpose();
    g_map = feature_backward(ev.bundle_t, dZ_t);
  }

  Eigen::VectorXd grad(g_map.size() + 1);
  grad.head(g_map.size()) = g_map;
  grad[grad.size() - 1] = grad_log_lambda;
  check_finite(grad);
  return ObjectiveGrad{ev.value, std::move(grad)};
}

}  // namespace

ObjectiveValue objective(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X_batch,
                         const Eigen::MatrixXd& Y_batch, const LossConfig& config) {
  return eval_implicit(spec, lambda, X_batch, Y_batch, nullptr, nullptr, config, false).value;
}

ObjectiveValue objective_validated(const KernelSpec& spec, double lambda,
                                   const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                                   const Eigen::MatrixXd& X_val, const Eigen::MatrixXd& Y_val,
                                   const LossConfig& config) {
  return eval_implicit(spec, lambda, X_train, Y_train, &X_val, &Y_val, config, false).value;
}

ObjectiveGrad grad_objective(const KernelSpec& spec, double lambda,
                             const Eigen::MatrixXd& X_batch, const Eigen::MatrixXd& Y_batch,
                             const LossConfig& config) {
  return grad_implicit(spec, lambda, X_batch, Y_batch, nullptr, nullptr, config);
}

ObjectiveGrad grad_objective_validated(const KernelSpec& spec, double lambda,
                                       const Eigen::MatrixXd& X_train,
                                       const Eigen::MatrixXd& Y_train,
                                       const Eigen::MatrixXd& X_val,
                                       const Eigen::MatrixXd& Y_val, const LossConfig& config) {
  return grad_implicit(spec, lambda, X_train, Y_train, &X_val, &Y_val, config);
}

ObjectiveValue objective_explicit(const FeatureMap& map, double lambda,
                                  const Eigen::MatrixXd& X_batch, const Eigen::MatrixXd& Y_batch,
                                  const LossConfig& config) {
  return eval_explicit(map, lambda, X_batch, Y_batch, nullptr, nullptr, config, false).value;
}

ObjectiveValue objective_explicit_validated(const FeatureMap& map, double lambda,
                                            const Eigen::MatrixXd& X_train,
                                            const Eigen::MatrixXd& Y_train,
                                            const Eigen::MatrixXd& X_val,
                                            const Eigen::MatrixXd& Y_val,
                                            const LossConfig& config) {
  return eval_explicit(map, lambda, X_train, Y_train, &X_val, &Y_val, config, false).value;
}

ObjectiveGrad grad_objective_explicit(const FeatureMap& map, double lambda,
                                      const Eigen::MatrixXd& X_batch,
                                      const Eigen::MatrixXd& Y_batch, const LossConfig& config) {
  return grad_explicit(map, lambda, X_batch, Y_batch, nullptr, nullptr, config);
}

ObjectiveGrad grad_objective_explicit_validated(const FeatureMap& map, double lambda,
                                                const Eigen::MatrixXd& X_train,
                                                const Eigen::MatrixXd& Y_train,
                                                const Eigen::MatrixXd& X_val,
                                                const Eigen::MatrixXd& Y_val,
                                                const LossConfig& config) {
  return grad_explicit(map, lambda, X_train, Y_train, &X_val, &Y_val, config);
}

}  // namespace mce
