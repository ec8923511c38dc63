#ifndef DEFORMGP_OBJECTIVE_HPP
#define DEFORMGP_OBJECTIVE_HPP

#include <memory>
#include <optional>
#include <vector>

#include "deformgp/covariance.hpp"
#include "deformgp/tiling.hpp"
#include "deformgp/warp.hpp"

namespace deformgp {

// A log-likelihood surface to maximize. `value`/`gradient` may include
// non-quadratic penalty terms (e.g. fold penalties); `data_value` and
// `data_gradient` expose the raw data log-likelihood used by the AIC.
class Objective {
public:
  virtual ~Objective() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const Eigen::VectorXd& beta) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const = 0;
  virtual double data_value(const Eigen::VectorXd& beta) const { return value(beta); }
  virtual Eigen::VectorXd data_gradient(const Eigen::VectorXd& beta) const {
    return gradient(beta);
  }
  virtual bool differentiable() const { return true; }
};

struct PenaltyBlock {
  Eigen::Index offset;
  Eigen::MatrixXd S;
};

// objective minus the quadratic roughness penalty 0.5 beta' S_lambda beta
class PenalizedObjective {
public:
  PenalizedObjective(const Objective& base, std::vector<PenaltyBlock> blocks,
                     Eigen::VectorXd lambda);

  Eigen::Index dim() const { return base_->dim(); }
  double value(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const;

  double penalty_quadform(const Eigen::VectorXd& beta) const;
  Eigen::MatrixXd s_lambda() const; // assembled, dim x dim

  const Objective& base() const { return *base_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  const std::vector<PenaltyBlock>& blocks() const { return blocks_; }

private:
  const Objective* base_;
  std::vector<PenaltyBlock> blocks_;
  Eigen::VectorXd lambda_;
};

// Gaussian-process likelihood of the warped-coordinate model, optionally
// with a fold penalty on a triangular tiling (deformation family only).
class WarpObjective : public Objective {
public:
  WarpObjective(const WarpModel& model, const Eigen::MatrixXd& station_pts,
                const SampleMoments& moments);

  // attaches the fold penalty; throws for non-deformation families
  void set_fold_penalty(const Tiling& tiling, const FoldPenaltyConfig& config);

  Eigen::Index dim() const override { return model_->dim(); }
  double value(const Eigen::VectorXd& beta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const override;
  double data_value(const Eigen::VectorXd& beta) const override;
  Eigen::VectorXd data_gradient(const Eigen::VectorXd& beta) const override;
  bool differentiable() const override;

  const WarpModel& model() const { return *model_; }
  bool has_fold_penalty() const { return fold_config_.has_value(); }
  const FoldPenaltyConfig& fold_config() const { return *fold_config_; }

  Eigen::VectorXd tiling_areas(const Eigen::VectorXd& beta) const;
  int tiling_fold_count(const Eigen::VectorXd& beta) const;

private:
  const WarpModel* model_;
  WarpDesign design_;
  SampleMoments moments_;

  std::optional<FoldPenaltyConfig> fold_config_;
  WarpDesign tile_design_;
  std::vector<std::array<int, 3>> tile_index_;

  double fold_value(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd fold_gradient(const Eigen::VectorXd& beta) const;
};

// spec-facing helpers: l_p0 = l(beta) - penalty, l_p1 = l_p0 - delta h(areas)
double penalized_loglik_p0(const WarpObjective& obj, const std::vector<PenaltyBlock>& blocks,
                           const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta);
double penalized_loglik_p1(const WarpObjective& obj, const std::vector<PenaltyBlock>& blocks,
                           const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta);

} // namespace deformgp

#endif
