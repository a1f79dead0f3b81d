#pragma once

#include <memory>

#include "spg/checks.hpp"
#include "spg/game.hpp"
#include "spg/optimizer.hpp"
#include "spg/poly.hpp"

namespace spg {

// Scalar potential estimate over the concatenated (state, joint action)
// input. The additive offset exists because derivative-based fitting leaves
// the constant free; canonicalize() pins it at a reference point.
class PotentialModel {
 public:
  PotentialModel() = default;
  explicit PotentialModel(std::unique_ptr<Model> body) : body_(std::move(body)) {}
  PotentialModel(const PotentialModel& o)
      : body_(o.body_ ? o.body_->clone() : nullptr), offset_(o.offset_) {}
  PotentialModel& operator=(const PotentialModel& o) {
    body_ = o.body_ ? o.body_->clone() : nullptr;
    offset_ = o.offset_;
    return *this;
  }
  PotentialModel(PotentialModel&&) = default;
  PotentialModel& operator=(PotentialModel&&) = default;

  static PotentialModel poly(const GameSpec& game, int degree = 2);
  static PotentialModel dense(const GameSpec& game, std::vector<int> hidden,
                              Rng& rng);

  Model& body() { return *body_; }
  const Model& body() const { return *body_; }
  bool valid() const { return static_cast<bool>(body_); }
  double offset() const { return offset_; }

  double value(const Vec& s, const Vec& a) const;
  // d phi / d a (joint) and d phi / d s.
  void input_grad(const Vec& s, const Vec& a, Vec* da, Vec* ds) const;

  void canonicalize(const Vec& s_ref, const Vec& a_ref);

  // Potential evaluated as a closure; offset included.
  PotentialFn as_fn() const;

 private:
  std::unique_ptr<Model> body_;
  double offset_ = 0.0;
};

// Source of dR_i/da and dR_i/ds for the residual objective.
using RewardGradFn =
    std::function<void(const Vec& s, const Vec& a, int i, Vec* da, Vec* ds)>;

// ---- Reward models (derivative source when the env has no oracle) ----

struct RewardFitConfig {
  int poly_degree = 2;          // poly_degree > 0 selects the poly body
  std::vector<int> hidden;      // dense body when non-empty
  int epochs = 2000;
  double lr = 1e-2;
  double holdout_fraction = 0.2;
};

struct RewardModelSet {
  std::vector<PotentialModel> models;  // one scalar model per agent
  Vec holdout_mse;

  RewardGradFn grad_fn() const;
};

RewardModelSet fit_reward_models(const GameSpec& game,
                                 const std::vector<TransitionSample>& data,
                                 const RewardFitConfig& cfg, Rng& rng);

// Picks the env oracle when present, otherwise the fitted models.
RewardGradFn reward_grad_source(const GameSpec& game,
                                const RewardModelSet* fitted);

// ---- Residual objective ----

enum class ResidualMode { kGradient, kDifference };

struct ResidualConfig {
  ResidualMode mode = ResidualMode::kGradient;
  int probes = 64;        // (eta, s) points drawn from nu
  int mc_actions = 16;    // joint action draws per probe
  int iterations = 3000;
  double sigma_eps = 0.2;
  double lr = 0.05;
  OptKind opt_kind = OptKind::kAdam;
  double stop_grad_norm = 1e-5;
  double shrink = 0.9;  // probe boxes shrink toward the box center
};

// One probe point: Gaussian-mean parameters per agent plus a state, with the
// noise draws frozen so the objective is deterministic.
struct Probe {
  Vec s;
  Vec eta;                // joint pre-noise action means
  std::vector<Vec> z;     // mc_actions frozen standard normal draws
};

std::vector<Probe> draw_probes(const GameSpec& game, const ResidualConfig& cfg,
                               Rng& rng);

// Monte-Carlo residual g^i at one probe: flattened outer product of the
// Gaussian score with the stacked own-action and state derivative blocks of
// R_i - phi.
Vec residual_gi(const GameSpec& game, int agent, const Probe& probe,
                const PotentialModel& phi, const RewardGradFn& reward_grads,
                const ResidualConfig& cfg);

// Mean over probes of N^{-1} sum_i ||g^i||^2; optional gradient w.r.t. the
// potential parameters. agent_filter >= 0 restricts the sum to one agent.
double residual_objective(const GameSpec& game,
                          const std::vector<Probe>& probes,
                          const PotentialModel& phi,
                          const RewardGradFn& reward_grads,
                          const ResidualConfig& cfg, Vec* grad,
                          int agent_filter = -1);

// ---- Estimation driver ----

struct EstimationResult {
  PotentialModel phi;
  Vec loss_trace;
  Vec grad_norm_trace;
  int iterations = 0;
  bool converged = false;  // hit the gradient-norm stop
};

// Descent on the residual objective over a frozen probe pool. Throws when the
// loss diverges past 1e6. The returned model is canonicalized to zero at the
// box-center reference point.
EstimationResult estimate_potential(const GameSpec& game, PotentialModel init,
                                    const ResidualConfig& cfg,
                                    const RewardGradFn& reward_grads, Rng& rng);

// JSON report: {mode, iterations, final_loss, coefficients?}.
std::string estimation_report(const EstimationResult& res,
                              const ResidualConfig& cfg);

// ---- Smoothed-deviation probe ----

// For each sigma: |[F(a_dev) - F(a)] - [E F(a_dev + sz) - E F(a + sz)]|
// with common random numbers across the sigma list.
Vec nascent_bound_probe(const std::function<double(const Vec&)>& F,
                        const Vec& a, const Vec& a_dev, const Vec& sigmas,
                        int n_samples, Rng& rng);

}  // namespace spg
