#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "dmgnn/adversary.hpp"
#include "dmgnn/classifier.hpp"
#include "dmgnn/encoder.hpp"
#include "dmgnn/graph.hpp"
#include "dmgnn/numerics.hpp"
#include "dmgnn/proximity.hpp"

namespace dmgnn {

struct Ablation {
  bool no_fe1 = false;
  bool no_fe2 = false;
  bool no_feat_prop = false;
  bool no_label_prop = false;
  bool no_discriminator = false;

  EncoderAblation encoder() const { return {no_fe1, no_fe2}; }
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct TrainConfig {
  std::size_t K = 3;
  std::size_t embed_dim = 128;
  std::vector<std::size_t> hidden{512, 128};
  std::vector<std::size_t> disc_hidden{128, 128};
  double beta = 0.1;
  std::size_t batch_size = 100;
  double mu0 = 0.02;
  double momentum = 0.9;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  Ablation ablation;
  bool multi_label = false;
  bool normalize_attrs = false;

  /// Throws ValidationError on an odd batch size, negative beta, zero epochs etc.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Shapes of every trainable group, derived from a TrainConfig and dataset.
struct ModelConfig {
  EncoderConfig encoder;
  DiscriminatorConfig discriminator;
  std::size_t num_labels = 0;
  LabelMode mode = LabelMode::MultiClass;

  Activation phi() const { return activation_for(mode); }
  static ModelConfig from(const TrainConfig& cfg, std::size_t num_attrs, std::size_t num_labels);
};

ParamStore init_model(const ModelConfig& model, std::uint64_t seed);

struct Schedule {
  double lr;
  double lambda;
};

/// lr = mu0 / (1 + 10 i)^0.75, lambda = 2 / (1 + exp(-10 i)) - 1.
Schedule schedules(double progress, double mu0);

struct Minibatch {
  std::vector<NodeId> source;
  std::vector<NodeId> target;
};

/// Balanced mini-batches. An epoch is one pass over the larger network;
/// each network is consumed in shuffled order and reshuffled when it runs
/// out, so the smaller one cycles. Both orders are reshuffled at every
/// epoch start.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t num_source, std::size_t num_target, std::size_t batch_size,
                   std::uint64_t seed);

  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  Minibatch next();

 private:
  struct Stream {
    std::vector<NodeId> order;
    std::size_t pos = 0;
  };
  void take(Stream& s, std::size_t count, std::vector<NodeId>& out);
  void reshuffle(Stream& s);

  std::size_t half_;
  std::size_t batches_per_epoch_;
  std::size_t batch_in_epoch_ = 0;
  std::mt19937_64 rng_;
  Stream source_;
  Stream target_;
};

/// Label-masked source weights and plain target weights, restricted to the
/// batch nodes and renormalized.
std::pair<PropagationWeights, PropagationWeights> batch_weights(const ProximityMatrix& source,
                                                                const ProximityMatrix& target,
                                                                const Minibatch& batch,
                                                                const LabelMatrix& source_labels);

/// Everything one objective evaluation needs, already gathered per batch.
struct BatchInputs {
  Matrix source_attrs;
  Matrix source_neighbor_attrs;
  Matrix target_attrs;
  Matrix target_neighbor_attrs;
  PropagationWeights source_weights;  // label-masked
  PropagationWeights target_weights;
  Matrix source_labels;
};

struct ObjectiveValues {
  double loss_y = 0.0;
  double loss_f = 0.0;
  double loss_d = 0.0;
  /// L_Y + beta L_F - lambda L_D: the quantity θ_F and θ_Y descend.
  double encoder_objective = 0.0;
};

struct ObjectiveGradients {
  ObjectiveValues values;
  Gradients task;         // from L_Y + beta L_F
  Gradients adversarial;  // L_D path into θ_F and θ_Y, after the reversal layer
  Gradients discriminator;
  Gradients total;  // task + adversarial + discriminator
};

ObjectiveValues evaluate_objective(const ParamStore& store, const ModelConfig& model,
                                   const BatchInputs& batch, double beta, double lambda,
                                   const Ablation& ablation);

/// Analytic gradients of the minmax objective on one batch. With `reversal`
/// off the adversarial group holds the plain dL_D gradient instead of the
/// reversed -lambda dL_D.
ObjectiveGradients objective_gradients(const ParamStore& store, const ModelConfig& model,
                                       const BatchInputs& batch, double beta, double lambda,
                                       const Ablation& ablation, bool reversal = true);

struct IterationLog {
  std::size_t iter = 0;
  double lr = 0.0;
  double lambda = 0.0;
  double loss_y = 0.0;
  double loss_f = 0.0;
  double loss_d = 0.0;
};

/// Inputs precomputed once per dataset pair.
struct PreparedPair {
  DatasetPair pair;
  ProximityMatrix source_ppmi;
  ProximityMatrix target_ppmi;
  SparseMatrix source_neighbor_attrs;
  SparseMatrix target_neighbor_attrs;
};

PreparedPair prepare_pair(const DatasetPair& pair, const TrainConfig& cfg);

BatchInputs gather_batch(const PreparedPair& data, const Minibatch& batch);

struct TrainState {
  ParamStore params;
  std::size_t iteration = 0;
  std::size_t total_iterations = 0;
  MinibatchSampler sampler;
  std::vector<IterationLog> trace;

  double progress() const {
    return total_iterations == 0 ? 0.0
                                 : static_cast<double>(iteration) /
                                       static_cast<double>(total_iterations);
  }
};

TrainState init_state(const PreparedPair& data, const TrainConfig& cfg, const ModelConfig& model);

/// One balanced batch, one SGD-momentum update of all parameter groups.
IterationLog train_step(TrainState& state, const PreparedPair& data, const TrainConfig& cfg,
                        const ModelConfig& model);

struct Inference {
  Matrix embeddings;
  Matrix probs;
};

/// Embeddings and label probabilities for every node of a network, using the
/// full-graph unmasked propagation weights.
Inference infer(const ParamStore& params, const ModelConfig& model, const AttributedNetwork& net,
                const ProximityMatrix& ppmi, const SparseMatrix& neighbor_attrs,
                const Ablation& ablation = {});

struct FitResult {
  TrainConfig config;
  ModelConfig model;
  ParamStore params;
  std::vector<IterationLog> trace;
  Inference source;
  Inference target;
};

FitResult fit(const DatasetPair& pair, TrainConfig cfg,
              const std::function<void(const IterationLog&)>& on_iteration = {});

}  // namespace dmgnn
