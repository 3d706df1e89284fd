#include "dmgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmgnn/error.hpp"

namespace dmgnn {

void TrainConfig::validate() const {
  if (K == 0) throw ValidationError("K must be >= 1");
  if (embed_dim == 0) throw ValidationError("embedding dimension must be >= 1");
  if (batch_size < 2 || batch_size % 2 != 0)
    throw ValidationError("batch size must be a positive even number");
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (!(mu0 >= 0.0)) throw ValidationError("mu0 must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0,1)");
  if (epochs == 0) throw ValidationError("epochs must be >= 1");
  if (ablation.no_fe1 && ablation.no_fe2)
    throw ValidationError("cannot ablate both feature extractors");
  for (auto w : hidden)
    if (w == 0) throw ValidationError("hidden widths must be >= 1");
  for (auto w : disc_hidden)
    if (w == 0) throw ValidationError("discriminator widths must be >= 1");
}

ModelConfig ModelConfig::from(const TrainConfig& cfg, std::size_t num_attrs,
                              std::size_t num_labels) {
  ModelConfig m;
  m.encoder = {num_attrs, cfg.hidden, cfg.embed_dim};
  m.discriminator = {cfg.embed_dim, num_labels, cfg.disc_hidden};
  m.num_labels = num_labels;
  m.mode = cfg.multi_label ? LabelMode::MultiLabel : LabelMode::MultiClass;
  return m;
}

ParamStore init_model(const ModelConfig& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  init_encoder(store, model.encoder, rng);
  init_classifier(store, model.encoder.embed_dim, model.num_labels, rng);
  init_discriminator(store, model.discriminator, rng);
  return store;
}

Schedule schedules(double progress, double mu0) {
  if (!(progress >= 0.0 && progress <= 1.0))
    throw ValidationError("training progress must lie in [0,1]");
  return {mu0 / std::pow(1.0 + 10.0 * progress, 0.75),
          2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0};
}

MinibatchSampler::MinibatchSampler(std::size_t num_source, std::size_t num_target,
                                   std::size_t batch_size, std::uint64_t seed)
    : half_(batch_size / 2), rng_(seed) {
  if (num_source == 0 || num_target == 0)
    throw ValidationError("sampler: both networks must be nonempty");
  if (batch_size < 2 || batch_size % 2 != 0)
    throw ValidationError("sampler: batch size must be a positive even number");
  const std::size_t larger = std::max(num_source, num_target);
  batches_per_epoch_ = (larger + half_ - 1) / half_;
  source_.order.resize(num_source);
  target_.order.resize(num_target);
  for (std::size_t i = 0; i < num_source; ++i) source_.order[i] = static_cast<NodeId>(i);
  for (std::size_t i = 0; i < num_target; ++i) target_.order[i] = static_cast<NodeId>(i);
}

void MinibatchSampler::reshuffle(Stream& s) {
  std::shuffle(s.order.begin(), s.order.end(), rng_);
  s.pos = 0;
}

void MinibatchSampler::take(Stream& s, std::size_t count, std::vector<NodeId>& out) {
  out.clear();
  while (out.size() < count) {
    if (s.pos == s.order.size()) reshuffle(s);
    out.push_back(s.order[s.pos++]);
  }
}

Minibatch MinibatchSampler::next() {
  if (batch_in_epoch_ == 0) {
    reshuffle(source_);
    reshuffle(target_);
  }
  Minibatch b;
  take(source_, half_, b.source);
  take(target_, half_, b.target);
  batch_in_epoch_ = (batch_in_epoch_ + 1) % batches_per_epoch_;
  return b;
}

std::pair<PropagationWeights, PropagationWeights> batch_weights(const ProximityMatrix& source,
                                                                const ProximityMatrix& target,
                                                                const Minibatch& batch,
                                                                const LabelMatrix& source_labels) {
  return {propagation_weights(source, std::span<const NodeId>(batch.source), &source_labels),
          propagation_weights(target, std::span<const NodeId>(batch.target))};
}

namespace {

struct Forward {
  EncoderCache enc_source;
  EncoderCache enc_target;
  ClassifierCache cls_source;
  ClassifierCache cls_target;
  Matrix grad_f_source;
  Matrix grad_f_target;
  ObjectiveValues values;
};

std::vector<double> domain_targets(std::size_t n_source, std::size_t n_target) {
  std::vector<double> d(n_source + n_target, 0.0);
  std::fill(d.begin() + static_cast<std::ptrdiff_t>(n_source), d.end(), 1.0);
  return d;
}

Forward run_forward(const ParamStore& store, const ModelConfig& model, const BatchInputs& batch,
                    double beta, double lambda, const Ablation& ab, bool want_grads) {
  Forward f;
  const auto enc_ab = ab.encoder();
  f.enc_source = encode_forward(store, model.encoder, batch.source_attrs,
                                batch.source_neighbor_attrs, enc_ab);
  f.enc_target = encode_forward(store, model.encoder, batch.target_attrs,
                                batch.target_neighbor_attrs, enc_ab);
  const PropagationWeights* ws = ab.no_label_prop ? nullptr : &batch.source_weights;
  const PropagationWeights* wt = ab.no_label_prop ? nullptr : &batch.target_weights;
  f.cls_source = classify_forward(store, f.enc_source.embeddings, ws, model.phi());
  f.cls_target = classify_forward(store, f.enc_target.embeddings, wt, model.phi());

  auto& v = f.values;
  v.loss_y = classification_loss(f.cls_source.probs, batch.source_labels, model.mode);
  v.loss_f = feature_propagation_loss(
      f.enc_source.embeddings, batch.source_weights, f.enc_target.embeddings,
      batch.target_weights, want_grads ? &f.grad_f_source : nullptr,
      want_grads ? &f.grad_f_target : nullptr);
  if (!ab.no_discriminator && !want_grads) {
    const Matrix input =
        conditioning_input(vconcat(f.enc_source.embeddings, f.enc_target.embeddings),
                           vconcat(f.cls_source.probs, f.cls_target.probs));
    v.loss_d = domain_loss(discriminator_predict(store, model.discriminator, input),
                           domain_targets(batch.source_attrs.rows(), batch.target_attrs.rows()));
  }
  v.encoder_objective = v.loss_y + (ab.no_feat_prop ? 0.0 : beta * v.loss_f) -
                        (ab.no_discriminator ? 0.0 : lambda * v.loss_d);
  return f;
}

// Pushes upstream gradients for one network's rows back through the
// classifier and encoder.
void backprop_network(const ParamStore& store, const ModelConfig& model, const EncoderCache& enc,
                      const ClassifierCache& cls, const PropagationWeights* weights,
                      const Matrix* grad_probs, const Matrix* grad_embeddings,
                      const Ablation& ab, Gradients& out) {
  Matrix g_emb(enc.embeddings.rows(), enc.embeddings.cols());
  bool any = false;
  if (grad_probs) {
    g_emb += classifier_backward(store, cls, enc.embeddings, weights, model.phi(), *grad_probs, out);
    any = true;
  }
  if (grad_embeddings) {
    g_emb += *grad_embeddings;
    any = true;
  }
  if (any) encoder_backward(store, model.encoder, enc, g_emb, out, ab.encoder());
}

}  // namespace

ObjectiveValues evaluate_objective(const ParamStore& store, const ModelConfig& model,
                                   const BatchInputs& batch, double beta, double lambda,
                                   const Ablation& ablation) {
  return run_forward(store, model, batch, beta, lambda, ablation, false).values;
}

ObjectiveGradients objective_gradients(const ParamStore& store, const ModelConfig& model,
                                       const BatchInputs& batch, double beta, double lambda,
                                       const Ablation& ab, bool reversal) {
  Forward f = run_forward(store, model, batch, beta, lambda, ab, true);
  ObjectiveGradients out;
  const PropagationWeights* ws = ab.no_label_prop ? nullptr : &batch.source_weights;
  const PropagationWeights* wt = ab.no_label_prop ? nullptr : &batch.target_weights;

  // L_Y + beta L_F
  const Matrix g_y = cross_entropy_grad(f.cls_source.probs, batch.source_labels, model.mode);
  if (ab.no_feat_prop) {
    backprop_network(store, model, f.enc_source, f.cls_source, ws, &g_y, nullptr, ab, out.task);
  } else {
    f.grad_f_source *= beta;
    f.grad_f_target *= beta;
    backprop_network(store, model, f.enc_source, f.cls_source, ws, &g_y, &f.grad_f_source, ab,
                     out.task);
    backprop_network(store, model, f.enc_target, f.cls_target, wt, nullptr, &f.grad_f_target,
                     ab, out.task);
  }

  // L_D: discriminator descends it; encoder and classifier receive the
  // plain gradient scaled by the reversal factor after backpropagation.
  if (!ab.no_discriminator) {
    const std::size_t ns = batch.source_attrs.rows();
    const std::size_t nt = batch.target_attrs.rows();
    AdversarialGradients adv = adversarial_gradients(
        store, model.discriminator, vconcat(f.enc_source.embeddings, f.enc_target.embeddings),
        vconcat(f.cls_source.probs, f.cls_target.probs), domain_targets(ns, nt), lambda,
        /*reversal=*/false);
    f.values.loss_d = adv.loss;
    f.values.encoder_objective -= lambda * adv.loss;
    out.discriminator = std::move(adv.discriminator);

    Gradients plain;
    const Matrix gp_s = slice_rows(adv.grad_probs, 0, ns);
    const Matrix gp_t = slice_rows(adv.grad_probs, ns, ns + nt);
    const Matrix ge_s = slice_rows(adv.grad_embeddings, 0, ns);
    const Matrix ge_t = slice_rows(adv.grad_embeddings, ns, ns + nt);
    backprop_network(store, model, f.enc_source, f.cls_source, ws, &gp_s, &ge_s, ab, plain);
    backprop_network(store, model, f.enc_target, f.cls_target, wt, &gp_t, &ge_t, ab, plain);
    const double scale = reversal ? -lambda : 1.0;
    for (auto& [name, g] : plain) {
      g *= scale;
      out.adversarial.emplace(name, std::move(g));
    }
  }
  out.values = f.values;

  out.total = out.task;
  for (const auto& [name, g] : out.adversarial) accumulate(out.total, name, g);
  for (const auto& [name, g] : out.discriminator) accumulate(out.total, name, g);
  return out;
}

PreparedPair prepare_pair(const DatasetPair& pair, const TrainConfig& cfg) {
  PreparedPair p{pair, {}, {}, {}, {}};
  if (cfg.normalize_attrs) {
    p.pair.source = normalize_attributes(std::move(p.pair.source));
    p.pair.target = normalize_attributes(std::move(p.pair.target));
  }
  p.source_ppmi = compute_proximity(p.pair.source, cfg.K);
  p.target_ppmi = compute_proximity(p.pair.target, cfg.K);
  p.source_neighbor_attrs =
      aggregate_neighbor_attributes(p.pair.source.attributes, propagation_weights(p.source_ppmi));
  p.target_neighbor_attrs =
      aggregate_neighbor_attributes(p.pair.target.attributes, propagation_weights(p.target_ppmi));
  return p;
}

BatchInputs gather_batch(const PreparedPair& data, const Minibatch& batch) {
  BatchInputs in;
  in.source_attrs = densify_rows(data.pair.source.attributes, batch.source);
  in.source_neighbor_attrs = densify_rows(data.source_neighbor_attrs, batch.source);
  in.target_attrs = densify_rows(data.pair.target.attributes, batch.target);
  in.target_neighbor_attrs = densify_rows(data.target_neighbor_attrs, batch.target);
  auto [ws, wt] =
      batch_weights(data.source_ppmi, data.target_ppmi, batch, *data.pair.source.labels);
  in.source_weights = std::move(ws);
  in.target_weights = std::move(wt);
  std::vector<std::size_t> rows(batch.source.begin(), batch.source.end());
  in.source_labels = data.pair.source.labels->to_dense(rows);
  return in;
}

TrainState init_state(const PreparedPair& data, const TrainConfig& cfg, const ModelConfig& model) {
  MinibatchSampler sampler(data.pair.source.num_nodes, data.pair.target.num_nodes,
                           cfg.batch_size, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t total = cfg.epochs * sampler.batches_per_epoch();
  return TrainState{init_model(model, cfg.seed), 0, total, std::move(sampler), {}};
}

IterationLog train_step(TrainState& state, const PreparedPair& data, const TrainConfig& cfg,
                        const ModelConfig& model) {
  const Schedule s = schedules(std::min(1.0, state.progress()), cfg.mu0);
  const Minibatch batch = state.sampler.next();
  const BatchInputs inputs = gather_batch(data, batch);
  const ObjectiveGradients g =
      objective_gradients(state.params, model, inputs, cfg.beta, s.lambda, cfg.ablation);

  IterationLog log{state.iteration, s.lr, s.lambda, g.values.loss_y, g.values.loss_f,
                   g.values.loss_d};
  if (!std::isfinite(log.loss_y) || !std::isfinite(log.loss_f) || !std::isfinite(log.loss_d)) {
    std::ostringstream msg;
    msg << "non-finite loss at iteration " << log.iter << " (lr=" << log.lr
        << " lambda=" << log.lambda << " loss_y=" << log.loss_y << " loss_f=" << log.loss_f
        << " loss_d=" << log.loss_d << ")";
    const std::size_t from = state.trace.size() > 5 ? state.trace.size() - 5 : 0;
    for (std::size_t k = from; k < state.trace.size(); ++k) {
      const auto& t = state.trace[k];
      msg << "\n  iter " << t.iter << ": loss_y=" << t.loss_y << " loss_f=" << t.loss_f
          << " loss_d=" << t.loss_d;
    }
    throw NumericError(msg.str());
  }
  sgd_momentum_step(state.params, g.total, s.lr, cfg.momentum);
  ++state.iteration;
  state.trace.push_back(log);
  return log;
}

Inference infer(const ParamStore& params, const ModelConfig& model, const AttributedNetwork& net,
                const ProximityMatrix& ppmi, const SparseMatrix& neighbor_attrs,
                const Ablation& ablation) {
  constexpr std::size_t kChunk = 1024;
  Inference out;
  out.embeddings = Matrix(0, model.encoder.embed_dim);
  std::vector<NodeId> ids;
  for (std::size_t begin = 0; begin < net.num_nodes; begin += kChunk) {
    const std::size_t end = std::min(net.num_nodes, begin + kChunk);
    ids.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) ids[i - begin] = static_cast<NodeId>(i);
    out.embeddings = vconcat(out.embeddings,
                             encode(params, model.encoder, densify_rows(net.attributes, ids),
                                    densify_rows(neighbor_attrs, ids), ablation.encoder()));
  }
  if (ablation.no_label_prop) {
    out.probs = propagate_predictions(params, out.embeddings, nullptr, model.phi());
  } else {
    const PropagationWeights w = propagation_weights(ppmi);
    out.probs = propagate_predictions(params, out.embeddings, &w, model.phi());
  }
  return out;
}

FitResult fit(const DatasetPair& pair, TrainConfig cfg,
              const std::function<void(const IterationLog&)>& on_iteration) {
  cfg.multi_label = pair.source.multi_label;
  cfg.validate();
  const DatasetPair checked = validate_pair(pair.source, pair.target);
  const PreparedPair data = prepare_pair(checked, cfg);
  const ModelConfig model =
      ModelConfig::from(cfg, checked.source.num_attrs, checked.source.num_labels);
  TrainState state = init_state(data, cfg, model);
  while (state.iteration < state.total_iterations) {
    const IterationLog log = train_step(state, data, cfg, model);
    if (on_iteration) on_iteration(log);
  }
  FitResult r;
  r.config = cfg;
  r.model = model;
  r.source = infer(state.params, model, data.pair.source, data.source_ppmi,
                   data.source_neighbor_attrs, cfg.ablation);
  r.target = infer(state.params, model, data.pair.target, data.target_ppmi,
                   data.target_neighbor_attrs, cfg.ablation);
  r.params = std::move(state.params);
  r.trace = std::move(state.trace);
  return r;
}

}  // namespace dmgnn
