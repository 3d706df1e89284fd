#include "dmgnn/checkpoint.hpp"

#include <fstream>

#include "dmgnn/error.hpp"

namespace dmgnn {

using json = nlohmann::json;

json to_json(const TrainConfig& c) {
  return {{"K", c.K},
          {"embed_dim", c.embed_dim},
          {"hidden", c.hidden},
          {"disc_hidden", c.disc_hidden},
          {"beta", c.beta},
          {"batch_size", c.batch_size},
          {"mu0", c.mu0},
          {"momentum", c.momentum},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"multi_label", c.multi_label},
          {"normalize_attrs", c.normalize_attrs},
          {"ablation",
           {{"no_fe1", c.ablation.no_fe1},
            {"no_fe2", c.ablation.no_fe2},
            {"no_feat_prop", c.ablation.no_feat_prop},
            {"no_label_prop", c.ablation.no_label_prop},
            {"no_discriminator", c.ablation.no_discriminator}}}};
}

TrainConfig train_config_from_json(const json& j) {
  try {
    TrainConfig c;
    c.K = j.at("K").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.disc_hidden = j.at("disc_hidden").get<std::vector<std::size_t>>();
    c.beta = j.at("beta").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.mu0 = j.at("mu0").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.multi_label = j.at("multi_label").get<bool>();
    c.normalize_attrs = j.at("normalize_attrs").get<bool>();
    const auto& a = j.at("ablation");
    c.ablation.no_fe1 = a.at("no_fe1").get<bool>();
    c.ablation.no_fe2 = a.at("no_fe2").get<bool>();
    c.ablation.no_feat_prop = a.at("no_feat_prop").get<bool>();
    c.ablation.no_label_prop = a.at("no_label_prop").get<bool>();
    c.ablation.no_discriminator = a.at("no_discriminator").get<bool>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad training config: ") + e.what());
  }
}

json to_json(const SynthConfig& c) {
  return {{"num_nodes", c.num_nodes},       {"num_classes", c.num_classes},
          {"num_attrs", c.num_attrs},       {"signal_attrs_per_class", c.signal_attrs_per_class},
          {"p_intra", c.p_intra},           {"p_inter", c.p_inter},
          {"p_signal", c.p_signal},         {"p_noise", c.p_noise},
          {"shift", c.shift},               {"seed", c.seed}};
}

json to_json(const Metrics& m) {
  json per_class = json::array();
  for (const auto& c : m.per_class)
    per_class.push_back({{"tp", c.counts.tp},
                         {"fp", c.counts.fp},
                         {"fn", c.counts.fn},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1}});
  return {{"micro_f1", m.micro_f1}, {"macro_f1", m.macro_f1}, {"per_class", per_class}};
}

json to_json(const IterationLog& l) {
  return {{"iter", l.iter},     {"lr", l.lr},         {"lambda", l.lambda},
          {"loss_y", l.loss_y}, {"loss_f", l.loss_f}, {"loss_d", l.loss_d}};
}

json params_to_json(const ParamStore& store) {
  json out = json::object();
  for (const auto& [name, m] : store.values())
    out[name] = {{"shape", {m.rows(), m.cols()}}, {"data", m.data()}};
  return out;
}

ParamStore params_from_json(const json& j) {
  ParamStore store;
  try {
    for (const auto& [name, entry] : j.items()) {
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw ValidationError("parameter " + name + " must be 2-D");
      store.add(name, Matrix(shape[0], shape[1], entry.at("data").get<std::vector<double>>()));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad parameter block: ") + e.what());
  }
  return store;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  const json j = {{"config", to_json(ckpt.config)},
                  {"num_attrs", ckpt.num_attrs},
                  {"num_labels", ckpt.num_labels},
                  {"params", params_to_json(ckpt.params)}};
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || !j.contains("config") || !j.contains("params"))
    throw ValidationError("checkpoint lacks 'config' or 'params'");
  Checkpoint c;
  c.config = train_config_from_json(j["config"]);
  c.num_attrs = j.value("num_attrs", std::size_t{0});
  c.num_labels = j.value("num_labels", std::size_t{0});
  c.params = params_from_json(j["params"]);
  // Every parameter the model expects must be present with its shape.
  const ParamStore expected = init_model(c.model(), 0);
  for (const auto& [name, m] : expected.values()) {
    if (!c.params.contains(name)) throw ValidationError("checkpoint lacks parameter " + name);
    if (!c.params.value(name).same_shape(m))
      throw ValidationError("checkpoint parameter " + name + " has the wrong shape");
  }
  return c;
}

}  // namespace dmgnn
