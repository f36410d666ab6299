#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mvpt/error.hpp"

namespace mvpt::cli {

using nlohmann::json;

RunConfig::RunConfig() {
  // Desk-scale defaults.
  model.d_h = 32;
  model.max_len = 10;
  train.total_steps = 300;
  train.batch_tracks = 64;
  synthetic.n_tracks = 640;
  n_train = 512;
}

void RunConfig::propagate_seed() {
  train.seed = seed;
  eval.seed = seed;
  synthetic.seed = seed;
}

void RunConfig::validate() const {
  train.validate();
  eval.validate();
  synthetic.validate();
  if (n_train > synthetic.n_tracks) throw ConfigError("config: n_train exceeds synthetic.n_tracks");
  if (model.d_h == 0 || model.heads == 0 || model.d_h % model.heads != 0) {
    throw ConfigError("config: model.d_h must be a positive multiple of model.heads");
  }
  if (model.layers == 0 || model.max_len == 0 || model.ffn_mult == 0) {
    throw ConfigError("config: model.layers, max_len and ffn_mult must be positive");
  }
  if (!(model.temperature > 0.0f)) throw ConfigError("config: model.temperature must be positive");
}

namespace {

// Reads members of one JSON object, rejecting anything not consumed.
class Section {
 public:
  Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + where(key) + "' has the wrong type");
    }
  }

  template <typename E, typename Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string text;
    get(key, text);
    if (doc_.contains(key)) out = parse(text);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError("config: unknown key '" + where(key.c_str()) + "'");
    }
  }

 private:
  std::string where(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& doc_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.get("seed", c.seed);
  if (const auto* m = root.child("model")) {
    Section s(*m, "model");
    s.get_enum("arch", c.model.arch, model::parse_architecture);
    s.get("d_h", c.model.d_h);
    s.get("layers", c.model.layers);
    s.get("heads", c.model.heads);
    s.get("max_len", c.model.max_len);
    s.get("ffn_mult", c.model.ffn_mult);
    s.get("temporal_embedding_v", c.model.temporal_embedding_v);
    s.get("temporal_embedding_m", c.model.temporal_embedding_m);
    s.get("temperature", c.model.temperature);
    s.get("mlp_hidden", c.model.mlp_hidden);
    s.finish();
  }
  if (const auto* t = root.child("train")) {
    Section s(*t, "train");
    s.get("initial_lr", c.train.initial_lr);
    s.get("total_steps", c.train.total_steps);
    s.get("batch_tracks", c.train.batch_tracks);
    s.get("weight_decay", c.train.adamw.weight_decay);
    s.get("beta1", c.train.adamw.beta1);
    s.get("beta2", c.train.adamw.beta2);
    s.get("eps", c.train.adamw.eps);
    s.get_enum("level", c.train.level, objective::parse_level);
    s.get_enum("loss", c.train.loss, objective::parse_loss_kind);
    s.get("margin", c.train.margin);
    s.get("window", c.train.window);
    s.get("grad_clip", c.train.grad_clip);
    s.get("checkpoint_every", c.train.checkpoint_every);
    s.finish();
  }
  if (const auto* e = root.child("eval")) {
    Section s(*e, "eval");
    s.get("pool_size", c.eval.pool_size);
    s.get("ks", c.eval.ks);
    s.get_enum("level", c.eval.level, objective::parse_level);
    s.get_enum("direction", c.eval.direction, evalkit::parse_direction);
    s.get("window", c.eval.window);
    s.finish();
  }
  if (const auto* g = root.child("synthetic")) {
    Section s(*g, "synthetic");
    s.get("n_tracks", c.synthetic.n_tracks);
    s.get("n_train", c.n_train);
    s.get("length", c.synthetic.length);
    s.get("length_choices", c.synthetic.length_choices);
    s.get("d_latent", c.synthetic.d_latent);
    s.get("d_v", c.synthetic.d_v);
    s.get("d_m", c.synthetic.d_m);
    s.get("context_weight", c.synthetic.context_weight);
    s.get("noise_std", c.synthetic.noise_std);
    s.get("projection_std", c.synthetic.projection_std);
    s.get("segment_duration", c.synthetic.segment_duration);
    s.get("n_genres", c.synthetic.n_genres);
    s.get("attribute_rate", c.synthetic.attribute_rate);
    s.get("attribute_strength", c.synthetic.attribute_strength);
    s.finish();
  }
  if (const auto* p = root.child("paths")) {
    Section s(*p, "paths");
    s.get("data", c.paths.data);
    s.get("checkpoint", c.paths.checkpoint);
    s.get("history", c.paths.history);
    s.get("out", c.paths.out);
    s.finish();
  }
  root.finish();
  c.propagate_seed();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"model",
       {{"arch", std::string(model::to_string(c.model.arch))},
        {"d_h", c.model.d_h},
        {"layers", c.model.layers},
        {"heads", c.model.heads},
        {"max_len", c.model.max_len},
        {"ffn_mult", c.model.ffn_mult},
        {"temporal_embedding_v", c.model.temporal_embedding_v},
        {"temporal_embedding_m", c.model.temporal_embedding_m},
        {"temperature", c.model.temperature},
        {"mlp_hidden", c.model.mlp_hidden}}},
      {"train",
       {{"initial_lr", c.train.initial_lr},
        {"total_steps", c.train.total_steps},
        {"batch_tracks", c.train.batch_tracks},
        {"weight_decay", c.train.adamw.weight_decay},
        {"beta1", c.train.adamw.beta1},
        {"beta2", c.train.adamw.beta2},
        {"eps", c.train.adamw.eps},
        {"level", std::string(objective::to_string(c.train.level))},
        {"loss", std::string(objective::to_string(c.train.loss))},
        {"margin", c.train.margin},
        {"window", c.train.window},
        {"grad_clip", c.train.grad_clip},
        {"checkpoint_every", c.train.checkpoint_every}}},
      {"eval",
       {{"pool_size", c.eval.pool_size},
        {"ks", c.eval.ks},
        {"level", std::string(objective::to_string(c.eval.level))},
        {"direction", std::string(evalkit::to_string(c.eval.direction))},
        {"window", c.eval.window}}},
      {"synthetic",
       {{"n_tracks", c.synthetic.n_tracks},
        {"n_train", c.n_train},
        {"length", c.synthetic.length},
        {"length_choices", c.synthetic.length_choices},
        {"d_latent", c.synthetic.d_latent},
        {"d_v", c.synthetic.d_v},
        {"d_m", c.synthetic.d_m},
        {"context_weight", c.synthetic.context_weight},
        {"noise_std", c.synthetic.noise_std},
        {"projection_std", c.synthetic.projection_std},
        {"segment_duration", c.synthetic.segment_duration},
        {"n_genres", c.synthetic.n_genres},
        {"attribute_rate", c.synthetic.attribute_rate},
        {"attribute_strength", c.synthetic.attribute_strength}}},
      {"paths",
       {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}, {"history", c.paths.history}, {"out", c.paths.out}}},
  };
}

}  // namespace mvpt::cli
