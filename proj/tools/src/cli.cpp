#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>

#include "mvpt/conditioning/conditioning.hpp"
#include "mvpt/dataio/feature_file.hpp"
#include "mvpt/dataio/music_regions.hpp"
#include "mvpt/error.hpp"
#include "mvpt/evalkit/metrics.hpp"
#include "mvpt/evalkit/report.hpp"
#include "mvpt/model/checkpoint.hpp"
#include "mvpt/model/rollout.hpp"
#include "run_config.hpp"

namespace mvpt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flags recorded at parse time, applied on top of the config file.
class Overrides {
 public:
  template <typename T, typename Apply>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& desc, Apply apply) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, desc);
    fns_.push_back([opt, value, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
    return opt;
  }
  CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& desc,
                    std::function<void(RunConfig&)> apply) {
    auto* opt = app->add_flag(name, desc);
    fns_.push_back([opt, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c);
    });
    return opt;
  }
  void apply(RunConfig& c) const {
    for (const auto& f : fns_) f(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> fns_;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  Overrides overrides;
  // (config, out, err)
  std::function<int(const RunConfig&, std::ostream&, std::ostream&)> body;
};

template <typename F>
auto without_log(F f) {
  return [f](const RunConfig& c, std::ostream& out, std::ostream&) { return f(c, out); };
}

void add_common(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd.overrides.add<std::uint64_t>(cmd.app, "--seed", "Seed for every random choice",
                                   [](RunConfig& c, std::uint64_t v) { c.seed = v; });
}

void add_data(Command& cmd, const std::string& desc = "Dataset manifest (JSON)") {
  cmd.overrides.add<std::string>(cmd.app, "--data", desc, [](RunConfig& c, const std::string& v) { c.paths.data = v; });
}
void add_checkpoint(Command& cmd, const std::string& desc = "MVPW checkpoint") {
  cmd.overrides.add<std::string>(cmd.app, "--checkpoint", desc,
                                 [](RunConfig& c, const std::string& v) { c.paths.checkpoint = v; });
}
void add_out(Command& cmd, const std::string& desc) {
  cmd.overrides.add<std::string>(cmd.app, "--out", desc, [](RunConfig& c, const std::string& v) { c.paths.out = v; });
}

void add_eval_flags(Command& cmd) {
  auto& o = cmd.overrides;
  o.add<std::size_t>(cmd.app, "--pool", "Candidate pool size N",
                     [](RunConfig& c, std::size_t v) { c.eval.pool_size = v; });
  o.add<std::vector<std::size_t>>(cmd.app, "--ks", "Recall cutoffs, e.g. 1,5,10",
                                  [](RunConfig& c, const std::vector<std::size_t>& v) { c.eval.ks = v; })
      ->delimiter(',');
  o.add<std::string>(cmd.app, "--level", "segment|track",
                     [](RunConfig& c, const std::string& v) { c.eval.level = objective::parse_level(v); });
  o.add<std::string>(cmd.app, "--direction", "v2m|m2v|both",
                     [](RunConfig& c, const std::string& v) { c.eval.direction = evalkit::parse_direction(v); });
  o.add<std::size_t>(cmd.app, "--window", "Center window in segments (0: model max_len)",
                     [](RunConfig& c, std::size_t v) { c.eval.window = v; });
}

const std::string& require(const std::string& value, const char* what) {
  if (value.empty()) throw ConfigError(std::string("missing ") + what);
  return value;
}

PairedDataset load_data(const RunConfig& c) { return dataio::read_dataset(require(c.paths.data, "--data")); }
model::Model<float> load_model(const RunConfig& c) {
  return model::load_checkpoint(require(c.paths.checkpoint, "--checkpoint"));
}

void emit_json(const RunConfig& c, const json& doc, std::ostream& out) {
  if (c.paths.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    evalkit::write_json(c.paths.out, doc);
  }
}

fs::path sibling_csv(const std::string& json_path) {
  fs::path p(json_path);
  p.replace_extension(".csv");
  return p;
}

void print_report(const std::string& name, const evalkit::RetrievalReport& r, std::ostream& out) {
  out << evalkit::report_csv({{name, r}});
}

// ---- gen-data ---------------------------------------------------------------

int cmd_gen_data(const RunConfig& c, std::ostream& out) {
  const auto dir = require(c.paths.out, "--out (dataset directory)");
  const auto data = dataio::generate_synthetic(c.synthetic);
  const std::size_t n_train = c.n_train == 0 ? data.dataset.size() : c.n_train;
  auto [train, test] = dataio::split_dataset(data.dataset, n_train);
  if (!train.empty()) out << "wrote " << dataio::write_dataset(dir, train).string() << "\n";
  if (!test.empty()) out << "wrote " << dataio::write_dataset(dir, test).string() << "\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto data = load_data(c);
  if (data.empty()) throw ValueError("train: empty dataset");
  auto mc = c.model;
  mc.d_in_v = data.pairs.front().visual.dim();
  mc.d_in_m = data.pairs.front().music.dim();
  trainer::FitOptions opts;
  opts.checkpoint = require(c.paths.checkpoint, "--checkpoint (output)");
  opts.history = c.paths.history;
  opts.progress = &err;
  const auto result = trainer::fit(data, mc, c.train, opts);
  out << "trained " << model::to_string(mc.arch) << " (" << result.model.parameter_count() << " parameters) for "
      << result.history.size() << " steps; final loss " << result.history.back().loss << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const RunConfig& c, std::ostream& out) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  auto report = evalkit::evaluate(m, data, c.eval);
  report.model_id = c.paths.checkpoint;
  emit_json(c, evalkit::to_json(report), out);
  if (!c.paths.out.empty()) evalkit::write_text_file(sibling_csv(c.paths.out), evalkit::report_csv({{c.paths.checkpoint, report}}));
  print_report(c.paths.checkpoint, report, out);
  return kExitOk;
}

// ---- sweep-context ----------------------------------------------------------

int cmd_sweep_context(const RunConfig& c, std::ostream& out, const std::vector<std::size_t>& lengths) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  std::vector<std::size_t> ls = lengths;
  if (ls.empty()) {
    ls.resize(c.eval.window == 0 ? m.config.max_len : c.eval.window);
    std::iota(ls.begin(), ls.end(), std::size_t{1});
  }
  const auto sweep = evalkit::context_sweep(m, data, ls, c.eval);
  auto doc = evalkit::to_json(sweep, "seconds");
  std::vector<double> x, y;
  for (const auto& p : sweep) {
    x.push_back(static_cast<double>(p.length));
    y.push_back(p.recall10);
  }
  if (sweep.size() >= 2) doc["spearman"] = evalkit::spearman(x, y);
  emit_json(c, doc, out);
  if (!c.paths.out.empty()) evalkit::write_text_file(sibling_csv(c.paths.out), evalkit::sweep_csv(sweep, "seconds"));
  out << evalkit::sweep_csv(sweep, "seconds");
  return kExitOk;
}

// ---- eval-shortcut ----------------------------------------------------------

int cmd_eval_shortcut(const RunConfig& c, std::ostream& out) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  const auto tracks = evalkit::embed_dataset(m, data, c.eval.window);
  auto plain = evalkit::evaluate(tracks, c.eval);
  auto constrained = evalkit::length_constrained_evaluate(tracks, c.eval);
  plain.model_id = constrained.model_id = c.paths.checkpoint;
  emit_json(c, {{"unconstrained", evalkit::to_json(plain)}, {"length_constrained", evalkit::to_json(constrained)}}, out);
  const auto csv = evalkit::report_csv({{"unconstrained", plain}, {"length_constrained", constrained}});
  if (!c.paths.out.empty()) evalkit::write_text_file(sibling_csv(c.paths.out), csv);
  out << csv;
  return kExitOk;
}

// ---- sweep-perturb ----------------------------------------------------------

int cmd_sweep_perturb(const RunConfig& c, std::ostream& out, const std::string& kind, const std::vector<double>& rs) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  if (rs.empty()) throw ConfigError("sweep-perturb: --r needs at least one value");
  const auto perturb = evalkit::make_perturbation(evalkit::parse_perturb_kind(kind), c.seed);
  const auto sweep = evalkit::perturbation_sweep(m, data, perturb, rs, c.eval);
  auto doc = evalkit::to_json(sweep, "r");
  doc["kind"] = kind;
  emit_json(c, doc, out);
  if (!c.paths.out.empty()) evalkit::write_text_file(sibling_csv(c.paths.out), evalkit::sweep_csv(sweep, "r"));
  out << evalkit::sweep_csv(sweep, "r");
  return kExitOk;
}

// ---- assoc-matrix -----------------------------------------------------------

struct AssocArgs {
  std::string targets;
  std::string query_label = "genre";
  std::string target_label = "attribute";
  std::string query_modality = "music";
};

std::vector<evalkit::LabeledEmbedding> labeled_tracks(const model::Model<float>& m, const PairedDataset& data,
                                                      Modality modality, const std::string& key,
                                                      std::size_t window) {
  std::vector<evalkit::LabeledEmbedding> out;
  std::mt19937_64 unused(0);
  for (const auto& pair : data.pairs) {
    const auto& seq = pair.get(modality);
    const auto it = seq.labels.find(key);
    if (it == seq.labels.end()) continue;
    const auto w = trainer::sample_window(seq, window == 0 ? m.config.max_len : window, trainer::WindowMode::kCenter,
                                          unused);
    out.push_back({model::encode(w, m).track, it->second});
  }
  if (out.empty()) throw ValueError("no track carries the label '" + key + "'");
  return out;
}

int cmd_assoc_matrix(const RunConfig& c, std::ostream& out, const AssocArgs& a) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  const auto target_data = a.targets.empty() ? data : dataio::read_dataset(a.targets);
  const Modality qm = parse_modality(a.query_modality);
  const auto queries = labeled_tracks(m, data, qm, a.query_label, c.eval.window);
  auto targets = labeled_tracks(m, target_data, other(qm), a.target_label, c.eval.window);
  // Balance target classes by keeping the first n_min members of each, in dataset order.
  std::map<std::string, std::size_t> sizes, taken;
  for (const auto& t : targets) ++sizes[t.label];
  std::size_t n_min = SIZE_MAX;
  for (const auto& [label, n] : sizes) n_min = std::min(n_min, n);
  std::erase_if(targets, [&](const evalkit::LabeledEmbedding& t) { return taken[t.label]++ >= n_min; });
  const auto matrix = evalkit::association_matrix(queries, targets);
  auto doc = evalkit::to_json(matrix);
  doc["targets_per_class"] = n_min;
  emit_json(c, doc, out);
  if (!c.paths.out.empty()) evalkit::write_text_file(sibling_csv(c.paths.out), evalkit::association_csv(matrix));
  out << evalkit::association_csv(matrix);
  return kExitOk;
}

// ---- condition --------------------------------------------------------------

struct ConditionArgs {
  std::string label;  // key=value selecting attribute examples
  bool centered = false;
  std::string centering = "mean";
  std::vector<std::string> ops;  // +file / -file
  std::string save_attribute;
  std::string query_modality = "visual";
};

int cmd_condition(const RunConfig& c, std::ostream& out, const ConditionArgs& a) {
  const auto m = load_model(c);
  const auto data = load_data(c);
  const Modality qm = parse_modality(a.query_modality), tm = other(qm);
  const auto tracks = evalkit::embed_dataset(m, data, c.eval.window);

  std::vector<conditioning::Operation> ops;
  for (const auto& spec : a.ops) {
    if (spec.size() < 2 || (spec[0] != '+' && spec[0] != '-')) {
      throw ConfigError("condition: --op expects +FILE or -FILE, got '" + spec + "'");
    }
    ops.push_back({spec[0] == '+' ? 1 : -1, conditioning::load_attribute(spec.substr(1))});
  }
  std::string key, value;
  std::vector<bool> positive(tracks.size(), false);
  if (!a.label.empty()) {
    const auto eq = a.label.find('=');
    if (eq == std::string::npos) throw ConfigError("condition: --label expects key=value");
    key = a.label.substr(0, eq);
    value = a.label.substr(eq + 1);
    std::vector<std::vector<float>> examples, domain;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const auto& labels = data.pairs[i].get(tm).labels;
      const auto it = labels.find(key);
      positive[i] = it != labels.end() && it->second == value;
      if (positive[i]) examples.push_back(tracks[i].get(tm).track);
      if (a.centered) domain.push_back(tracks[i].get(tm).track);
    }
    const auto centering = a.centering == "sum"    ? conditioning::Centering::kSum
                           : a.centering == "mean" ? conditioning::Centering::kMean
                                                   : throw ConfigError("condition: --centering expects mean|sum");
    auto attr = conditioning::attribute_vector(a.label, examples, domain, centering);
    if (!a.save_attribute.empty()) conditioning::save_attribute(a.save_attribute, attr);
    ops.push_back({+1, std::move(attr)});
  }
  if (ops.empty()) throw ConfigError("condition: give --label and/or --op");

  // Rank every target against each (conditioned) query; targets are all tracks.
  std::vector<std::span<const float>> candidates;
  for (const auto& t : tracks) candidates.push_back(t.get(tm).track);
  std::vector<std::size_t> truth_before, truth_after;
  std::size_t improved = 0, compared = 0;
  json per_query = json::array();
  for (std::size_t q = 0; q < tracks.size(); ++q) {
    const auto& y = tracks[q].get(qm).track;
    const auto yc = conditioning::condition(y, ops);
    std::vector<double> s0(candidates.size()), s1(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      s0[j] = objective::cosine_similarity(y, candidates[j]);
      s1[j] = objective::cosine_similarity(yc, candidates[j]);
    }
    truth_before.push_back(evalkit::rank_of_truth(s0, q));
    truth_after.push_back(evalkit::rank_of_truth(s1, q));
    json entry = {{"track_id", tracks[q].get(qm).track_id}};
    if (!key.empty()) {
      double before = 0.0, after = 0.0;
      std::size_t n = 0;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (!positive[j]) continue;
        before += static_cast<double>(evalkit::rank_of_truth(s0, j));
        after += static_cast<double>(evalkit::rank_of_truth(s1, j));
        ++n;
      }
      if (n > 0) {
        before /= static_cast<double>(n);
        after /= static_cast<double>(n);
        ++compared;
        if (after < before) ++improved;
        entry["positive_mean_rank_before"] = before;
        entry["positive_mean_rank_after"] = after;
      }
    }
    per_query.push_back(entry);
  }
  json doc = {{"query_modality", a.query_modality},
              {"operations", json::array()},
              {"truth_median_rank_before", evalkit::median_rank(truth_before)},
              {"truth_median_rank_after", evalkit::median_rank(truth_after)},
              {"queries", per_query}};
  for (const auto& op : ops) doc["operations"].push_back({{"sign", op.sign}, {"name", op.attribute.name}});
  if (compared > 0) doc["improved_fraction"] = static_cast<double>(improved) / static_cast<double>(compared);
  emit_json(c, doc, out);
  if (compared > 0) out << "positive targets ranked higher for " << improved << " of " << compared << " queries\n";
  return kExitOk;
}

// ---- attn -------------------------------------------------------------------

int cmd_attn(const RunConfig& c, std::ostream& out, const std::string& modality) {
  const auto m = load_model(c);
  if (m.config.arch != model::Architecture::kTransformer) throw ConfigError("attn: needs a transformer checkpoint");
  const auto data = load_data(c);
  const Modality mod = parse_modality(modality);
  std::mt19937_64 unused(0);
  json tracks = json::array();
  for (const auto& pair : data.pairs) {
    const auto seq = trainer::sample_window(pair.get(mod), c.eval.window == 0 ? m.config.max_len : c.eval.window,
                                            trainer::WindowMode::kCenter, unused);
    model::AttentionMaps maps;
    model::encode(seq, m, &maps);
    const auto r = model::attention_rollout(maps);
    tracks.push_back({{"track_id", seq.track_id}, {"weights", r.weights}, {"degenerate", r.degenerate}});
  }
  emit_json(c, {{"modality", modality}, {"tracks", tracks}}, out);
  return kExitOk;
}

// ---- music-regions ----------------------------------------------------------

struct RegionArgs {
  std::string csv;
  std::vector<std::string> music_classes{"music"};
  dataio::RegionParams params;
};

int cmd_music_regions(const RunConfig& c, std::ostream& out, const RegionArgs& a) {
  const auto stream = dataio::read_probability_csv(require(a.csv, "--csv"));
  const auto cols = dataio::resolve_classes(stream, a.music_classes);
  const auto regions = dataio::detect_music_regions(stream.probs, cols, a.params);
  json list = json::array();
  for (const auto& r : regions) list.push_back({{"start_s", r.start_s}, {"end_s", r.end_s}});
  emit_json(c, {{"fps", a.params.fps}, {"regions", list}}, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Music/video correspondence: training, retrieval evaluation and analysis", "mvpt"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& desc) -> Command& {
    auto& cmd = *commands.emplace_back(std::make_unique<Command>());
    cmd.app = app.add_subcommand(name, desc);
    add_common(cmd);
    return cmd;
  };

  {
    auto& cmd = make("gen-data", "Write a synthetic paired dataset (train.json / test.json)");
    add_out(cmd, "Output directory");
    auto& o = cmd.overrides;
    auto* a = cmd.app;
    o.add<std::size_t>(a, "--n-tracks", "Total tracks", [](RunConfig& c, std::size_t v) { c.synthetic.n_tracks = v; });
    o.add<std::size_t>(a, "--n-train", "Tracks in the train split (rest: test)",
                       [](RunConfig& c, std::size_t v) { c.n_train = v; });
    o.add<std::size_t>(a, "--length", "Segments per track", [](RunConfig& c, std::size_t v) { c.synthetic.length = v; });
    o.add<std::vector<std::size_t>>(a, "--length-choices", "Draw each track's length from this list",
                                    [](RunConfig& c, const std::vector<std::size_t>& v) { c.synthetic.length_choices = v; })
        ->delimiter(',');
    o.add<double>(a, "--context-weight", "rho in [0,1]", [](RunConfig& c, double v) { c.synthetic.context_weight = v; });
    o.add<double>(a, "--noise-std", "Feature noise", [](RunConfig& c, double v) { c.synthetic.noise_std = v; });
    o.add<double>(a, "--attribute-rate", "Share of tracks with the planted attribute",
                  [](RunConfig& c, double v) { c.synthetic.attribute_rate = v; });
    cmd.body = without_log(cmd_gen_data);
  }
  {
    auto& cmd = make("train", "Train a model and write an MVPW checkpoint");
    add_data(cmd, "Training manifest");
    add_checkpoint(cmd, "Output checkpoint");
    auto& o = cmd.overrides;
    auto* a = cmd.app;
    o.add<std::string>(a, "--history", "Training history (JSON lines)",
                       [](RunConfig& c, const std::string& v) { c.paths.history = v; });
    o.add<std::string>(a, "--arch", "transformer|mlp",
                       [](RunConfig& c, const std::string& v) { c.model.arch = model::parse_architecture(v); });
    o.add<std::size_t>(a, "--d-h", "Hidden size", [](RunConfig& c, std::size_t v) { c.model.d_h = v; });
    o.add<std::size_t>(a, "--layers", "Transformer layers", [](RunConfig& c, std::size_t v) { c.model.layers = v; });
    o.add<std::size_t>(a, "--heads", "Attention heads", [](RunConfig& c, std::size_t v) { c.model.heads = v; });
    o.add<std::size_t>(a, "--max-len", "Maximum segments", [](RunConfig& c, std::size_t v) { c.model.max_len = v; });
    o.add<bool>(a, "--temporal-v", "Temporal embedding on the visual tower",
                [](RunConfig& c, bool v) { c.model.temporal_embedding_v = v; });
    o.add<bool>(a, "--temporal-m", "Temporal embedding on the music tower",
                [](RunConfig& c, bool v) { c.model.temporal_embedding_m = v; });
    o.add<std::size_t>(a, "--steps", "Total optimizer steps", [](RunConfig& c, std::size_t v) { c.train.total_steps = v; });
    o.add<double>(a, "--lr", "Initial learning rate", [](RunConfig& c, double v) { c.train.initial_lr = v; });
    o.add<std::size_t>(a, "--batch", "Tracks per batch", [](RunConfig& c, std::size_t v) { c.train.batch_tracks = v; });
    o.add<std::string>(a, "--level", "segment|track",
                       [](RunConfig& c, const std::string& v) { c.train.level = objective::parse_level(v); });
    o.add<std::string>(a, "--loss", "infonce|triplet",
                       [](RunConfig& c, const std::string& v) { c.train.loss = objective::parse_loss_kind(v); });
    o.add<double>(a, "--grad-clip", "Global gradient-norm clip (0: off)",
                  [](RunConfig& c, double v) { c.train.grad_clip = v; });
    o.add<std::size_t>(a, "--checkpoint-every", "Also checkpoint every N steps",
                       [](RunConfig& c, std::size_t v) { c.train.checkpoint_every = v; });
    cmd.body = cmd_train;
  }
  {
    auto& cmd = make("eval", "Retrieval evaluation (Recall@K, median rank)");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Report JSON (a CSV table is written next to it)");
    add_eval_flags(cmd);
    cmd.body = without_log(cmd_eval);
  }
  auto lengths = std::make_shared<std::vector<std::size_t>>();
  {
    auto& cmd = make("sweep-context", "R@10 as a function of temporal context");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Sweep JSON");
    add_eval_flags(cmd);
    cmd.app->add_option("--lengths", *lengths, "Context lengths in segments (default 1..max_len)")->delimiter(',');
    cmd.body = [lengths](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_sweep_context(c, o, *lengths); };
  }
  {
    auto& cmd = make("eval-shortcut", "Evaluation with candidates restricted to the query's length");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Report JSON");
    add_eval_flags(cmd);
    cmd.body = without_log(cmd_eval_shortcut);
  }
  auto perturb_kind = std::make_shared<std::string>("scale");
  auto rs = std::make_shared<std::vector<double>>();
  {
    auto& cmd = make("sweep-perturb", "R@10 under query-side feature perturbations");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Sweep JSON");
    add_eval_flags(cmd);
    cmd.app->add_option("--kind", *perturb_kind, "scale|noise|stretch")->capture_default_str();
    cmd.app->add_option("--r", *rs, "Perturbation factors, e.g. 0.7,1,1.3")->delimiter(',')->required();
    cmd.body = [perturb_kind, rs](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_sweep_perturb(c, o, *perturb_kind, *rs); };
  }
  auto assoc = std::make_shared<AssocArgs>();
  {
    auto& cmd = make("assoc-matrix", "Label association matrix from top-1 cross-modal retrieval");
    add_data(cmd, "Manifest of query tracks");
    add_checkpoint(cmd);
    add_out(cmd, "Matrix JSON");
    cmd.overrides.add<std::size_t>(cmd.app, "--window", "Center window in segments",
                                   [](RunConfig& c, std::size_t v) { c.eval.window = v; });
    cmd.app->add_option("--targets", assoc->targets, "Manifest of target tracks (default: --data)");
    cmd.app->add_option("--query-label", assoc->query_label, "Label key of queries")->capture_default_str();
    cmd.app->add_option("--target-label", assoc->target_label, "Label key of targets")->capture_default_str();
    cmd.app->add_option("--query-modality", assoc->query_modality, "visual|music")->capture_default_str();
    cmd.body = [assoc](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_assoc_matrix(c, o, *assoc); };
  }
  auto cond = std::make_shared<ConditionArgs>();
  {
    auto& cmd = make("condition", "Build attribute vectors and run conditioned track retrieval");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Result JSON");
    cmd.overrides.add<std::size_t>(cmd.app, "--window", "Center window in segments",
                                   [](RunConfig& c, std::size_t v) { c.eval.window = v; });
    cmd.app->add_option("--label", cond->label, "key=value selecting attribute examples among targets");
    cmd.app->add_flag("--centered", cond->centered, "Subtract the target-domain average from the attribute");
    cmd.app->add_option("--centering", cond->centering, "mean|sum")->capture_default_str();
    cmd.app->add_option("--op", cond->ops, "+FILE or -FILE attribute operation, applied in order");
    cmd.app->add_option("--save-attribute", cond->save_attribute, "Write the built attribute vector here");
    cmd.app->add_option("--query-modality", cond->query_modality, "visual|music")->capture_default_str();
    cmd.body = [cond](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_condition(c, o, *cond); };
  }
  auto attn_mod = std::make_shared<std::string>("visual");
  {
    auto& cmd = make("attn", "Attention-rollout relevance of each segment");
    add_data(cmd);
    add_checkpoint(cmd);
    add_out(cmd, "Rollout JSON");
    cmd.overrides.add<std::size_t>(cmd.app, "--window", "Center window in segments",
                                   [](RunConfig& c, std::size_t v) { c.eval.window = v; });
    cmd.app->add_option("--modality", *attn_mod, "visual|music")->capture_default_str();
    cmd.body = [attn_mod](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_attn(c, o, *attn_mod); };
  }
  auto regions = std::make_shared<RegionArgs>();
  {
    auto& cmd = make("music-regions", "Music regions from per-frame class probabilities (CSV)");
    add_out(cmd, "Region JSON");
    auto* a = cmd.app;
    a->add_option("--csv", regions->csv, "Probability CSV: header of class names, one row per frame")->required();
    a->add_option("--fps", regions->params.fps, "Frames per second")->required();
    a->add_option("--music-classes", regions->music_classes, "Music class names")->delimiter(',')->capture_default_str();
    a->add_option("--music-thresh", regions->params.music_thresh)->capture_default_str();
    a->add_option("--other-thresh", regions->params.other_thresh)->capture_default_str();
    a->add_option("--closing", regions->params.closing_s, "Closing window in seconds")->capture_default_str();
    a->add_option("--min-duration", regions->params.min_duration_s, "Shortest region in seconds")->capture_default_str();
    cmd.body = [regions](const RunConfig& c, std::ostream& o, std::ostream&) { return cmd_music_regions(c, o, *regions); };
  }

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  if (args[0].empty() || args[0][0] != '-') {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == args[0]; });
    if (!known) {
      err << "error: unknown subcommand '" << args[0] << "'\n" << app.help();
      return kExitUsage;
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) {
      err << app.help();
    } else {
      err << app.get_subcommands().front()->help();
    }
    return kExitUsage;
  }

  for (auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      RunConfig config = cmd->config_path.empty() ? RunConfig{} : load_run_config(cmd->config_path);
      cmd->overrides.apply(config);
      config.propagate_seed();
      config.validate();
      return cmd->body(config, out, err);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace mvpt::cli
