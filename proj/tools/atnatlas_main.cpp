#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atnatlas/ablation.hpp"
#include "atnatlas/analysis.hpp"
#include "atnatlas/attention_io.hpp"
#include "atnatlas/checkpoint.hpp"
#include "atnatlas/encoder.hpp"
#include "atnatlas/errors.hpp"
#include "atnatlas/render.hpp"
#include "atnatlas/tasks.hpp"
#include "atnatlas/training.hpp"

namespace {

using namespace atnatlas;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
};

struct ModelOpts {
  int layers = 4;
  int heads = 4;
  int d_model = 64;
  int d_ff = 128;
  int vocab = 64;
  int max_len = 32;

  ModelConfig config() const {
    ModelConfig c;
    c.n_layers = layers;
    c.n_heads = heads;
    c.d_model = d_model;
    c.d_ff = d_ff;
    c.vocab_size = vocab;
    c.max_len = max_len;
    c.validate();
    return c;
  }
};

struct GrammarOpts {
  int vocab = 64;
  double negation_prob = 0.3;
  double corruption_rate = 0.5;
  double shuffle_prob = 0.5;
  double corrupt_fraction = 0.5;

  SyntheticGrammar grammar(std::uint64_t seed) const {
    SyntheticGrammar g;
    g.vocab_size = vocab;
    g.negation_prob = negation_prob;
    g.corruption_rate = corruption_rate;
    g.shuffle_prob = shuffle_prob;
    g.corrupt_fraction = corrupt_fraction;
    g.seed = seed;
    g.validate();
    return g;
  }
};

struct HyperOpts {
  int batch = 32;
  int epochs = 3;
  double lr = 1e-3;

  Hyperparams hyper(std::uint64_t seed) const {
    Hyperparams h;
    h.batch_size = batch;
    h.epochs = epochs;
    h.learning_rate = lr;
    h.seed = seed;
    h.validate();
    return h;
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  if (const char* env = std::getenv("ATNATLAS_OUT")) opts.out_dir = env;
  cmd->add_option("--out", opts.out_dir, "Output directory (env ATNATLAS_OUT overrides the default)");
  cmd->add_option("--seed", opts.seed, "Random seed");
}

void add_model(CLI::App* cmd, ModelOpts& opts) {
  cmd->add_option("--layers", opts.layers, "Encoder layers");
  cmd->add_option("--heads", opts.heads, "Attention heads per layer");
  cmd->add_option("--d-model", opts.d_model, "Model width");
  cmd->add_option("--d-ff", opts.d_ff, "Feed-forward width");
  cmd->add_option("--vocab", opts.vocab, "Vocabulary size");
  cmd->add_option("--max-len", opts.max_len, "Maximum sequence length");
}

void add_grammar(CLI::App* cmd, GrammarOpts& opts, bool with_vocab = true) {
  if (with_vocab) cmd->add_option("--vocab", opts.vocab, "Vocabulary size");
  cmd->add_option("--negation-prob", opts.negation_prob, "Negation insertion probability");
  cmd->add_option("--corruption-rate", opts.corruption_rate, "Pair-task corruption rate");
  cmd->add_option("--shuffle-prob", opts.shuffle_prob, "Pair-task segment shuffle probability");
  cmd->add_option("--corrupt-fraction", opts.corrupt_fraction,
                  "Fraction of tokens resampled in corrupted pairs");
}

void add_hyper(CLI::App* cmd, HyperOpts& opts) {
  cmd->add_option("--batch", opts.batch, "Batch size");
  cmd->add_option("--epochs", opts.epochs, "Training epochs");
  cmd->add_option("--lr", opts.lr, "Learning rate");
}

std::string resolve_out(const CommonOpts& common, const std::string& p) {
  const std::filesystem::path path(p);
  const std::filesystem::path full =
      path.is_absolute() ? path : std::filesystem::path(common.out_dir) / path;
  if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path());
  return full.string();
}

// Every command prints its resolved configuration, seed included, before
// doing any work.
void echo_config(json j) {
  std::cout << j.dump() << "\n";
}

void print_result(const json& j) { std::cout << j.dump() << "\n"; }

AblationSpec parse_ablation(const std::string& heads_csv, int disable_layer,
                            const ModelConfig& config) {
  AblationSpec spec;
  if (disable_layer >= 0) {
    spec = AblationSpec::whole_layer(disable_layer, config.n_heads);
  }
  if (!heads_csv.empty()) {
    std::size_t pos = 0;
    while (pos < heads_csv.size()) {
      const std::size_t comma = heads_csv.find(',', pos);
      const std::string item = heads_csv.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const std::size_t colon = item.find(':');
      if (colon == std::string::npos) {
        throw DataError("--disable expects layer:head pairs, got '" + item + "'");
      }
      try {
        spec.add({std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
      } catch (const std::exception&) {
        throw DataError("--disable expects integers, got '" + item + "'");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  spec.validate(config);
  return spec;
}

FeatureSpec parse_feature(const std::string& spec) {
  if (spec == "cls") return FeatureSpec::cls();
  if (spec == "sep") return FeatureSpec::sep();
  if (spec.rfind("role:", 0) == 0) return FeatureSpec::for_role(role_from_name(spec.substr(5)));
  if (spec.rfind("tokens:", 0) == 0) return FeatureSpec::for_tokens(read_token_list(spec.substr(7)));
  throw DataError("--feature expects role:NAME, tokens:FILE, cls, or sep; got '" + spec + "'");
}

json layer_means_json(const HeadScoreMap& scores) {
  json out = json::array();
  for (double m : layer_means(scores)) out.push_back(m);
  return out;
}

Dataset load_dataset(const std::string& path) { return read_dataset_jsonl(path); }

int run_app(int argc, char** argv) {
  CLI::App app{"atnatlas: a desk-scale encoder attention workbench"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);  // usage text on bad invocations
  app.set_config("--config", "", "Read options from a TOML/INI file");

  // ---- gen-data -------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  CommonOpts gen_common;
  GrammarOpts gen_grammar;
  std::string gen_task = "single";
  std::size_t gen_n = 1000;
  std::string gen_out;
  add_common(gen, gen_common);
  add_grammar(gen, gen_grammar);
  gen->add_option("--task", gen_task, "single, pair, or relations")
      ->check(CLI::IsMember({"single", "pair", "relations"}));
  gen->add_option("--n", gen_n, "Number of examples");
  gen->add_option("-o,--output", gen_out, "Output JSONL file")->required();
  gen->callback([&] {
    echo_config({{"command", "gen-data"},
                 {"task", gen_task},
                 {"n", gen_n},
                 {"seed", gen_common.seed},
                 {"vocab", gen_grammar.vocab},
                 {"negation_prob", gen_grammar.negation_prob},
                 {"corruption_rate", gen_grammar.corruption_rate},
                 {"shuffle_prob", gen_grammar.shuffle_prob},
                 {"corrupt_fraction", gen_grammar.corrupt_fraction},
                 {"output", gen_out}});
    const SyntheticGrammar g = gen_grammar.grammar(gen_common.seed);
    Dataset data;
    if (gen_task == "single") {
      data = generate_single_task(g, gen_n);
    } else if (gen_task == "pair") {
      data = generate_pair_task(g, gen_n);
    } else {
      data = generate_relation_annotations(g, gen_n);
    }
    const std::string path = resolve_out(gen_common, gen_out);
    write_dataset_jsonl(path, data);
    print_result({{"written", path}, {"examples", data.size()}});
  });

  // ---- pretrain -------------------------------------------------------
  auto* pre = app.add_subcommand("pretrain", "Masked-token pretraining on a generated corpus");
  CommonOpts pre_common;
  ModelOpts pre_model;
  GrammarOpts pre_grammar;
  HyperOpts pre_hyper;
  PretrainOptions pre_opts;
  std::string pre_out, pre_log;
  add_common(pre, pre_common);
  add_model(pre, pre_model);
  add_grammar(pre, pre_grammar, /*with_vocab=*/false);  // --vocab comes from the model flags
  add_hyper(pre, pre_hyper);
  pre->add_option("--n-train", pre_opts.n_train, "Training corpus size");
  pre->add_option("--n-heldout", pre_opts.n_heldout, "Held-out corpus size");
  pre->add_option("--mask-rate", pre_opts.mask_rate, "Masking rate");
  pre->add_option("--pair-fraction", pre_opts.pair_fraction, "Fraction of two-segment examples");
  pre->add_option("-o,--output", pre_out, "Output checkpoint")->required();
  pre->add_option("--log", pre_log, "Training log CSV");
  pre->callback([&] {
    pre_grammar.vocab = pre_model.vocab;
    echo_config({{"command", "pretrain"},
                 {"seed", pre_common.seed},
                 {"layers", pre_model.layers},
                 {"heads", pre_model.heads},
                 {"d_model", pre_model.d_model},
                 {"d_ff", pre_model.d_ff},
                 {"vocab", pre_model.vocab},
                 {"max_len", pre_model.max_len},
                 {"batch", pre_hyper.batch},
                 {"epochs", pre_hyper.epochs},
                 {"lr", pre_hyper.lr},
                 {"n_train", pre_opts.n_train},
                 {"n_heldout", pre_opts.n_heldout},
                 {"mask_rate", pre_opts.mask_rate},
                 {"pair_fraction", pre_opts.pair_fraction},
                 {"output", pre_out}});
    const ModelConfig config = pre_model.config();
    const std::string log_path = pre_log.empty() ? "" : resolve_out(pre_common, pre_log);
    const PretrainResult result =
        pretrain(config, pre_grammar.grammar(pre_common.seed), pre_hyper.hyper(pre_common.seed),
                 pre_opts, log_path);
    const std::string path = resolve_out(pre_common, pre_out);
    save_checkpoint(result.params, config, path, "pretrained");
    print_result({{"checkpoint", path},
                  {"heldout_loss_initial", result.heldout_loss_initial},
                  {"heldout_loss_final", result.heldout_loss_final},
                  {"heldout_masked_accuracy", result.heldout_accuracy}});
  });

  // ---- finetune -------------------------------------------------------
  auto* fin = app.add_subcommand("finetune", "Fine-tune the task head and encoder end to end");
  CommonOpts fin_common;
  ModelOpts fin_model;
  HyperOpts fin_hyper;
  std::string fin_ckpt, fin_data, fin_eval_data, fin_out, fin_log, fin_metric = "accuracy";
  bool fin_random_init = false;
  double fin_eval_frac = 0.125;
  add_common(fin, fin_common);
  add_model(fin, fin_model);
  add_hyper(fin, fin_hyper);
  fin->add_option("--ckpt", fin_ckpt, "Initial checkpoint (pretrained weights)");
  fin->add_flag("--random-init", fin_random_init,
                "Initialize from the normal distribution instead of a checkpoint");
  fin->add_option("--data", fin_data, "Training JSONL dataset")->required();
  fin->add_option("--eval-data", fin_eval_data, "Held-out JSONL dataset");
  fin->add_option("--eval-frac", fin_eval_frac,
                  "Tail fraction of --data held out when --eval-data is absent");
  fin->add_option("--metric", fin_metric)->check(CLI::IsMember({"accuracy", "f1"}));
  fin->add_option("-o,--output", fin_out, "Output checkpoint")->required();
  fin->add_option("--log", fin_log, "Training log CSV");
  fin->callback([&] {
    echo_config({{"command", "finetune"},
                 {"seed", fin_common.seed},
                 {"ckpt", fin_ckpt},
                 {"random_init", fin_random_init},
                 {"data", fin_data},
                 {"eval_data", fin_eval_data},
                 {"eval_frac", fin_eval_frac},
                 {"metric", fin_metric},
                 {"batch", fin_hyper.batch},
                 {"epochs", fin_hyper.epochs},
                 {"lr", fin_hyper.lr},
                 {"output", fin_out}});
    if (fin_ckpt.empty() == !fin_random_init) {
      throw DataError("finetune: pass exactly one of --ckpt or --random-init");
    }
    ModelConfig config;
    Parameters init;
    if (fin_random_init) {
      config = fin_model.config();
      init = init_params(config, fin_common.seed);
    } else {
      Checkpoint ckpt = load_checkpoint(fin_ckpt);
      config = ckpt.config;
      init = std::move(ckpt.params);
    }
    Dataset train = load_dataset(fin_data);
    Dataset heldout;
    if (!fin_eval_data.empty()) {
      heldout = load_dataset(fin_eval_data);
    } else {
      if (fin_eval_frac <= 0.0 || fin_eval_frac >= 1.0) {
        throw DataError("finetune: --eval-frac must lie strictly inside (0,1)");
      }
      const auto n_eval = static_cast<std::size_t>(fin_eval_frac * train.size());
      if (n_eval == 0 || n_eval >= train.size()) {
        throw DataError("finetune: dataset too small for the requested --eval-frac");
      }
      heldout.assign(train.end() - n_eval, train.end());
      train.resize(train.size() - n_eval);
    }
    const std::string log_path = fin_log.empty() ? "" : resolve_out(fin_common, fin_log);
    const FineTuneResult result =
        fine_tune(config, std::move(init), train, heldout, fin_hyper.hyper(fin_common.seed),
                  metric_from_name(fin_metric), log_path);
    const std::string path = resolve_out(fin_common, fin_out);
    save_checkpoint(result.params, config, path, "finetuned");
    print_result({{"checkpoint", path},
                  {"metric", fin_metric},
                  {"heldout_score", result.score},
                  {"train_examples", train.size()},
                  {"heldout_examples", heldout.size()}});
  });

  // ---- evaluate -------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  CommonOpts eval_common;
  std::string eval_ckpt, eval_data, eval_metric = "accuracy", eval_disable;
  int eval_disable_layer = -1;
  add_common(eval, eval_common);
  eval->add_option("--ckpt", eval_ckpt)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--metric", eval_metric)->check(CLI::IsMember({"accuracy", "f1"}));
  eval->add_option("--disable", eval_disable, "Heads to disable, layer:head[,layer:head...]");
  eval->add_option("--disable-layer", eval_disable_layer, "Disable every head of one layer");
  eval->callback([&] {
    echo_config({{"command", "evaluate"},
                 {"seed", eval_common.seed},
                 {"ckpt", eval_ckpt},
                 {"data", eval_data},
                 {"metric", eval_metric},
                 {"disable", eval_disable},
                 {"disable_layer", eval_disable_layer}});
    const Checkpoint ckpt = load_checkpoint(eval_ckpt);
    const Dataset data = load_dataset(eval_data);
    const AblationSpec spec = parse_ablation(eval_disable, eval_disable_layer, ckpt.config);
    const double score =
        evaluate(ckpt.config, ckpt.params, data, metric_from_name(eval_metric), spec);
    print_result({{"score", score}, {"examples", data.size()}, {"disabled_heads", spec.size()}});
  });

  // ---- dump-attn ------------------------------------------------------
  auto* dump = app.add_subcommand("dump-attn", "Extract self-attention maps to a tensor file");
  CommonOpts dump_common;
  std::string dump_ckpt, dump_data, dump_out, dump_render_dir, dump_norm = "global-max",
                                               dump_disable;
  int dump_disable_layer = -1;
  std::size_t dump_begin = 0, dump_count = 1;
  add_common(dump, dump_common);
  dump->add_option("--ckpt", dump_ckpt)->required();
  dump->add_option("--data", dump_data)->required();
  dump->add_option("--begin", dump_begin, "First example index");
  dump->add_option("--count", dump_count, "Number of examples");
  dump->add_option("-o,--output", dump_out, "Output tensor file")->required();
  dump->add_option("--render-dir", dump_render_dir, "Also render PGM heatmaps here");
  dump->add_option("--norm", dump_norm)->check(CLI::IsMember({"global-max", "per-row"}));
  dump->add_option("--disable", dump_disable, "Heads to disable, layer:head[,...]");
  dump->add_option("--disable-layer", dump_disable_layer, "Disable every head of one layer");
  dump->callback([&] {
    echo_config({{"command", "dump-attn"},
                 {"seed", dump_common.seed},
                 {"ckpt", dump_ckpt},
                 {"data", dump_data},
                 {"begin", dump_begin},
                 {"count", dump_count},
                 {"output", dump_out},
                 {"render_dir", dump_render_dir},
                 {"norm", dump_norm},
                 {"disable", dump_disable},
                 {"disable_layer", dump_disable_layer}});
    const Checkpoint ckpt = load_checkpoint(dump_ckpt);
    const Dataset data = load_dataset(dump_data);
    if (dump_begin + dump_count > data.size() || dump_count == 0) {
      throw DataError("dump-attn: requested range [" + std::to_string(dump_begin) + ", " +
                      std::to_string(dump_begin + dump_count) + ") outside dataset of " +
                      std::to_string(data.size()) + " examples");
    }
    const AblationSpec spec = parse_ablation(dump_disable, dump_disable_layer, ckpt.config);
    ForwardOptions options;
    options.capture_attention = true;
    options.ablation = spec;
    std::vector<AttentionTensor> tensors;
    for (std::size_t i = dump_begin; i < dump_begin + dump_count; ++i) {
      ForwardResult res = forward(ckpt.config, ckpt.params, data[i].seq, options);
      tensors.push_back(std::move(*res.attention));
    }
    const std::string path = resolve_out(dump_common, dump_out);
    write_attention_dump(path, tensors);
    json result{{"written", path}, {"examples", tensors.size()}};
    if (!dump_render_dir.empty()) {
      const HeatmapNorm norm =
          dump_norm == "per-row" ? HeatmapNorm::PerRow : HeatmapNorm::GlobalMax;
      const std::filesystem::path dir = resolve_out(dump_common, dump_render_dir);
      std::filesystem::create_directories(dir);
      std::size_t n_images = 0;
      for (std::size_t e = 0; e < tensors.size(); ++e) {
        for (int l = 0; l < ckpt.config.n_layers; ++l) {
          for (int h = 0; h < ckpt.config.n_heads; ++h) {
            const std::string name = "ex" + std::to_string(dump_begin + e) + "_layer" +
                                     std::to_string(l) + "_head" + std::to_string(h) + ".pgm";
            render_heatmap(tensors[e].at(l, h), (dir / name).string(), norm);
            ++n_images;
          }
        }
      }
      result["images"] = n_images;
    }
    print_result(result);
  });

  // ---- patterns -------------------------------------------------------
  auto* pat = app.add_subcommand("patterns", "Classify attention maps into the five classes");
  CommonOpts pat_common;
  std::string pat_ckpt, pat_data, pat_out;
  std::size_t pat_limit = 1000;
  PatternThresholds pat_th;
  add_common(pat, pat_common);
  pat->add_option("--ckpt", pat_ckpt)->required();
  pat->add_option("--data", pat_data)->required();
  pat->add_option("--limit", pat_limit, "Examples cap");
  pat->add_option("--vert-hi", pat_th.vert_hi);
  pat->add_option("--diag-hi", pat_th.diag_hi);
  pat->add_option("--vert-lo", pat_th.vert_lo);
  pat->add_option("--diag-lo", pat_th.diag_lo);
  pat->add_option("--block-hi", pat_th.block_hi);
  pat->add_option("--diag-band", pat_th.diag_band, "Diagonal bandwidth in tokens");
  pat->add_option("-o,--output", pat_out, "Output prefix")->required();
  pat->callback([&] {
    echo_config({{"command", "patterns"},
                 {"seed", pat_common.seed},
                 {"ckpt", pat_ckpt},
                 {"data", pat_data},
                 {"limit", pat_limit},
                 {"vert_hi", pat_th.vert_hi},
                 {"diag_hi", pat_th.diag_hi},
                 {"vert_lo", pat_th.vert_lo},
                 {"diag_lo", pat_th.diag_lo},
                 {"block_hi", pat_th.block_hi},
                 {"diag_band", pat_th.diag_band},
                 {"output", pat_out}});
    const Checkpoint ckpt = load_checkpoint(pat_ckpt);
    const Dataset data = load_dataset(pat_data);
    const PatternDistribution dist =
        pattern_distribution(ckpt.config, ckpt.params, data, pat_limit, pat_th);
    const std::string fractions = resolve_out(pat_common, pat_out + "_fractions.csv");
    const std::string per_head = resolve_out(pat_common, pat_out + "_per_head.csv");
    write_pattern_fractions_csv(fractions, dist);
    write_pattern_per_head_csv(per_head, dist);
    print_result({{"fractions_csv", fractions}, {"per_head_csv", per_head},
                  {"maps", dist.n_maps}});
  });

  // ---- probe-relations --------------------------------------------------
  auto* probe = app.add_subcommand("probe-relations",
                                   "Score heads against annotated relation pairs");
  CommonOpts probe_common;
  std::string probe_ckpt, probe_data, probe_out;
  double probe_percentile = 99.0;
  int probe_max_elem = 3, probe_max_sent = 12, probe_min_dist = 2;
  add_common(probe, probe_common);
  probe->add_option("--ckpt", probe_ckpt)->required();
  probe->add_option("--data", probe_data, "Annotated JSONL dataset")->required();
  probe->add_option("--percentile", probe_percentile, "Detection percentile");
  probe->add_option("--max-elem", probe_max_elem, "Largest element span kept, in tokens");
  probe->add_option("--max-sent", probe_max_sent, "Longest sentence kept, in tokens");
  probe->add_option("--min-dist", probe_min_dist, "Smallest linked-pair distance kept");
  probe->add_option("-o,--output", probe_out, "Output prefix")->required();
  probe->callback([&] {
    echo_config({{"command", "probe-relations"},
                 {"seed", probe_common.seed},
                 {"ckpt", probe_ckpt},
                 {"data", probe_data},
                 {"percentile", probe_percentile},
                 {"max_elem", probe_max_elem},
                 {"max_sent", probe_max_sent},
                 {"min_dist", probe_min_dist},
                 {"output", probe_out}});
    const Checkpoint ckpt = load_checkpoint(probe_ckpt);
    const Dataset raw = load_dataset(probe_data);
    const Dataset annos =
        filter_annotations(raw, probe_max_elem, probe_max_sent, probe_min_dist);
    if (annos.empty()) {
      throw DataError("probe-relations: no annotations survive the filters");
    }
    const HeadScoreMap scores = relation_head_scores(ckpt.config, ckpt.params, annos);
    const auto detected = detect_relation_heads(scores, probe_percentile);
    std::vector<double> flat(scores.scores.data(),
                             scores.scores.data() + scores.scores.size());
    const double threshold = percentile_linear(flat, probe_percentile);
    const std::string scores_csv = resolve_out(probe_common, probe_out + "_scores.csv");
    write_head_scores_csv(scores_csv, scores);
    json heads = json::array();
    for (const HeadCoord& c : detected) heads.push_back({{"layer", c.layer}, {"head", c.head}});
    const std::string detected_json = resolve_out(probe_common, probe_out + "_detected.json");
    {
      std::ofstream out(detected_json, std::ios::trunc);
      if (!out) throw DataError("cannot open file for writing: " + detected_json);
      out << json{{"annotations_in", raw.size()},
                  {"annotations_kept", annos.size()},
                  {"percentile", probe_percentile},
                  {"threshold", threshold},
                  {"detected", heads}}
                 .dump(2)
          << "\n";
    }
    print_result({{"scores_csv", scores_csv},
                  {"detected_json", detected_json},
                  {"kept", annos.size()},
                  {"detected", detected.size()}});
  });

  // ---- compare --------------------------------------------------------
  auto* cmp = app.add_subcommand("compare",
                                 "Per-head cosine similarity between two checkpoints");
  CommonOpts cmp_common;
  std::string cmp_a, cmp_b, cmp_data, cmp_out;
  std::size_t cmp_limit = 1000;
  add_common(cmp, cmp_common);
  cmp->add_option("--ckpt-a", cmp_a)->required();
  cmp->add_option("--ckpt-b", cmp_b)->required();
  cmp->add_option("--data", cmp_data)->required();
  cmp->add_option("--limit", cmp_limit, "Example cap (random sample beyond this)");
  cmp->add_option("-o,--output", cmp_out, "Output prefix")->required();
  cmp->callback([&] {
    echo_config({{"command", "compare"},
                 {"seed", cmp_common.seed},
                 {"ckpt_a", cmp_a},
                 {"ckpt_b", cmp_b},
                 {"data", cmp_data},
                 {"limit", cmp_limit},
                 {"output", cmp_out}});
    const Checkpoint a = load_checkpoint(cmp_a);
    const Checkpoint b = load_checkpoint(cmp_b);
    if (!(a.config == b.config)) {
      throw DataError("compare: checkpoints have different configurations");
    }
    const Dataset data = load_dataset(cmp_data);
    const HeadScoreMap sim =
        head_cosine_similarity(a.config, a.params, b.params, data, cmp_limit, cmp_common.seed);
    const std::string cosine_csv = resolve_out(cmp_common, cmp_out + "_cosine.csv");
    write_head_scores_csv(cosine_csv, sim);
    const auto means = layer_means(sim);
    // the structural expectation is that later layers change most, i.e.
    // their similarity mean is the lowest; flag the opposite as a divergence
    const bool divergence = means.back() > means.front();
    const std::string layers_json = resolve_out(cmp_common, cmp_out + "_layers.json");
    {
      std::ofstream out(layers_json, std::ios::trunc);
      if (!out) throw DataError("cannot open file for writing: " + layers_json);
      out << json{{"layer_means", layer_means_json(sim)},
                  {"examples", sim.n_examples},
                  {"last_vs_first_divergence", divergence}}
                 .dump(2)
          << "\n";
    }
    print_result({{"cosine_csv", cosine_csv},
                  {"layers_json", layers_json},
                  {"examples", sim.n_examples},
                  {"last_vs_first_divergence", divergence}});
  });

  // ---- feature-attn ---------------------------------------------------
  auto* feat = app.add_subcommand("feature-attn", "Aggregate attention into a feature");
  CommonOpts feat_common;
  std::string feat_ckpt, feat_data, feat_spec, feat_out;
  add_common(feat, feat_common);
  feat->add_option("--ckpt", feat_ckpt)->required();
  feat->add_option("--data", feat_data)->required();
  feat->add_option("--feature", feat_spec, "role:NAME, tokens:FILE, cls, or sep")->required();
  feat->add_option("-o,--output", feat_out, "Output CSV")->required();
  feat->callback([&] {
    echo_config({{"command", "feature-attn"},
                 {"seed", feat_common.seed},
                 {"ckpt", feat_ckpt},
                 {"data", feat_data},
                 {"feature", feat_spec},
                 {"output", feat_out}});
    const Checkpoint ckpt = load_checkpoint(feat_ckpt);
    const Dataset data = load_dataset(feat_data);
    const FeatureSpec feature = parse_feature(feat_spec);
    const HeadScoreMap scores = feature_attention_map(ckpt.config, ckpt.params, data, feature);
    const std::string path = resolve_out(feat_common, feat_out);
    write_head_scores_csv(path, scores);
    print_result({{"written", path}, {"examples_with_feature", scores.n_examples}});
  });

  // ---- cls-profile ----------------------------------------------------
  auto* cls = app.add_subcommand("cls-profile",
                                 "Final-layer [CLS] attention by target category");
  CommonOpts cls_common;
  std::string cls_ckpt, cls_data, cls_out;
  add_common(cls, cls_common);
  cls->add_option("--ckpt", cls_ckpt)->required();
  cls->add_option("--data", cls_data)->required();
  cls->add_option("-o,--output", cls_out, "Output CSV")->required();
  cls->callback([&] {
    echo_config({{"command", "cls-profile"},
                 {"seed", cls_common.seed},
                 {"ckpt", cls_ckpt},
                 {"data", cls_data},
                 {"output", cls_out}});
    const Checkpoint ckpt = load_checkpoint(cls_ckpt);
    const Dataset data = load_dataset(cls_data);
    const ClsProfile profile = cls_attention_profile(ckpt.config, ckpt.params, data);
    const std::string path = resolve_out(cls_common, cls_out);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out << "head,category,share\n";
    char buf[40];
    for (std::size_t h = 0; h < profile.per_head.size(); ++h) {
      for (const auto& [role, share] : profile.per_head[h]) {
        std::snprintf(buf, sizeof(buf), "%.17g", share);
        out << h << ',' << role_name(role) << ',' << buf << '\n';
      }
    }
    out.close();
    print_result({{"written", path}, {"examples", profile.n_examples}});
  });

  // ---- ablate-heads / ablate-layers ------------------------------------
  auto* abh = app.add_subcommand("ablate-heads", "Disable one head at a time and rescore");
  CommonOpts abh_common;
  std::string abh_ckpt, abh_data, abh_metric = "accuracy", abh_out;
  std::size_t abh_random_k = 0;
  add_common(abh, abh_common);
  abh->add_option("--ckpt", abh_ckpt)->required();
  abh->add_option("--data", abh_data)->required();
  abh->add_option("--metric", abh_metric)->check(CLI::IsMember({"accuracy", "f1"}));
  abh->add_option("--random-k", abh_random_k,
                  "Also report the mean delta of k random single-head ablations");
  abh->add_option("-o,--output", abh_out, "Output prefix")->required();
  abh->callback([&] {
    echo_config({{"command", "ablate-heads"},
                 {"seed", abh_common.seed},
                 {"ckpt", abh_ckpt},
                 {"data", abh_data},
                 {"metric", abh_metric},
                 {"random_k", abh_random_k},
                 {"output", abh_out}});
    const Checkpoint ckpt = load_checkpoint(abh_ckpt);
    const Dataset data = load_dataset(abh_data);
    const MetricKind kind = metric_from_name(abh_metric);
    const AblationReport report =
        sweep_heads(ckpt.config, ckpt.params, data, kind, abh_data);
    const std::string csv = resolve_out(abh_common, abh_out + "_sweep.csv");
    const std::string summary = resolve_out(abh_common, abh_out + "_summary.json");
    write_report_csv(csv, report);
    write_report_summary_json(summary, report);
    json result{{"sweep_csv", csv}, {"summary_json", summary}, {"baseline", report.baseline}};
    if (abh_random_k > 0) {
      const RandomHeadBaseline rb = random_head_baseline(ckpt.config, ckpt.params, data, kind,
                                                         abh_random_k, abh_common.seed);
      result["random_mean_delta"] = rb.mean_delta;
      result["random_stddev_delta"] = rb.stddev_delta;
    }
    print_result(result);
  });

  auto* abl = app.add_subcommand("ablate-layers", "Disable one layer at a time and rescore");
  CommonOpts abl_common;
  std::string abl_ckpt, abl_data, abl_metric = "accuracy", abl_out;
  add_common(abl, abl_common);
  abl->add_option("--ckpt", abl_ckpt)->required();
  abl->add_option("--data", abl_data)->required();
  abl->add_option("--metric", abl_metric)->check(CLI::IsMember({"accuracy", "f1"}));
  abl->add_option("-o,--output", abl_out, "Output prefix")->required();
  abl->callback([&] {
    echo_config({{"command", "ablate-layers"},
                 {"seed", abl_common.seed},
                 {"ckpt", abl_ckpt},
                 {"data", abl_data},
                 {"metric", abl_metric},
                 {"output", abl_out}});
    const Checkpoint ckpt = load_checkpoint(abl_ckpt);
    const Dataset data = load_dataset(abl_data);
    const AblationReport report =
        sweep_layers(ckpt.config, ckpt.params, data, metric_from_name(abl_metric), abl_data);
    const std::string csv = resolve_out(abl_common, abl_out + "_sweep.csv");
    const std::string summary = resolve_out(abl_common, abl_out + "_summary.json");
    write_report_csv(csv, report);
    write_report_summary_json(summary, report);
    print_result({{"sweep_csv", csv}, {"summary_json", summary}, {"baseline", report.baseline}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? kExitOk : kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
