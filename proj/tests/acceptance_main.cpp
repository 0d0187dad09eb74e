// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. The training-based criteria share one fixture (a
// pretrained model and two fine-tuned arms) built on first use.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atnatlas/ablation.hpp"
#include "atnatlas/analysis.hpp"
#include "atnatlas/attention_io.hpp"
#include "atnatlas/checkpoint.hpp"
#include "atnatlas/encoder.hpp"
#include "atnatlas/errors.hpp"
#include "atnatlas/render.hpp"
#include "atnatlas/rng.hpp"
#include "atnatlas/tasks.hpp"
#include "atnatlas/training.hpp"

namespace {

using namespace atnatlas;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
  void note(const std::string& message) {
    if (ok && detail.empty()) detail = message;
  }
};

ModelConfig desk_config() {
  ModelConfig c;
  c.n_layers = 4;
  c.n_heads = 4;
  c.d_model = 64;
  c.d_ff = 128;
  c.vocab_size = 64;
  c.max_len = 32;
  return c;
}

SyntheticGrammar desk_grammar() {
  SyntheticGrammar g;
  g.seed = 101;
  return g;
}

// Trained models shared by the cosine, training-sanity, sweep, and feature
// criteria. Built once.
struct TrainedFixture {
  ModelConfig config;
  Parameters pretrained;
  double mlm_accuracy = 0.0;
  Parameters tuned_from_pretrained;
  double score_pretrained_init = 0.0;
  Parameters tuned_from_random;
  double score_random_init = 0.0;
  Dataset pair_eval;
  Dataset single_eval;
  double train_seconds = 0.0;
};

const TrainedFixture& trained_fixture() {
  static const TrainedFixture fixture = [] {
    TrainedFixture f;
    f.config = desk_config();
    const auto start = Clock::now();

    std::fprintf(stderr, "[fixture] pretraining...\n");
    Hyperparams pre_hyper;
    pre_hyper.epochs = 2;
    pre_hyper.seed = 7;
    PretrainOptions pre_opts;
    pre_opts.n_train = 2048;
    pre_opts.n_heldout = 256;
    const PretrainResult pre = pretrain(f.config, desk_grammar(), pre_hyper, pre_opts);
    f.pretrained = pre.params;
    f.mlm_accuracy = pre.heldout_accuracy;

    SyntheticGrammar task_grammar = desk_grammar();
    task_grammar.seed = 202;
    Dataset pair_all = generate_pair_task(task_grammar, 4096 + 512);
    f.pair_eval.assign(pair_all.end() - 512, pair_all.end());
    pair_all.resize(4096);

    SyntheticGrammar single_grammar = desk_grammar();
    single_grammar.seed = 203;
    f.single_eval = generate_single_task(single_grammar, 512);

    Hyperparams tune_hyper;  // batch 32, 3 epochs
    tune_hyper.seed = 11;

    std::fprintf(stderr, "[fixture] fine-tuning from the pretrained checkpoint...\n");
    FineTuneResult arm_pre = fine_tune(f.config, f.pretrained, pair_all, f.pair_eval,
                                       tune_hyper, MetricKind::Accuracy);
    f.tuned_from_pretrained = std::move(arm_pre.params);
    f.score_pretrained_init = arm_pre.score;

    std::fprintf(stderr, "[fixture] fine-tuning from a random init...\n");
    FineTuneResult arm_rand = fine_tune(f.config, init_params(f.config, tune_hyper.seed),
                                        pair_all, f.pair_eval, tune_hyper,
                                        MetricKind::Accuracy);
    f.tuned_from_random = std::move(arm_rand.params);
    f.score_random_init = arm_rand.score;

    f.train_seconds = seconds_since(start);
    std::fprintf(stderr, "[fixture] done in %.1f s\n", f.train_seconds);
    return f;
  }();
  return fixture;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---- criterion 1: attention validity ------------------------------------

void attention_validity(Check& check) {
  const auto start = Clock::now();
  const ModelConfig cfg = desk_config();
  const Parameters params = init_params(cfg, 31);
  SyntheticGrammar g = desk_grammar();
  g.seed = 301;
  Dataset data = generate_single_task(g, 50);
  g.seed = 302;
  const Dataset pairs = generate_pair_task(g, 50);
  data.insert(data.end(), pairs.begin(), pairs.end());

  double worst = 0.0;
  ForwardOptions opts;
  opts.capture_attention = true;
  for (const Example& ex : data) {
    const ForwardResult res = forward(cfg, params, ex.seq, opts);
    for (const Matrix& map : res.attention->maps) {
      for (std::size_t i = 0; i < map.rows(); ++i) {
        double sum = 0.0;
        for (double v : map.row(i)) sum += v;
        worst = std::max(worst, std::fabs(sum - 1.0));
      }
    }
  }
  const double elapsed = seconds_since(start);
  check.require(worst <= 1e-6, "row sum deviates by " + fmt(worst));
  check.require(elapsed < 5.0, "took " + fmt(elapsed) + " s, over the 5 s budget");
  check.note("100 examples, max |row sum - 1| = " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ---- criterion 2: ablation exactness -------------------------------------

void ablation_exactness(Check& check) {
  const ModelConfig cfg = desk_config();
  Parameters params = init_params(cfg, 32);
  SyntheticGrammar g = desk_grammar();
  g.seed = 303;
  const Dataset data = generate_pair_task(g, 5);

  // captured rows of every ablated head equal 1/L bit-exactly
  for (const Example& ex : data) {
    const double uniform = 1.0 / static_cast<double>(ex.seq.length());
    ForwardOptions opts;
    opts.capture_attention = true;
    opts.ablation = AblationSpec::all_heads(cfg);
    const ForwardResult res = forward(cfg, params, ex.seq, opts);
    for (const Matrix& map : res.attention->maps) {
      for (std::size_t i = 0; i < map.size(); ++i) {
        if (map.data()[i] != uniform) {
          check.require(false, "ablated map cell is not bit-equal to 1/L");
          return;
        }
      }
    }
  }

  // zeroing a head's output-projection slice makes its ablation invisible
  const int layer = 2, head = 3;
  const int dh = cfg.d_head();
  for (int r = head * dh; r < (head + 1) * dh; ++r) {
    for (int c = 0; c < cfg.d_model; ++c) params.layers[layer].wo(r, c) = 0.0;
  }
  double worst = 0.0;
  ForwardOptions ablate;
  ablate.ablation = AblationSpec::single(layer, head);
  for (const Example& ex : data) {
    const auto base = forward(cfg, params, ex.seq);
    const auto abl = forward(cfg, params, ex.seq, ablate);
    for (int i = 0; i < kTaskClasses; ++i) {
      worst = std::max(worst, std::fabs(base.task_logits[i] - abl.task_logits[i]));
    }
  }
  check.require(worst < 1e-12, "zero-slice ablation moved logits by " + fmt(worst));
  check.note("uniform rows bit-exact; zero-slice logit shift " + fmt(worst));
}

// ---- criterion 3: gradient correctness ------------------------------------

double loss_through_forward(const ModelConfig& cfg, const Parameters& params,
                            const TokenSequence& seq, const LossSpec& loss) {
  if (loss.kind == LossKind::TaskCrossEntropy) {
    return cross_entropy(forward(cfg, params, seq).task_logits, loss.label);
  }
  ForwardOptions opts;
  opts.compute_mlm = true;
  const ForwardResult res = forward(cfg, params, seq, opts);
  double total = 0.0;
  for (const MaskedTarget& t : loss.masked) {
    total += cross_entropy(res.mlm_logits->row(t.position), t.token_id);
  }
  return total / static_cast<double>(loss.masked.size());
}

void gradient_correctness(Check& check) {
  const auto start = Clock::now();
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.vocab_size = 16;
  cfg.max_len = 8;

  // operating point with O(1) activations so every array has a gradient
  // above finite-difference resolution
  Parameters params = Parameters::zeros(cfg);
  Rng rng(33);
  for_each_param(params, [&](const std::string& name, Matrix& m) {
    const std::string leaf = name.substr(name.rfind('.') + 1);
    const bool is_gain = leaf.find("gain") != std::string::npos;
    const bool is_bias = leaf[0] == 'b' || leaf.find("_b") != std::string::npos;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data()[i] = is_gain ? 1.0 + 0.1 * rng.normal()
                            : (is_bias ? 0.1 * rng.normal() : 0.4 * rng.normal());
    }
  });

  const TokenSequence seq = make_sequence({4, 5}, {6, 7});
  LossSpec loss;
  loss.kind = LossKind::TaskCrossEntropy;
  loss.label = 1;
  const BackwardResult analytic = backward(cfg, params, seq, loss);

  const double step = 1e-5;
  std::vector<std::pair<std::string, Matrix*>> refs;
  for_each_param(params, [&](const std::string& name, Matrix& m) { refs.emplace_back(name, &m); });
  std::vector<const Matrix*> grads;
  for_each_param(analytic.grads,
                 [&](const std::string&, const Matrix& m) { grads.push_back(&m); });

  double worst_rel = 0.0;
  std::string worst_name = "-";
  for (std::size_t a = 0; a < refs.size(); ++a) {
    Matrix& array = *refs[a].second;
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < array.size(); ++i) {
      const double saved = array.data()[i];
      array.data()[i] = saved + step;
      const double up = loss_through_forward(cfg, params, seq, loss);
      array.data()[i] = saved - step;
      const double down = loss_through_forward(cfg, params, seq, loss);
      array.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double g = grads[a]->data()[i];
      diff_sq += (g - numeric) * (g - numeric);
      a_sq += g * g;
      n_sq += numeric * numeric;
    }
    const double a_norm = std::sqrt(a_sq), n_norm = std::sqrt(n_sq);
    double rel;
    if (a_norm < 1e-8 && n_norm < 1e-8) {
      rel = std::sqrt(diff_sq) > 1e-8 ? 1.0 : 0.0;  // zero-gradient arrays must stay zero
    } else {
      rel = std::sqrt(diff_sq) / std::max(a_norm, n_norm);
    }
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_name = refs[a].first;
    }
    check.require(rel <= 1e-4, "array " + refs[a].first + " relative error " + fmt(rel));
  }
  const double elapsed = seconds_since(start);
  check.require(elapsed < 60.0, "took " + fmt(elapsed) + " s, over the 60 s budget");
  check.note("worst array " + worst_name + " rel err " + fmt(worst_rel) + ", " + fmt(elapsed) +
             " s");
}

// ---- criterion 4: pattern classifier --------------------------------------

void pattern_classifier(Check& check) {
  Rng rng(34);
  // the five canonical noiseless maps must classify perfectly
  for (PatternClass cls : kAllPatternClasses) {
    const LabeledMap lm = make_canonical_map(cls, 20, cls == PatternClass::Block, 0.0, rng);
    const PatternClass pred =
        classify_pattern(pattern_features(lm.map, lm.special_positions, lm.segment_ids));
    check.require(pred == lm.label,
                  std::string("canonical ") + pattern_class_name(cls) + " classified as " +
                      pattern_class_name(pred));
  }
  // noisy labeled set from the documented generator
  const auto maps = make_labeled_maps(500, 0.4, rng);
  const double f1 = classifier_macro_f1(maps);
  check.require(f1 >= 0.8, "macro F1 " + fmt(f1) + " below 0.8");
  check.note("canonical 5/5, noisy macro F1 " + fmt(f1));
}

// ---- criterion 5: planted-relation recovery --------------------------------

void planted_relation_recovery(Check& check) {
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const int layers = 4, heads = 4;
    const std::size_t len = 8 + rng.below(17);  // 8..24
    const int target_layer = static_cast<int>(rng.below(layers));
    const int target_head = static_cast<int>(rng.below(heads));

    AttentionTensor attn(layers, heads, len);
    for (Matrix& m : attn.maps) {
      // near-uniform rows, jitter well under the planted 2/L excess
      for (std::size_t i = 0; i < len; ++i) {
        auto row = m.row(i);
        double sum = 0.0;
        for (double& v : row) {
          v = 1.0 + 0.4 * rng.uniform();
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
    }
    const int pred_pos = static_cast<int>(len) - 2;
    const std::vector<RelationPair> pairs = {{{pred_pos, 1}, {1, 1}}};
    attn.at(target_layer, target_head)(pred_pos, 1) = 3.0 / static_cast<double>(len);

    HeadScoreMap scores;
    scores.scores = relation_scores_for_example(attn, pairs);
    scores.n_examples = 1;
    const auto found = detect_relation_heads(scores, 99.0);
    if (found.size() == 1 && found[0].layer == target_layer && found[0].head == target_head) {
      ++recovered;
    }
  }
  check.require(recovered == 20, "recovered " + std::to_string(recovered) + "/20 seeds");
  check.note("20/20 seeds recovered exactly");
}

// ---- criterion 6: annotation filters ---------------------------------------

Example annotation_example(int body_tokens, int elem_len, int gap) {
  Example ex;
  std::vector<int> body(body_tokens, kFirstRegularToken);
  ex.seq = make_sequence(body);
  ex.roles.assign(ex.seq.length(), TokenRole::Filler);
  const int elem_start = 1;
  const int pred_start = elem_start + elem_len - 1 + gap;
  ex.relation_pairs = {{{pred_start, 1}, {elem_start, elem_len}}};
  return ex;
}

void annotation_filters(Check& check) {
  // sentence length boundary: 12 kept, 13 dropped
  check.require(filter_annotations({annotation_example(12, 1, 3)}).size() == 1,
                "12-token sentence was dropped");
  check.require(filter_annotations({annotation_example(13, 1, 3)}).empty(),
                "13-token sentence was kept");
  // element size boundary: 3 kept, 4 dropped
  check.require(filter_annotations({annotation_example(12, 3, 3)}).size() == 1,
                "3-token element was dropped");
  check.require(filter_annotations({annotation_example(12, 4, 3)}).empty(),
                "4-token element was kept");
  // pair distance boundary: 2 kept, 1 dropped
  check.require(filter_annotations({annotation_example(12, 1, 2)}).size() == 1,
                "distance-2 pair was dropped");
  check.require(filter_annotations({annotation_example(12, 1, 1)}).empty(),
                "distance-1 pair was kept");
  check.note("all six boundary cases behave");
}

// ---- criterion 7: cosine pipeline ------------------------------------------

void cosine_pipeline(Check& check) {
  // self-similarity on an untrained model
  const ModelConfig cfg = desk_config();
  const Parameters params = init_params(cfg, 37);
  SyntheticGrammar g = desk_grammar();
  g.seed = 304;
  const Dataset data = generate_pair_task(g, 20);
  const HeadScoreMap self_sim = head_cosine_similarity(cfg, params, params, data);
  for (std::size_t i = 0; i < self_sim.scores.size(); ++i) {
    check.require(std::fabs(self_sim.scores.data()[i] - 1.0) <= 1e-12,
                  "self-similarity " + fmt(self_sim.scores.data()[i]) + " != 1");
  }

  // hand-computed two-token case: (1,0,1,0) vs (1,0,0,1) -> exactly 0.5
  const Matrix a = Matrix::from_rows({{1, 0}, {1, 0}});
  const Matrix b = Matrix::identity(2);
  check.require(cosine_flat(a, b) == 0.5, "hand case is " + fmt(cosine_flat(a, b)));

  // pretrained vs fine-tuned toy arms: report layer means; the expected
  // structure is last-layer mean <= first-layer mean, and a violation is
  // flagged as a documented divergence instead of failing silently
  const TrainedFixture& fx = trained_fixture();
  const HeadScoreMap sim = head_cosine_similarity(
      fx.config, fx.pretrained, fx.tuned_from_pretrained, fx.pair_eval, 1000, 1);
  const auto means = layer_means(sim);
  std::string means_text;
  for (std::size_t l = 0; l < means.size(); ++l) {
    means_text += (l ? " " : "") + fmt(means[l]);
  }
  if (means.back() <= means.front()) {
    check.note("self-sim exact, hand case exact, layer means [" + means_text +
               "], last <= first holds");
  } else {
    check.note("self-sim exact, hand case exact, layer means [" + means_text +
               "], DOCUMENTED DIVERGENCE: last > first on this toy run");
  }
}

// ---- criterion 8: training sanity ------------------------------------------

void training_sanity(Check& check) {
  const TrainedFixture& fx = trained_fixture();
  const double uniform_mlm = 1.0 / static_cast<double>(fx.config.vocab_size);
  check.require(fx.mlm_accuracy >= 5.0 * uniform_mlm,
                "masked accuracy " + fmt(fx.mlm_accuracy) + " below 5x uniform " +
                    fmt(5.0 * uniform_mlm));
  check.require(fx.score_pretrained_init >= 0.9,
                "pretrained-init heldout accuracy " + fmt(fx.score_pretrained_init) +
                    " below 0.9");
  check.require(fx.score_pretrained_init >= fx.score_random_init,
                "pretrained init " + fmt(fx.score_pretrained_init) + " below random init " +
                    fmt(fx.score_random_init));
  check.require(fx.train_seconds < 600.0,
                "training fixture took " + fmt(fx.train_seconds) + " s, over 10 min");
  check.note("masked acc " + fmt(fx.mlm_accuracy) + ", pretrained-init " +
             fmt(fx.score_pretrained_init) + " >= random-init " + fmt(fx.score_random_init) +
             ", " + fmt(fx.train_seconds) + " s");
}

// ---- criterion 9: sweep integrity ------------------------------------------

void sweep_integrity(Check& check) {
  const TrainedFixture& fx = trained_fixture();
  const Dataset eval_set(fx.pair_eval.begin(), fx.pair_eval.begin() + 256);

  const AblationReport report =
      sweep_heads(fx.config, fx.tuned_from_pretrained, eval_set, MetricKind::Accuracy, "pair");
  const auto expected = static_cast<std::size_t>(fx.config.n_layers * fx.config.n_heads);
  check.require(report.entries.size() == expected,
                "sweep produced " + std::to_string(report.entries.size()) + " entries");
  for (const AblationEntry& e : report.entries) {
    check.require(std::fabs(e.delta - (e.score - report.baseline)) <= 1e-12,
                  "delta of head (" + std::to_string(e.layer) + "," + std::to_string(e.head) +
                      ") does not recompute");
  }

  std::vector<HeadCoord> shuffled;
  for (int l = 0; l < fx.config.n_layers; ++l)
    for (int h = 0; h < fx.config.n_heads; ++h) shuffled.push_back({l, h});
  Rng rng(39);
  rng.shuffle(shuffled);
  const AblationReport reordered = sweep_heads(fx.config, fx.tuned_from_pretrained, eval_set,
                                               MetricKind::Accuracy, "pair", shuffled);
  check.require(report_to_csv(report) == report_to_csv(reordered),
                "shuffled sweep produced different bytes");

  // the paper-style observation: at least one head helps (delta >= 0)
  double best = -1.0;
  for (const AblationEntry& e : report.entries) best = std::max(best, e.delta);
  check.require(best >= 0.0, "every single-head ablation hurt (best delta " + fmt(best) + ")");
  check.note(std::to_string(expected) + "+1 evaluations, order-invariant, best delta " +
             fmt(best));
}

// ---- criterion 10: feature attention ----------------------------------------

void feature_attention_closed_forms(Check& check) {
  // uniform map: score = 1/L exactly
  AttentionTensor uniform(1, 1, 5);
  uniform.at(0, 0) = Matrix(5, 5, 0.2);
  const Matrix uniform_scores = feature_scores_for_example(uniform, {2});
  check.require(std::fabs(uniform_scores(0, 0) - 0.2) <= 1e-12,
                "uniform score " + fmt(uniform_scores(0, 0)));

  // one-hot concentration: score = 1.0 exactly
  AttentionTensor onehot(1, 1, 6);
  Matrix m(6, 6);
  for (std::size_t i = 0; i < 6; ++i) m(i, 3) = 1.0;
  onehot.at(0, 0) = m;
  const Matrix onehot_scores = feature_scores_for_example(onehot, {3});
  check.require(std::fabs(onehot_scores(0, 0) - 1.0) <= 1e-12,
                "one-hot score " + fmt(onehot_scores(0, 0)));

  // trained toys: [SEP] attention is stronger with a single segment
  const TrainedFixture& fx = trained_fixture();
  const HeadScoreMap single_sep = feature_attention_map(
      fx.config, fx.tuned_from_pretrained, fx.single_eval, FeatureSpec::sep());
  const HeadScoreMap pair_sep = feature_attention_map(
      fx.config, fx.tuned_from_pretrained, fx.pair_eval, FeatureSpec::sep());
  double single_max = 0.0, pair_max = 0.0;
  for (std::size_t i = 0; i < single_sep.scores.size(); ++i) {
    single_max = std::max(single_max, single_sep.scores.data()[i]);
    pair_max = std::max(pair_max, pair_sep.scores.data()[i]);
  }
  check.require(single_max > pair_max, "single-segment [SEP] " + fmt(single_max) +
                                           " <= pair [SEP] " + fmt(pair_max));
  check.note("closed forms exact; [SEP] single " + fmt(single_max) + " > pair " +
             fmt(pair_max));
}

// ---- criterion 11: file formats ---------------------------------------------

void file_formats(Check& check) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "atnatlas_acceptance_io";
  fs::remove_all(dir);
  fs::create_directories(dir);

  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.vocab_size = 16;
  cfg.max_len = 8;

  // checkpoint round-trip
  const Parameters params = init_params(cfg, 41);
  const std::string ckpt_path = (dir / "m.ckpt").string();
  save_checkpoint(params, cfg, ckpt_path, "t");
  const Checkpoint loaded = load_checkpoint(ckpt_path);
  check.require(loaded.params == params && loaded.config == cfg,
                "checkpoint round-trip is not bit-exact");

  // attention dump round-trip
  ForwardOptions opts;
  opts.capture_attention = true;
  const ForwardResult res = forward(cfg, params, make_sequence({4, 5}, {6, 7}), opts);
  const std::string attn_path = (dir / "m.attn").string();
  write_attention_dump(attn_path, {*res.attention});
  const AttentionDump dump = read_attention_dump(attn_path);
  check.require(dump.examples.size() == 1 && dump.examples[0].maps == res.attention->maps,
                "attention dump round-trip is not bit-exact");

  // corrupted files are rejected
  auto truncate_and_expect_reject = [&](const std::string& path, auto loader) {
    std::ifstream in(path, std::ios::binary);
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    in.close();
    bytes.pop_back();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
      loader(path);
      return false;
    } catch (const DataError&) {
      return true;
    }
  };
  check.require(
      truncate_and_expect_reject(ckpt_path, [](const std::string& p) { load_checkpoint(p); }),
      "truncated checkpoint was accepted");
  check.require(truncate_and_expect_reject(attn_path,
                                           [](const std::string& p) { read_attention_dump(p); }),
                "truncated attention dump was accepted");

  // PGM goldens: stable bytes across runs, known content
  Matrix gm(2, 2);
  gm(0, 0) = 1.0;
  gm(0, 1) = 0.5;
  gm(1, 0) = 0.25;
  gm(1, 1) = 0.0;
  const std::string expected = std::string("P5\n2 2\n255\n") + '\x00' + '\x80' + '\xbf' + '\xff';
  check.require(encode_pgm(gm) == expected, "PGM golden bytes changed");
  const std::string p1 = (dir / "a.pgm").string(), p2 = (dir / "b.pgm").string();
  render_heatmap(gm, p1);
  render_heatmap(gm, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1{std::istreambuf_iterator<char>(f1), std::istreambuf_iterator<char>()};
  const std::string b2{std::istreambuf_iterator<char>(f2), std::istreambuf_iterator<char>()};
  check.require(b1 == b2 && b1 == expected, "rendered PGM files differ across runs");

  fs::remove_all(dir);
  check.note("round-trips bit-exact, corrupt files rejected, goldens stable");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Check&)> fn;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "attention validity", attention_validity},
      {2, "ablation exactness", ablation_exactness},
      {3, "gradient correctness", gradient_correctness},
      {4, "pattern classifier", pattern_classifier},
      {5, "planted-relation recovery", planted_relation_recovery},
      {6, "annotation filters", annotation_filters},
      {7, "cosine pipeline", cosine_pipeline},
      {8, "training sanity", training_sanity},
      {9, "sweep integrity", sweep_integrity},
      {10, "feature attention", feature_attention_closed_forms},
      {11, "file formats", file_formats},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Check check;
    const auto start = Clock::now();
    try {
      c.fn(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    std::printf("[%2d] %s  %-26s (%6.2f s)%s%s\n", c.id, check.ok ? "PASS" : "FAIL", c.name,
                elapsed, check.detail.empty() ? "" : " -- ", check.detail.c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("%d criteria FAILED\n", failures);
  }
  return failures;
}
