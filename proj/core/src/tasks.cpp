#include "atnatlas/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "atnatlas/errors.hpp"

namespace atnatlas {

namespace {

using nlohmann::json;

constexpr int kNounCount = 8;
constexpr int kVerbCount = 8;
constexpr int kPronounCount = 4;
constexpr int kSubjectMarkCount = 4;
constexpr int kObjectMarkCount = 4;
constexpr int kNegationCount = 4;
constexpr int kStructuredTotal = kNounCount + kVerbCount + kPronounCount + kSubjectMarkCount +
                                 kObjectMarkCount + kNegationCount;
constexpr int kMinFillerCount = 4;

// Body-level sentence template. Slot indices refer to `roles`; the verb's id
// is derived from the subject token so masked verbs are recoverable.
struct BodyTemplate {
  std::vector<TokenRole> roles;
  int verb_slot;
  int subject_token_slot;  // noun or pronoun driving verb agreement
  int subject_mark_slot;   // -1 when the subject is a pronoun (no link emitted)
};

const std::vector<BodyTemplate>& body_templates() {
  using R = TokenRole;
  static const std::vector<BodyTemplate> templates = {
      {{R::SubjectMark, R::Noun, R::Verb, R::ObjectMark, R::Noun}, 2, 1, 0},
      {{R::SubjectMark, R::Noun, R::Filler, R::Verb, R::ObjectMark, R::Noun}, 3, 1, 0},
      {{R::SubjectMark, R::Noun, R::Filler, R::Filler, R::Verb, R::ObjectMark, R::Noun},
       4, 1, 0},
      {{R::Pronoun, R::Verb, R::ObjectMark, R::Noun, R::Filler}, 1, 0, -1},
      {{R::SubjectMark, R::Noun, R::Verb, R::Filler, R::Filler}, 2, 1, 0},
      {{R::Filler, R::SubjectMark, R::Noun, R::Filler, R::Verb, R::ObjectMark, R::Noun,
        R::Filler}, 4, 2, 1},
      {{R::SubjectMark, R::Noun, R::Filler, R::Filler, R::Filler, R::Filler, R::Verb,
        R::ObjectMark, R::Noun, R::Filler, R::Filler, R::Filler}, 6, 1, 0},
  };
  return templates;
}

struct SampledBody {
  std::vector<int> ids;
  std::vector<TokenRole> roles;
  std::vector<RelationPair> links;  // body coordinates
  int verb_slot = -1;
  int subject_token_slot = -1;
  bool has_negation = false;
};

int sample_from_pool(const SyntheticGrammar& g, TokenRole role, Rng& rng) {
  const RolePool p = g.pool(role);
  return p.first + static_cast<int>(rng.below(p.count));
}

int derive_verb(const SyntheticGrammar& g, int subject_token_id, TokenRole subject_role) {
  const RolePool subj = g.pool(subject_role);
  const RolePool verbs = g.pool(TokenRole::Verb);
  return verbs.first + (subject_token_id - subj.first) % verbs.count;
}

SampledBody sample_body(const SyntheticGrammar& g, Rng& rng, bool require_link) {
  const auto& all = body_templates();
  std::vector<int> candidates;
  for (std::size_t t = 0; t < all.size(); ++t) {
    if (!require_link || all[t].subject_mark_slot >= 0) candidates.push_back(static_cast<int>(t));
  }
  const BodyTemplate& tpl = all[candidates[rng.below(candidates.size())]];

  SampledBody body;
  body.roles = tpl.roles;
  body.verb_slot = tpl.verb_slot;
  body.subject_token_slot = tpl.subject_token_slot;
  int subject_mark_slot = tpl.subject_mark_slot;

  if (rng.uniform() < g.negation_prob) {
    // negation sits directly before the verb
    body.roles.insert(body.roles.begin() + body.verb_slot, TokenRole::Negation);
    body.has_negation = true;
    body.verb_slot += 1;
    if (body.subject_token_slot >= body.verb_slot) body.subject_token_slot += 1;
    if (subject_mark_slot >= body.verb_slot) subject_mark_slot += 1;
  }

  body.ids.assign(body.roles.size(), -1);
  for (std::size_t i = 0; i < body.roles.size(); ++i) {
    if (static_cast<int>(i) == body.verb_slot) continue;
    body.ids[i] = sample_from_pool(g, body.roles[i], rng);
  }
  body.ids[body.verb_slot] =
      derive_verb(g, body.ids[body.subject_token_slot], body.roles[body.subject_token_slot]);

  if (subject_mark_slot >= 0) {
    // element span covers the subject mark and its noun
    body.links.push_back(RelationPair{Span{body.verb_slot, 1}, Span{subject_mark_slot, 2}});
  }
  return body;
}

std::vector<RelationPair> shift_links(const std::vector<RelationPair>& links, int offset) {
  std::vector<RelationPair> out = links;
  for (auto& pair : out) {
    pair.predicate.start += offset;
    pair.element.start += offset;
  }
  return out;
}

std::vector<TokenRole> full_roles_single(const std::vector<TokenRole>& body) {
  std::vector<TokenRole> roles;
  roles.reserve(body.size() + 2);
  roles.push_back(TokenRole::Cls);
  roles.insert(roles.end(), body.begin(), body.end());
  roles.push_back(TokenRole::Sep);
  return roles;
}

}  // namespace

const char* role_name(TokenRole role) {
  switch (role) {
    case TokenRole::Noun: return "NOUN";
    case TokenRole::Verb: return "VERB";
    case TokenRole::Pronoun: return "PRONOUN";
    case TokenRole::SubjectMark: return "SUBJECT_MARK";
    case TokenRole::ObjectMark: return "OBJECT_MARK";
    case TokenRole::Negation: return "NEGATION";
    case TokenRole::Filler: return "FILLER";
    case TokenRole::Cls: return "CLS";
    case TokenRole::Sep: return "SEP";
  }
  return "FILLER";
}

TokenRole role_from_name(const std::string& name) {
  static const std::vector<TokenRole> all = {
      TokenRole::Noun,    TokenRole::Verb,     TokenRole::Pronoun,
      TokenRole::SubjectMark, TokenRole::ObjectMark, TokenRole::Negation,
      TokenRole::Filler,  TokenRole::Cls,      TokenRole::Sep};
  for (TokenRole r : all) {
    if (name == role_name(r)) return r;
  }
  throw DataError("unknown token role: " + name);
}

RolePool SyntheticGrammar::pool(TokenRole role) const {
  constexpr int kNounFirst = kFirstRegularToken;
  constexpr int kVerbFirst = kNounFirst + kNounCount;
  constexpr int kPronounFirst = kVerbFirst + kVerbCount;
  constexpr int kSubjectMarkFirst = kPronounFirst + kPronounCount;
  constexpr int kObjectMarkFirst = kSubjectMarkFirst + kSubjectMarkCount;
  constexpr int kNegationFirst = kObjectMarkFirst + kObjectMarkCount;
  constexpr int kFillerFirst = kNegationFirst + kNegationCount;
  switch (role) {
    case TokenRole::Noun: return {kNounFirst, kNounCount};
    case TokenRole::Verb: return {kVerbFirst, kVerbCount};
    case TokenRole::Pronoun: return {kPronounFirst, kPronounCount};
    case TokenRole::SubjectMark: return {kSubjectMarkFirst, kSubjectMarkCount};
    case TokenRole::ObjectMark: return {kObjectMarkFirst, kObjectMarkCount};
    case TokenRole::Negation: return {kNegationFirst, kNegationCount};
    case TokenRole::Filler: return {kFillerFirst, vocab_size - kFillerFirst};
    case TokenRole::Cls: return {kClsToken, 1};
    case TokenRole::Sep: return {kSepToken, 1};
  }
  throw DataError("role has no pool");
}

void SyntheticGrammar::validate() const {
  if (vocab_size < kFirstRegularToken + kStructuredTotal + kMinFillerCount) {
    throw DataError("grammar: vocab_size must be at least " +
                    std::to_string(kFirstRegularToken + kStructuredTotal + kMinFillerCount));
  }
  for (double p : {negation_prob, corruption_rate, shuffle_prob, corrupt_fraction}) {
    if (p < 0.0 || p > 1.0) throw DataError("grammar: probabilities must lie in [0,1]");
  }
}

Dataset generate_single_task(const SyntheticGrammar& grammar, std::size_t n) {
  grammar.validate();
  if (n < 1) throw DataError("generate_single_task: n must be positive");
  Rng rng(grammar.seed);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledBody body = sample_body(grammar, rng, /*require_link=*/false);
    Example ex;
    ex.seq = make_sequence(body.ids);
    ex.roles = full_roles_single(body.roles);
    ex.label = body.has_negation ? 1 : 0;
    ex.n_segments = 1;
    ex.relation_pairs = shift_links(body.links, 1);
    out.push_back(std::move(ex));
  }
  return out;
}

Dataset generate_pair_task(const SyntheticGrammar& grammar, std::size_t n) {
  grammar.validate();
  if (n < 1) throw DataError("generate_pair_task: n must be positive");
  Rng rng(grammar.seed);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledBody a = sample_body(grammar, rng, /*require_link=*/false);
    const bool corrupted = rng.uniform() < grammar.corruption_rate;

    std::vector<int> b_ids = a.ids;
    std::vector<TokenRole> b_roles = a.roles;
    if (corrupted) {
      bool changed = false;
      for (std::size_t j = 0; j < b_ids.size(); ++j) {
        if (static_cast<int>(j) == a.verb_slot) continue;
        if (rng.uniform() >= grammar.corrupt_fraction) continue;
        const RolePool p = grammar.pool(b_roles[j]);
        if (p.count < 2) continue;
        int id = p.first + static_cast<int>(rng.below(p.count - 1));
        if (id >= b_ids[j]) ++id;  // skip the current id
        b_ids[j] = id;
        changed = true;
      }
      if (!changed) {
        // force one substitution so B really differs from A
        std::vector<std::size_t> slots;
        for (std::size_t j = 0; j < b_ids.size(); ++j) {
          if (static_cast<int>(j) != a.verb_slot && grammar.pool(b_roles[j]).count >= 2) {
            slots.push_back(j);
          }
        }
        const std::size_t j = slots[rng.below(slots.size())];
        const RolePool p = grammar.pool(b_roles[j]);
        int id = p.first + static_cast<int>(rng.below(p.count - 1));
        if (id >= b_ids[j]) ++id;
        b_ids[j] = id;
      }
      // keep B internally grammatical: re-derive its verb
      b_ids[a.verb_slot] =
          derive_verb(grammar, b_ids[a.subject_token_slot], b_roles[a.subject_token_slot]);
    }

    if (rng.uniform() < grammar.shuffle_prob) {
      std::vector<std::size_t> perm(b_ids.size());
      for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = j;
      rng.shuffle(perm);
      std::vector<int> ids(b_ids.size());
      std::vector<TokenRole> roles(b_roles.size());
      for (std::size_t j = 0; j < perm.size(); ++j) {
        ids[j] = b_ids[perm[j]];
        roles[j] = b_roles[perm[j]];
      }
      b_ids = std::move(ids);
      b_roles = std::move(roles);
    }

    Example ex;
    ex.seq = make_sequence(a.ids, b_ids);
    ex.roles.reserve(ex.seq.length());
    ex.roles.push_back(TokenRole::Cls);
    ex.roles.insert(ex.roles.end(), a.roles.begin(), a.roles.end());
    ex.roles.push_back(TokenRole::Sep);
    ex.roles.insert(ex.roles.end(), b_roles.begin(), b_roles.end());
    ex.roles.push_back(TokenRole::Sep);
    ex.label = corrupted ? 0 : 1;
    ex.n_segments = 2;
    out.push_back(std::move(ex));
  }
  return out;
}

Dataset generate_relation_annotations(const SyntheticGrammar& grammar, std::size_t n) {
  grammar.validate();
  if (n < 1) throw DataError("generate_relation_annotations: n must be positive");
  Rng rng(grammar.seed);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledBody body = sample_body(grammar, rng, /*require_link=*/true);
    Example ex;
    ex.seq = make_sequence(body.ids);
    ex.roles = full_roles_single(body.roles);
    ex.label = 0;
    ex.n_segments = 1;
    ex.relation_pairs = shift_links(body.links, 1);
    out.push_back(std::move(ex));
  }
  return out;
}

MaskedExample mask_tokens(const Example& example, double mask_rate, Rng& rng) {
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) {
    throw DataError("mask_tokens: mask_rate must lie strictly inside (0,1)");
  }
  std::vector<int> positions;
  for (std::size_t i = 0; i < example.seq.length(); ++i) {
    if (!example.seq.is_special(static_cast<int>(i))) positions.push_back(static_cast<int>(i));
  }
  const std::size_t n = positions.size();
  if (n == 0) throw DataError("mask_tokens: sequence has no maskable positions");

  // Binomial(n, rate) restricted to >= 1 via inverse CDF.
  const double q = 1.0 - mask_rate;
  double pmf = std::pow(q, static_cast<double>(n));  // k = 0
  const double z = 1.0 - pmf;
  const double u = rng.uniform() * z;
  std::size_t k = n;
  double cum = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    pmf *= (static_cast<double>(n - j + 1) / static_cast<double>(j)) * (mask_rate / q);
    cum += pmf;
    if (u < cum) {
      k = j;
      break;
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(positions[i], positions[j]);
  }
  std::vector<int> chosen(positions.begin(), positions.begin() + k);
  std::sort(chosen.begin(), chosen.end());

  MaskedExample masked;
  masked.seq = example.seq;
  masked.targets.reserve(k);
  for (int pos : chosen) {
    masked.targets.push_back({pos, masked.seq.ids[pos]});
    masked.seq.ids[pos] = kMaskToken;
  }
  return masked;
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "accuracy") return MetricKind::Accuracy;
  if (name == "f1") return MetricKind::F1;
  throw DataError("unknown metric: " + name);
}

const char* metric_name(MetricKind kind) {
  return kind == MetricKind::Accuracy ? "accuracy" : "f1";
}

double metric(MetricKind kind, const std::vector<int>& predictions,
              const std::vector<int>& labels) {
  if (predictions.empty()) throw DataError("metric: empty input");
  if (predictions.size() != labels.size()) {
    throw DataError("metric: predictions length " + std::to_string(predictions.size()) +
                    " != labels length " + std::to_string(labels.size()));
  }
  if (kind == MetricKind::Accuracy) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (predictions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] == 0) ++fp;
    if (predictions[i] == 0 && labels[i] == 1) ++fn;
  }
  const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

void write_dataset_jsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  for (const Example& ex : dataset) {
    json j;
    j["ids"] = ex.seq.ids;
    j["segment_ids"] = ex.seq.segment_ids;
    json roles = json::array();
    for (TokenRole r : ex.roles) roles.push_back(role_name(r));
    j["roles"] = std::move(roles);
    j["label"] = ex.label;
    json pairs = json::array();
    for (const RelationPair& p : ex.relation_pairs) {
      pairs.push_back({{p.predicate.start, p.predicate.len}, {p.element.start, p.element.len}});
    }
    j["relation_pairs"] = std::move(pairs);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    try {
      Example ex;
      ex.seq.ids = j.at("ids").get<std::vector<int>>();
      ex.seq.segment_ids = j.at("segment_ids").get<std::vector<int>>();
      for (std::size_t i = 0; i < ex.seq.ids.size(); ++i) {
        if (ex.seq.ids[i] == kClsToken || ex.seq.ids[i] == kSepToken) {
          ex.seq.special_positions.push_back(static_cast<int>(i));
        }
      }
      for (const auto& name : j.at("roles")) {
        ex.roles.push_back(role_from_name(name.get<std::string>()));
      }
      ex.label = j.at("label").get<int>();
      ex.n_segments = ex.seq.n_segments();
      for (const auto& p : j.at("relation_pairs")) {
        RelationPair pair;
        pair.predicate = {p.at(0).at(0).get<int>(), p.at(0).at(1).get<int>()};
        pair.element = {p.at(1).at(0).get<int>(), p.at(1).at(1).get<int>()};
        ex.relation_pairs.push_back(pair);
      }
      if (ex.roles.size() != ex.seq.length()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": roles length mismatch");
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad example: " + e.what());
    }
  }
  return out;
}

std::vector<int> read_token_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const int id = std::stoi(line, &used);
      while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
      if (used != line.size()) throw std::invalid_argument("trailing characters");
      out.push_back(id);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected one token id per line");
    }
  }
  return out;
}

}  // namespace atnatlas
