// ginc.hpp: mixture-of-factorial-HMM text corpus and in-context prompts.
//
// Copyright 2026 The tdb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef TDB_ENVS_GINC_HPP_
#define TDB_ENVS_GINC_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "tdb/rng.hpp"

namespace tdb {
namespace envs {

// A uniform mixture of factorial HMMs ("concepts"). Each concept owns two
// independent Markov chains over 10 states; the pair of chain states selects
// an emission distribution over a 50-token vocabulary, and the emission map
// is shared across concepts. Token 0 is reserved as the delimiter between
// sentences and prompt examples; emissions have sparse support (5 tokens per
// combined state) drawn from tokens 1..vocab-1. All transition and start
// rows are sampled from a symmetric Dirichlet(1.0) and serialized with the
// spec so corpora are exactly reproducible.
struct GincSpec {
  int32_t n_concepts = 5;
  int32_t n_chains = 2;
  int32_t n_states = 10;
  int32_t vocab = 50;
  int32_t delimiter = 0;
  // start[concept][chain] is a distribution over states;
  // trans[concept][chain][from] is a row over successor states.
  std::vector<std::vector<std::vector<double>>> start;
  std::vector<std::vector<std::vector<std::vector<double>>>> trans;
  // emission[pair] with pair = s0*n_states + s1; dense rows over the
  // vocabulary with 5 nonzero entries each.
  std::vector<std::vector<double>> emission;

  int32_t NumPairs() const { return n_states * n_states; }

  void Validate() const {
    auto check_row = [](const std::vector<double> &row, const char *what) {
      double s = 0.0;
      for (double v : row) {
        if (v < 0.0) throw std::runtime_error(std::string(what) + ": negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw std::runtime_error(std::string(what) + ": row does not sum to 1");
    };
    for (const auto &c : start)
      for (const auto &row : c) check_row(row, "GincSpec start");
    for (const auto &c : trans)
      for (const auto &chain : c)
        for (const auto &row : chain) check_row(row, "GincSpec trans");
    for (const auto &row : emission) {
      check_row(row, "GincSpec emission");
      if (row[delimiter] != 0.0)
        throw std::runtime_error("GincSpec emission: delimiter has mass");
    }
  }
};

namespace ginc_detail {

// Symmetric Dirichlet(1.0) row: normalized unit exponentials.
inline std::vector<double> DirichletRow(int32_t n, Rng &rng) {
  std::vector<double> row(n);
  double sum = 0.0;
  for (auto &v : row) {
    double u;
    do { u = rng.UniformDouble(); } while (u <= 0.0);
    v = -std::log(u);
    sum += v;
  }
  for (auto &v : row) v /= sum;
  // Renormalize exactly so Validate's 1e-9 tolerance always holds.
  double s2 = 0.0;
  for (double v : row) s2 += v;
  for (auto &v : row) v /= s2;
  return row;
}

inline int32_t SampleRow(const std::vector<double> &row, Rng &rng) {
  double u = rng.UniformDouble(), acc = 0.0;
  for (size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) return static_cast<int32_t>(i);
  }
  return static_cast<int32_t>(row.size()) - 1;
}

}  // namespace ginc_detail

inline GincSpec GenGincSpec(Rng &rng, int32_t n_concepts = 5,
                            int32_t n_states = 10, int32_t vocab = 50,
                            int32_t support = 5) {
  if (n_concepts <= 0 || n_states <= 0 || vocab <= support + 1)
    throw std::invalid_argument("GenGincSpec: bad dimensions");
  GincSpec s;
  s.n_concepts = n_concepts;
  s.n_states = n_states;
  s.vocab = vocab;
  for (int32_t c = 0; c < n_concepts; ++c) {
    s.start.emplace_back();
    s.trans.emplace_back();
    for (int32_t h = 0; h < s.n_chains; ++h) {
      s.start[c].push_back(ginc_detail::DirichletRow(n_states, rng));
      s.trans[c].emplace_back();
      for (int32_t i = 0; i < n_states; ++i)
        s.trans[c][h].push_back(ginc_detail::DirichletRow(n_states, rng));
    }
  }
  for (int32_t p = 0; p < s.NumPairs(); ++p) {
    // Sparse support: `support` distinct tokens from 1..vocab-1 with
    // Dirichlet(1.0) weights.
    std::vector<int32_t> pool(vocab - 1);
    for (int32_t i = 0; i < vocab - 1; ++i) pool[i] = i + 1;
    std::vector<double> row(vocab, 0.0);
    auto weights = ginc_detail::DirichletRow(support, rng);
    for (int32_t k = 0; k < support; ++k) {
      uint32_t j = k + rng.UniformInt(static_cast<uint32_t>(vocab - 1 - k));
      std::swap(pool[k], pool[j]);
      row[pool[k]] = weights[k];
    }
    s.emission.push_back(std::move(row));
  }
  s.Validate();
  return s;
}

// Samples `len` tokens from one concept: chain states start from the start
// distributions and evolve independently; each step emits from the combined
// state's distribution, then both chains advance.
inline std::vector<int32_t> SampleGincSentence(const GincSpec &s,
                                               int32_t concept_id, int32_t len,
                                               Rng &rng) {
  std::vector<int32_t> ch(s.n_chains);
  for (int32_t h = 0; h < s.n_chains; ++h)
    ch[h] = ginc_detail::SampleRow(s.start[concept_id][h], rng);
  std::vector<int32_t> out;
  out.reserve(len);
  for (int32_t t = 0; t < len; ++t) {
    int32_t pair = ch[0] * s.n_states + ch[1];
    out.push_back(ginc_detail::SampleRow(s.emission[pair], rng));
    for (int32_t h = 0; h < s.n_chains; ++h)
      ch[h] = ginc_detail::SampleRow(s.trans[concept_id][h][ch[h]], rng);
  }
  return out;
}

struct GincDocument {
  int32_t concept_id = 0;
  std::vector<int32_t> tokens;
};

// Each document picks a concept uniformly, then concatenates independent
// sentences (sentence_len tokens each, delimiter-terminated) until doc_len
// tokens are emitted.
inline std::vector<GincDocument> GenGincCorpus(const GincSpec &s,
                                               int64_t n_docs, int64_t doc_len,
                                               Rng &rng,
                                               int32_t sentence_len = 10) {
  std::vector<GincDocument> docs;
  docs.reserve(n_docs);
  for (int64_t d = 0; d < n_docs; ++d) {
    GincDocument doc;
    doc.concept_id = static_cast<int32_t>(
        rng.UniformInt(static_cast<uint32_t>(s.n_concepts)));
    while (static_cast<int64_t>(doc.tokens.size()) < doc_len) {
      auto sent = SampleGincSentence(s, doc.concept_id, sentence_len, rng);
      for (int32_t tok : sent) doc.tokens.push_back(tok);
      doc.tokens.push_back(s.delimiter);
    }
    doc.tokens.resize(doc_len);
    docs.push_back(std::move(doc));
  }
  return docs;
}

// A prompt with n full examples of k tokens each (delimiter-separated),
// followed by a query example whose final token is held out as the label.
// Visible length is therefore n*(k+1) + k - 1.
struct GincPrompt {
  int32_t k = 0;
  int32_t n = 0;
  int32_t concept_id = 0;
  std::vector<int32_t> tokens;
  int32_t target = 0;
};

inline GincPrompt GenGincPrompt(const GincSpec &s, int32_t k, int32_t n,
                                Rng &rng) {
  if (k < 2) throw std::invalid_argument("GenGincPrompt: k must be >= 2");
  GincPrompt p;
  p.k = k;
  p.n = n;
  p.concept_id = static_cast<int32_t>(
      rng.UniformInt(static_cast<uint32_t>(s.n_concepts)));
  for (int32_t i = 0; i < n; ++i) {
    auto ex = SampleGincSentence(s, p.concept_id, k, rng);
    for (int32_t tok : ex) p.tokens.push_back(tok);
    p.tokens.push_back(s.delimiter);
  }
  auto query = SampleGincSentence(s, p.concept_id, k, rng);
  p.target = query.back();
  query.pop_back();
  for (int32_t tok : query) p.tokens.push_back(tok);
  return p;
}

inline nlohmann::json GincSpecToJson(const GincSpec &s) {
  return nlohmann::json{{"n_concepts", s.n_concepts}, {"n_chains", s.n_chains},
                        {"n_states", s.n_states},     {"vocab", s.vocab},
                        {"delimiter", s.delimiter},   {"start", s.start},
                        {"trans", s.trans},           {"emission", s.emission}};
}

inline GincSpec GincSpecFromJson(const nlohmann::json &j) {
  GincSpec s;
  s.n_concepts = j.at("n_concepts").get<int32_t>();
  s.n_chains = j.at("n_chains").get<int32_t>();
  s.n_states = j.at("n_states").get<int32_t>();
  s.vocab = j.at("vocab").get<int32_t>();
  s.delimiter = j.at("delimiter").get<int32_t>();
  s.start = j.at("start")
                .get<std::vector<std::vector<std::vector<double>>>>();
  s.trans = j.at("trans")
                .get<std::vector<
                    std::vector<std::vector<std::vector<double>>>>>();
  s.emission = j.at("emission").get<std::vector<std::vector<double>>>();
  s.Validate();
  return s;
}

}  // namespace envs
}  // namespace tdb

#endif  // TDB_ENVS_GINC_HPP_
