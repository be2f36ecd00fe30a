// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/seq_encoder.hpp"

#include <cmath>
#include <string>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskedLogit = -1e9;

std::string layer_key(std::size_t layer, const char *suffix) {
  return "seq.l" + std::to_string(layer) + "." + suffix;
}

}  // namespace

SeqConfig SeqConfig::full_scale(std::size_t vocab_size) {
  SeqConfig c;
  c.dim = 768;
  c.layers = 6;
  c.heads = 12;
  c.ff_dim = 3072;
  c.max_length = 512;
  c.vocab_size = vocab_size;
  return c;
}

void SeqConfig::validate() const {
  if (dim == 0 || layers == 0 || heads == 0 || ff_dim == 0 || max_length < 2)
    throw Error(Errc::kConfigError, "sequence encoder sizes must be positive");
  if (dim % 2 != 0) throw Error(Errc::kOddDimension, "embedding width must be even");
  if (dim % heads != 0)
    throw Error(Errc::kConfigError, "seq_heads must divide seq_dim");
  if (vocab_size <= static_cast<std::size_t>(psmiles::Vocabulary::kReservedCount))
    throw Error(Errc::kConfigError, "vocabulary has no ordinary tokens");
}

std::vector<double> positional_embedding(std::size_t pos, std::size_t dim) {
  if (dim % 2 != 0) throw Error(Errc::kOddDimension, "positional width must be even");
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    const double angle = static_cast<double>(pos) * freq;
    out[2 * i] = std::sin(angle);
    out[2 * i + 1] = std::cos(angle);
  }
  return out;
}

Tensor positional_table(std::size_t length, std::size_t dim) {
  Tensor t = Tensor::matrix(length, dim);
  for (std::size_t p = 0; p < length; ++p) {
    const auto row = positional_embedding(p, dim);
    for (std::size_t c = 0; c < dim; ++c) t(p, c) = row[c];
  }
  return t;
}

void init_seq_params(ParamStore &params, const SeqConfig &config, Rng &rng) {
  config.validate();
  const std::size_t d = config.dim, f = config.ff_dim;
  params.add("seq.tok_emb", normal_tensor(config.vocab_size, d, kInitStd, rng));
  for (std::size_t l = 0; l < config.layers; ++l) {
    params.add(layer_key(l, "ln1.g"), Tensor::matrix(1, d, 1.0));
    params.add(layer_key(l, "ln1.b"), Tensor::matrix(1, d));
    for (const char *w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
      params.add(layer_key(l, w), normal_tensor(d, d, kInitStd, rng));
    for (const char *b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
      params.add(layer_key(l, b), Tensor::matrix(1, d));
    params.add(layer_key(l, "ln2.g"), Tensor::matrix(1, d, 1.0));
    params.add(layer_key(l, "ln2.b"), Tensor::matrix(1, d));
    params.add(layer_key(l, "ff.w1"), normal_tensor(d, f, kInitStd, rng));
    params.add(layer_key(l, "ff.b1"), Tensor::matrix(1, f));
    params.add(layer_key(l, "ff.w2"), normal_tensor(f, d, kInitStd, rng));
    params.add(layer_key(l, "ff.b2"), Tensor::matrix(1, d));
  }
  params.add("seq.ln_f.g", Tensor::matrix(1, d, 1.0));
  params.add("seq.ln_f.b", Tensor::matrix(1, d));
  params.add("mlm.w", normal_tensor(d, config.vocab_size, kInitStd, rng));
  params.add("mlm.b", Tensor::matrix(1, config.vocab_size));
}

SeqOutput encode_sequence(Binding &p, const SeqConfig &config, std::span<const int> ids) {
  using namespace ad;
  const std::size_t n = ids.size();
  if (n == 0) throw Error(Errc::kEmptyInput, "empty id sequence");
  if (n > config.max_length)
    throw Error(Errc::kLengthExceeded, std::to_string(n) + " tokens exceed max length " +
                                           std::to_string(config.max_length));
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size)
      throw Error(Errc::kUnknownId, "token id " + std::to_string(id));

  // token lookup scaled by sqrt(d) against the unit-amplitude position code
  Var x = scale(embedding(p["seq.tok_emb"], ids), std::sqrt(static_cast<double>(config.dim))) +
          Var::constant(positional_table(n, config.dim));

  const std::size_t h = config.heads;
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(config.dim / h));
  Var key_mask;
  bool any_pad = false;
  for (int id : ids) any_pad |= id == psmiles::Vocabulary::kPadId;
  if (any_pad) {
    Tensor m = Tensor::matrix(n * n, h);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (ids[j] == psmiles::Vocabulary::kPadId)
          for (std::size_t c = 0; c < h; ++c) m[(i * n + j) * h + c] = kMaskedLogit;
    key_mask = Var::constant(std::move(m));
  }

  for (std::size_t l = 0; l < config.layers; ++l) {
    auto w = [&](const char *s) { return p[layer_key(l, s)]; };
    Var a = layer_norm(x, w("ln1.g"), w("ln1.b"));
    Var q = add_row(matmul(a, w("attn.wq")), w("attn.bq"));
    Var k = add_row(matmul(a, w("attn.wk")), w("attn.bk"));
    Var v = add_row(matmul(a, w("attn.wv")), w("attn.bv"));
    Var ctx = attend(attention_scores(q, k, h, score_scale, key_mask), v, h);
    x = x + add_row(matmul(ctx, w("attn.wo")), w("attn.bo"));
    Var b = layer_norm(x, w("ln2.g"), w("ln2.b"));
    Var hid = gelu(add_row(matmul(b, w("ff.w1")), w("ff.b1")));
    x = x + add_row(matmul(hid, w("ff.w2")), w("ff.b2"));
  }
  SeqOutput out;
  out.tokens = layer_norm(x, p["seq.ln_f.g"], p["seq.ln_f.b"]);
  out.pooled = row(out.tokens, 0);
  return out;
}

ad::Var mlm_probabilities(Binding &p, const SeqConfig &config, const ad::Var &tokens,
                          std::span<const std::size_t> positions) {
  using namespace ad;
  if (positions.empty()) return Var::constant(Tensor::matrix(0, config.vocab_size));
  Var picked = gather_rows(tokens, positions);
  return softmax_rows(add_row(matmul(picked, p["mlm.w"]), p["mlm.b"]));
}

}  // namespace mmp
