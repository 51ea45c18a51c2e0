// Copyright 2026 The lmlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmlab/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "lmlab/text.h"

namespace lmlab {
namespace {

constexpr int kFormatVersion = 1;

using Clock = std::chrono::steady_clock;

double MsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Fisher-Yates with our own index draw so the order does not depend on the
// standard library's shuffle.
void Shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.Index(i)]);
}

Batch SelectBlocks(const Batch& batch, std::size_t first, std::size_t count) {
  Batch out;
  out.seq_len = batch.seq_len;
  const std::size_t a = first * batch.seq_len;
  const std::size_t b = (first + count) * batch.seq_len;
  out.inputs.assign(batch.inputs.begin() + a, batch.inputs.begin() + b);
  out.targets.assign(batch.targets.begin() + a, batch.targets.begin() + b);
  out.weights.assign(batch.weights.begin() + a, batch.weights.begin() + b);
  return out;
}

void CheckBatch(const Batch& batch) {
  if (batch.targets.size() != batch.inputs.size() || batch.weights.size() != batch.inputs.size()) {
    Fail(ErrorKind::kDimension, "batch: " + std::to_string(batch.inputs.size()) + " inputs, " +
                                    std::to_string(batch.targets.size()) + " targets and " +
                                    std::to_string(batch.weights.size()) +
                                    " weights; all three must match");
  }
}

double TotalWeight(const Batch& batch) {
  CheckBatch(batch);
  double w = 0;
  for (Real x : batch.weights) w += x;
  return w;
}

// Weighted-mean loss of a batch without gradients, plus argmax accuracy over
// weighted positions.
struct EvalSums {
  double loss_sum = 0;
  double weight = 0;
  double correct = 0;
};

EvalSums EvaluateBatch(const NeuralModel& model, const Batch& batch) {
  CheckBatch(batch);
  EvalSums s;
  Tape tape;
  const auto vars = model.Bind(tape, false);
  const Tensor logits = model.Forward(tape, vars, batch.inputs, batch.seq_len).value();
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double w = batch.weights[r];
    if (w == 0) continue;
    const auto row = logits.row(r);
    const auto logp = LogSoftmaxValues(row);
    const auto target = static_cast<std::size_t>(batch.targets[r]);
    s.loss_sum += -w * logp[target];
    s.weight += w;
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                               row.begin());
    if (best == target) s.correct += w;
  }
  return s;
}

}  // namespace

void TrainConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, "train config: " + msg); };
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    bad("learning_rate must be finite and >= 0");
  }
  if (batch_tokens < 1) bad("batch_tokens must be >= 1");
  if (!(eval_fraction > 0 && eval_fraction < 1)) bad("eval_fraction must lie in (0, 1)");
  if (eval_every < 1) bad("eval_every must be >= 1");
  if (weight_decay < 0) bad("weight_decay must be >= 0");
  if (clip_norm < 0) bad("clip_norm must be >= 0");
  if (optimizer != "sgd" && optimizer != "adam") {
    bad("optimizer must be sgd or adam, got '" + optimizer + "'");
  }
  if (momentum < 0 || momentum >= 1) bad("momentum must lie in [0, 1)");
  if (workers < 1) bad("workers must be >= 1");
}

const std::set<std::string>& TrainConfig::Keys() {
  static const std::set<std::string> keys = {
      "learning_rate", "batch_tokens", "steps",      "epochs",      "seed",
      "weight_decay",  "clip_norm",    "optimizer",  "momentum",    "adam_beta1",
      "adam_beta2",    "cosine",       "eval_every", "eval_fraction", "eval_tokens",
      "workers"};
  return keys;
}

std::string TrainConfig::ToText() const {
  std::string s;
  auto put = [&s](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  put("learning_rate", FormatDouble(learning_rate));
  put("batch_tokens", std::to_string(batch_tokens));
  put("steps", std::to_string(steps));
  put("epochs", std::to_string(epochs));
  put("seed", std::to_string(seed));
  put("weight_decay", FormatDouble(weight_decay));
  put("clip_norm", FormatDouble(clip_norm));
  put("optimizer", optimizer);
  put("momentum", FormatDouble(momentum));
  put("adam_beta1", FormatDouble(adam_beta1));
  put("adam_beta2", FormatDouble(adam_beta2));
  put("cosine", cosine ? "1" : "0");
  put("eval_every", std::to_string(eval_every));
  put("eval_fraction", FormatDouble(eval_fraction));
  put("eval_tokens", std::to_string(eval_tokens));
  put("workers", std::to_string(workers));
  return s;
}

TrainConfig TrainConfig::FromKeyValues(const KeyValues& kv) {
  TrainConfig c;
  c.learning_rate = kv.GetDouble("learning_rate", c.learning_rate);
  c.batch_tokens = kv.GetUInt("batch_tokens", c.batch_tokens);
  c.steps = kv.GetUInt("steps", c.steps);
  c.epochs = kv.GetUInt("epochs", c.epochs);
  c.seed = kv.GetUInt("seed", c.seed);
  c.weight_decay = kv.GetDouble("weight_decay", c.weight_decay);
  c.clip_norm = kv.GetDouble("clip_norm", c.clip_norm);
  c.optimizer = kv.GetString("optimizer", c.optimizer);
  c.momentum = kv.GetDouble("momentum", c.momentum);
  c.adam_beta1 = kv.GetDouble("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.GetDouble("adam_beta2", c.adam_beta2);
  c.cosine = kv.GetBool("cosine", c.cosine);
  c.eval_every = kv.GetUInt("eval_every", c.eval_every);
  c.eval_fraction = kv.GetDouble("eval_fraction", c.eval_fraction);
  c.eval_tokens = kv.GetUInt("eval_tokens", c.eval_tokens);
  c.workers = kv.GetUInt("workers", c.workers);
  c.Validate();
  return c;
}

std::optional<std::size_t> RunRecord::FirstStepReaching(const std::string& split,
                                                        double threshold) const {
  for (const auto& e : evals) {
    if (e.split == split && e.accuracy && *e.accuracy >= threshold) return e.step;
  }
  return std::nullopt;
}

void WriteMetricsJsonl(std::ostream& out, const RunRecord& record) {
  auto line = [&out](const EvalPoint& e, const char* metric, double value) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["step"] = e.step;
    j["split"] = e.split;
    j["metric"] = metric;
    j["value"] = value;
    out << j.dump() << "\n";
  };
  for (const auto& e : record.evals) {
    line(e, "loss", e.loss);
    if (e.accuracy) line(e, "accuracy", *e.accuracy);
  }
}

void WriteTimingJsonl(std::ostream& out, const RunRecord& record) {
  for (const auto& e : record.evals) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["step"] = e.step;
    j["split"] = e.split;
    j["wall_ms"] = e.wall_ms;
    out << j.dump() << "\n";
  }
}

void WriteSummaryCsv(std::ostream& out, const RunRecord& record) {
  out << "format_version,step,split,loss,accuracy\n";
  for (const auto& e : record.evals) {
    out << kFormatVersion << "," << e.step << "," << e.split << "," << FormatDouble(e.loss)
        << "," << (e.accuracy ? FormatDouble(*e.accuracy) : "") << "\n";
  }
}

double CrossEntropyValue(const Tensor& logits, std::span<const TokenId> targets,
                         double temperature) {
  if (logits.rows() != targets.size()) {
    Fail(ErrorKind::kDimension, "cross_entropy: " + std::to_string(logits.rows()) +
                                    " logit rows but " + std::to_string(targets.size()) +
                                    " targets");
  }
  if (!(temperature > 0)) Fail(ErrorKind::kConfig, "cross_entropy: temperature must be > 0");
  if (targets.empty()) return 0;
  double total = 0;
  std::vector<Real> scaled(logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) scaled[c] = row[c] / temperature;
    total -= LogSoftmaxValues(scaled).at(static_cast<std::size_t>(targets[r]));
  }
  return total / static_cast<double>(targets.size());
}

void InitModel(NeuralModel& model, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "init"));
  model.InitParams(rng);
}

GradResult ComputeGradients(const NeuralModel& model, const Batch& batch) {
  GradResult r;
  r.weight = TotalWeight(batch);
  if (r.weight == 0) {
    for (const auto& p : model.params()) r.grads.emplace_back(p.value.shape());
    return r;
  }
  Tape tape;
  const auto vars = model.Bind(tape, true);
  const Var logits = model.Forward(tape, vars, batch.inputs, batch.seq_len);
  const Var loss = CrossEntropy(logits, batch.targets, batch.weights);
  r.loss = loss.value().data()[0];
  tape.Backward(loss);
  r.grads.reserve(vars.size());
  for (const Var& v : vars) r.grads.push_back(tape.grad(v));
  return r;
}

GradResult ComputeGradientsSharded(const NeuralModel& model, const Batch& batch,
                                   std::size_t shards) {
  const std::size_t blocks = batch.blocks();
  shards = std::clamp<std::size_t>(shards, 1, std::max<std::size_t>(blocks, 1));
  if (shards == 1) return ComputeGradients(model, batch);
  std::vector<GradResult> parts(shards);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t first = blocks * s / shards;
    const std::size_t last = blocks * (s + 1) / shards;
    threads.emplace_back([&, s, first, last] {
      try {
        parts[s] = ComputeGradients(model, SelectBlocks(batch, first, last - first));
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  GradResult total;
  for (const auto& p : parts) total.weight += p.weight;
  total.grads.reserve(parts[0].grads.size());
  for (const auto& g : parts[0].grads) total.grads.emplace_back(g.shape());
  if (total.weight == 0) return total;
  for (const auto& p : parts) {
    const double share = p.weight / total.weight;
    total.loss += share * p.loss;
    for (std::size_t i = 0; i < p.grads.size(); ++i) {
      auto dst = total.grads[i].data();
      const auto src = p.grads[i].data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += static_cast<Real>(share * src[k]);
    }
  }
  return total;
}

double ClipGlobalNorm(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0;
  for (const auto& g : grads) {
    for (Real x : g.data()) sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) {
      for (Real& x : g.data()) x = static_cast<Real>(x * s);
    }
  }
  return norm;
}

Optimizer::Optimizer(const TrainConfig& config, const ParamList& params, std::size_t total_steps)
    : config_(config), total_steps_(total_steps) {
  config_.Validate();
  const bool need_m = config_.optimizer == "adam" || config_.momentum > 0;
  for (const auto& p : params) {
    if (need_m) m_.emplace_back(p.value.shape());
    if (config_.optimizer == "adam") v_.emplace_back(p.value.shape());
  }
}

double Optimizer::LearningRate(std::size_t step) const {
  if (!config_.cosine || total_steps_ == 0) return config_.learning_rate;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps_));
  return config_.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void Optimizer::Step(ParamList& params, std::vector<Tensor>& grads, std::size_t step) {
  if (grads.size() != params.size()) {
    Fail(ErrorKind::kDimension, "optimizer: " + std::to_string(grads.size()) +
                                    " gradients for " + std::to_string(params.size()) +
                                    " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    CheckSameShape(params[i].value, grads[i], "optimizer step");
    if (!grads[i].AllFinite()) {
      Fail(ErrorKind::kNumeric, "diverged at step " + std::to_string(step) +
                                    ": non-finite gradient for '" + params[i].name + "'");
    }
  }
  ClipGlobalNorm(grads, config_.clip_norm);
  const double lr = LearningRate(step);
  const double decay = config_.weight_decay;
  const bool adam = config_.optimizer == "adam";
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double t = static_cast<double>(step + 1);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.data();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      double update;
      if (adam) {
        Real& m = m_[i].data()[k];
        Real& v = v_[i].data()[k];
        m = static_cast<Real>(b1 * m + (1 - b1) * g[k]);
        v = static_cast<Real>(b2 * v + (1 - b2) * g[k] * g[k]);
        update = (m / c1) / (std::sqrt(v / c2) + 1e-8);
      } else if (config_.momentum > 0) {
        Real& m = m_[i].data()[k];
        m = static_cast<Real>(config_.momentum * m + g[k]);
        update = m;
      } else {
        update = g[k];
      }
      if (decay > 0) update += decay * theta[k];
      theta[k] = static_cast<Real>(theta[k] - lr * update);
    }
  }
}

void SgdStep(ParamList& params, std::vector<Tensor>& grads, const TrainConfig& config,
             std::size_t step) {
  TrainConfig plain = config;
  plain.optimizer = "sgd";
  plain.momentum = 0;
  plain.cosine = false;
  Optimizer(plain, params, 0).Step(params, grads, step);
}

StreamSplit SplitStream(std::size_t length, double eval_fraction) {
  if (!(eval_fraction > 0 && eval_fraction < 1)) {
    Fail(ErrorKind::kConfig, "eval_fraction must lie in (0, 1)");
  }
  const auto held = static_cast<std::size_t>(
      std::llround(static_cast<double>(length) * eval_fraction));
  if (held < 1 || held >= length) {
    Fail(ErrorKind::kData, "corpus of " + std::to_string(length) +
                               " tokens is too short to hold out a fraction of " +
                               FormatDouble(eval_fraction));
  }
  return {length - held};
}

std::vector<std::size_t> BlockStarts(std::size_t begin, std::size_t end, std::size_t seq_len) {
  std::vector<std::size_t> starts;
  for (std::size_t s = begin; s < end; s += seq_len) starts.push_back(s);
  return starts;
}

Batch MakeStreamBatch(std::span<const TokenId> stream, std::span<const std::size_t> starts,
                      std::size_t end, std::size_t seq_len) {
  Batch b;
  b.seq_len = seq_len;
  const std::size_t n = starts.size() * seq_len;
  b.inputs.reserve(n);
  b.targets.reserve(n);
  b.weights.reserve(n);
  for (std::size_t s : starts) {
    for (std::size_t i = 0; i < seq_len; ++i) {
      const std::size_t t = s + i;
      if (t < end) {
        b.inputs.push_back(t == 0 ? Vocab::kBos : stream[t - 1]);
        b.targets.push_back(stream[t]);
        b.weights.push_back(1);
      } else {
        b.inputs.push_back(Vocab::kEos);
        b.targets.push_back(Vocab::kEos);
        b.weights.push_back(0);
      }
    }
  }
  return b;
}

namespace {

// Shared driver for stream and task training. `make_batch` builds the batch
// from a list of unit indices (blocks or examples); `evaluate` produces the
// eval points for one step.
RunRecord RunTraining(NeuralModel& model, std::size_t units, std::size_t units_per_batch,
                      const TrainConfig& config,
                      const std::function<Batch(std::span<const std::size_t>)>& make_batch,
                      const std::function<std::vector<EvalPoint>(std::size_t)>& evaluate,
                      const EvalCallback& on_eval) {
  const auto start = Clock::now();
  const std::size_t per_epoch = (units + units_per_batch - 1) / units_per_batch;
  const std::size_t total = config.epochs > 0 ? config.epochs * per_epoch : config.steps;
  Optimizer opt(config, model.params(), total);
  Rng shuffle(DeriveSeed(config.seed, "shuffle"));
  std::vector<std::size_t> order(units);
  std::size_t cursor = units;

  RunRecord record;
  auto do_eval = [&](std::size_t step) {
    for (auto& e : evaluate(step)) {
      e.wall_ms = MsSince(start);
      if (on_eval) on_eval(e);
      record.evals.push_back(std::move(e));
    }
  };
  std::size_t step = 0;
  for (; step < total; ++step) {
    if (step % config.eval_every == 0) do_eval(step);
    if (cursor >= units) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Shuffle(order, shuffle);
      cursor = 0;
    }
    const std::size_t take = std::min(units_per_batch, units - cursor);
    const Batch batch = make_batch(std::span<const std::size_t>(order).subspan(cursor, take));
    cursor += take;
    GradResult g = ComputeGradientsSharded(model, batch, config.workers);
    if (!std::isfinite(g.loss)) {
      record.diverged = true;
      record.divergence = "diverged at step " + std::to_string(step) + ": non-finite loss";
      break;
    }
    try {
      opt.Step(model.params(), g.grads, step);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      record.diverged = true;
      record.divergence = e.what();
      break;
    }
    record.steps_done = step + 1;
  }
  if (!record.diverged) do_eval(step);
  record.wall_ms = MsSince(start);
  return record;
}

EvalPoint StreamEval(const NeuralModel& model, std::span<const TokenId> stream,
                     std::span<const std::size_t> starts, std::size_t end, std::size_t seq_len,
                     std::size_t max_tokens, std::size_t chunk, std::size_t step,
                     const char* split) {
  std::size_t count = starts.size();
  if (max_tokens > 0) count = std::min(count, std::max<std::size_t>(1, max_tokens / seq_len));
  EvalSums total;
  for (std::size_t i = 0; i < count; i += chunk) {
    const std::size_t take = std::min(chunk, count - i);
    const auto part = MakeStreamBatch(stream, starts.subspan(i, take), end, seq_len);
    const auto s = EvaluateBatch(model, part);
    total.loss_sum += s.loss_sum;
    total.weight += s.weight;
    total.correct += s.correct;
  }
  EvalPoint e;
  e.step = step;
  e.split = split;
  e.loss = total.weight > 0 ? total.loss_sum / total.weight : 0;
  return e;
}

}  // namespace

RunRecord TrainOnStream(NeuralModel& model, std::span<const TokenId> stream,
                        const TrainConfig& config, const EvalCallback& on_eval) {
  config.Validate();
  const StreamSplit split = SplitStream(stream.size(), config.eval_fraction);
  const std::size_t seq_len = model.window();
  const auto train_starts = BlockStarts(0, split.train_end, seq_len);
  const auto test_starts = BlockStarts(split.train_end, stream.size(), seq_len);
  const std::size_t per_batch = std::max<std::size_t>(1, config.batch_tokens / seq_len);

  auto make_batch = [&](std::span<const std::size_t> idx) {
    std::vector<std::size_t> starts;
    starts.reserve(idx.size());
    for (std::size_t i : idx) starts.push_back(train_starts[i]);
    return MakeStreamBatch(stream, starts, split.train_end, seq_len);
  };
  auto evaluate = [&](std::size_t step) {
    return std::vector<EvalPoint>{
        StreamEval(model, stream, train_starts, split.train_end, seq_len, config.eval_tokens,
                   per_batch, step, "train"),
        StreamEval(model, stream, test_starts, stream.size(), seq_len, config.eval_tokens,
                   per_batch, step, "test")};
  };
  return RunTraining(model, train_starts.size(), per_batch, config, make_batch, evaluate,
                     on_eval);
}

Batch MakeTaskBatch(std::span<const TaskExample> examples) {
  Batch b;
  for (const auto& ex : examples) b.seq_len = std::max(b.seq_len, ex.prompt.size() + 1);
  for (const auto& ex : examples) {
    const std::size_t answer_pos = ex.prompt.size();
    for (std::size_t i = 0; i < b.seq_len; ++i) {
      if (i == 0) {
        b.inputs.push_back(Vocab::kBos);
      } else if (i <= ex.prompt.size()) {
        b.inputs.push_back(ex.prompt[i - 1]);
      } else {
        b.inputs.push_back(Vocab::kEos);
      }
      b.targets.push_back(i == answer_pos ? ex.answer : Vocab::kEos);
      b.weights.push_back(i == answer_pos ? 1 : 0);
    }
  }
  return b;
}

TaskScore ScoreTask(const NeuralModel& model, std::span<const TaskExample> examples) {
  constexpr std::size_t kChunk = 256;
  EvalSums total;
  for (std::size_t i = 0; i < examples.size(); i += kChunk) {
    const auto part = examples.subspan(i, std::min(kChunk, examples.size() - i));
    const auto s = EvaluateBatch(model, MakeTaskBatch(part));
    total.loss_sum += s.loss_sum;
    total.weight += s.weight;
    total.correct += s.correct;
  }
  TaskScore score;
  if (total.weight > 0) {
    score.loss = total.loss_sum / total.weight;
    score.accuracy = total.correct / total.weight;
  }
  return score;
}

RunRecord TrainOnTask(NeuralModel& model, std::span<const TaskExample> train,
                      std::span<const TaskExample> test, const TrainConfig& config,
                      const EvalCallback& on_eval) {
  config.Validate();
  if (train.empty()) Fail(ErrorKind::kData, "task training set is empty");
  std::size_t longest = 0;
  for (const auto& ex : train) longest = std::max(longest, ex.prompt.size() + 1);
  for (const auto& ex : test) longest = std::max(longest, ex.prompt.size() + 1);
  if (longest > model.window()) {
    Fail(ErrorKind::kConfig, "task prompts need a window of " + std::to_string(longest) +
                                 " but the model has L=" + std::to_string(model.window()));
  }
  const std::size_t per_batch = std::max<std::size_t>(1, config.batch_tokens / longest);

  auto make_batch = [&](std::span<const std::size_t> idx) {
    std::vector<TaskExample> picked;
    picked.reserve(idx.size());
    for (std::size_t i : idx) picked.push_back(train[i]);
    return MakeTaskBatch(picked);
  };
  auto evaluate = [&](std::size_t step) {
    std::vector<EvalPoint> out;
    const auto add = [&](std::span<const TaskExample> set, const char* split) {
      if (set.empty()) return;
      const TaskScore s = ScoreTask(model, set);
      EvalPoint e;
      e.step = step;
      e.split = split;
      e.loss = s.loss;
      e.accuracy = s.accuracy;
      out.push_back(std::move(e));
    };
    add(train, "train");
    add(test, "test");
    return out;
  };
  return RunTraining(model, train.size(), per_batch, config, make_batch, evaluate, on_eval);
}

}  // namespace lmlab
