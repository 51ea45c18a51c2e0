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

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "commands.h"
#include "lmlab/analysis.h"
#include "lmlab/error.h"
#include "lmlab/probe.h"
#include "lmlab/rng.h"
#include "lmlab/scaling.h"
#include "lmlab/serialize.h"

namespace lmlab::cli {
namespace {

Json FitJson(const ScalingFit& f, std::size_t points) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["alpha_p"] = f.alpha_p;
  j["alpha_d"] = f.alpha_d;
  j["p_c"] = f.p_c;
  j["d_c"] = f.d_c;
  j["residual"] = f.residual;
  j["rmse"] = f.rmse;
  j["pure_power_law"] = f.pure_power_law;
  j["iterations"] = f.iterations;
  j["points"] = points;
  return j;
}

std::vector<std::size_t> ParseSizes(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : SplitList(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      Fail(ErrorKind::kConfig, key + ": bad size '" + item + "'");
    }
  }
  if (out.empty()) Fail(ErrorKind::kConfig, key + " must list at least one size");
  return out;
}

struct Cell {
  std::size_t dim = 0;
  std::size_t tokens = 0;
  ScalingPoint point;
  std::exception_ptr error;
};

void AddScaling(CLI::App& app, Io& io) {
  auto* scaling = app.add_subcommand("scaling", "Scaling-law grid runs and fits");
  scaling->require_subcommand(1);
  {
    auto* cmd = scaling->add_subcommand(
        "run", "Train a grid of model widths x dataset sizes, then fit the law");
    auto config = std::make_shared<std::string>();
    auto sets = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>();
    auto force = std::make_shared<bool>(false);
    auto jobs = std::make_shared<std::size_t>(1);
    cmd->add_option("--config", *config, "key=value run config; grid_dims, grid_tokens and "
                                         "test_tokens set the grid");
    cmd->add_option("--set", *sets, "key=value override (repeatable)");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--force", *force, "replace a non-empty directory");
    cmd->add_option("--jobs", *jobs, "grid cells trained in parallel");
    cmd->callback([=, &io] {
      KeyValues kv = LoadConfig(*config, *sets);
      const auto dims = ParseSizes(kv.GetString("grid_dims", "8,16,32"), "grid_dims");
      const auto sizes =
          ParseSizes(kv.GetString("grid_tokens", "2000,8000,32000"), "grid_tokens");
      const std::size_t test_tokens = kv.GetUInt("test_tokens", 4000);
      KeyValues base;
      for (const auto& [k, v] : kv.values()) {
        if (k != "grid_dims" && k != "grid_tokens" && k != "test_tokens") base.Set(k, v);
      }
      if (base.GetString("data", "grammar") != "grammar" &&
          base.GetString("data", "grammar") != "corpus") {
        Fail(ErrorKind::kConfig, "scaling run needs data=grammar or data=corpus");
      }
      base.Set("data", base.GetString("data", "grammar"));
      const std::size_t max_tokens = *std::max_element(sizes.begin(), sizes.end());
      if (base.GetString("data", "") == "grammar") {
        base.Set("grammar_tokens", std::to_string(max_tokens + test_tokens));
      }
      const RunSpec base_spec = ResolveRun(base);
      const RunData data = LoadRunData(base_spec);
      if (data.stream.size() < max_tokens + test_tokens) {
        Fail(ErrorKind::kData, "corpus has " + std::to_string(data.stream.size()) +
                                   " tokens; the grid needs " +
                                   std::to_string(max_tokens + test_tokens));
      }
      const fs::path dir = PrepareOutputDir(*out, *force);
      std::string grid_text = base_spec.text;
      grid_text += "grid_dims=" + kv.GetString("grid_dims", "8,16,32") + "\n";
      grid_text += "grid_tokens=" + kv.GetString("grid_tokens", "2000,8000,32000") + "\n";
      grid_text += "test_tokens=" + std::to_string(test_tokens) + "\n";
      WriteFile(dir / "config.txt", grid_text);

      std::vector<Cell> cells;
      for (std::size_t d : dims) {
        for (std::size_t t : sizes) cells.push_back({d, t, {}, {}});
      }
      const std::span<const TokenId> test(data.stream.end() - static_cast<std::ptrdiff_t>(test_tokens),
                                          data.stream.end());
      auto run_cell = [&](Cell& cell) {
        try {
          KeyValues ckv = base_spec.kv;
          ckv.Set("dim", std::to_string(cell.dim));
          const RunSpec spec = ResolveRun(ckv);
          auto model = BuildModel(spec, data.vocab.size());
          std::vector<TokenId> stream(data.stream.begin(),
                                      data.stream.begin() + static_cast<std::ptrdiff_t>(cell.tokens));
          stream.insert(stream.end(), test.begin(), test.end());
          TrainConfig tc = spec.train;
          tc.eval_fraction =
              static_cast<double>(test_tokens) / static_cast<double>(stream.size());
          const RunRecord record = TrainOnStream(*model, stream, tc);
          const fs::path cdir = dir / "runs" /
                                ("dim" + std::to_string(cell.dim) + "_tokens" +
                                 std::to_string(cell.tokens));
          fs::create_directories(cdir);
          WriteFile(cdir / "config.txt", spec.text);
          std::ostringstream metrics, summary;
          WriteMetricsJsonl(metrics, record);
          WriteSummaryCsv(summary, record);
          WriteFile(cdir / "metrics.jsonl", metrics.str());
          WriteFile(cdir / "summary.csv", summary.str());
          if (record.diverged) Fail(ErrorKind::kNumeric, record.divergence);
          double loss = 0;
          for (const auto& e : record.evals) {
            if (e.split == "test") loss = e.loss;
          }
          double params = static_cast<double>(model->ParamCount());
          for (const auto& p : model->params()) {
            if (p.name == "embed" || p.name == "decoder") params -= static_cast<double>(p.value.size());
          }
          cell.point = {params, static_cast<double>(SplitStream(stream.size(), tc.eval_fraction).train_end),
                        loss};
        } catch (...) {
          cell.error = std::current_exception();
        }
      };
      std::size_t next = 0;
      std::mutex mu;
      std::vector<std::thread> workers;
      for (std::size_t w = 0; w < std::max<std::size_t>(1, *jobs); ++w) {
        workers.emplace_back([&] {
          for (;;) {
            std::size_t i;
            {
              std::lock_guard<std::mutex> lock(mu);
              if (next >= cells.size()) return;
              i = next++;
            }
            run_cell(cells[i]);
          }
        });
      }
      for (auto& t : workers) t.join();
      std::vector<ScalingPoint> points;
      for (const auto& c : cells) {
        if (c.error) {
          try {
            std::rethrow_exception(c.error);
          } catch (const Error& e) {
            Fail(e.kind(), "cell dim=" + std::to_string(c.dim) + " tokens=" +
                               std::to_string(c.tokens) + ": " + e.what());
          }
        }
        points.push_back(c.point);
        io.out << "dim=" << c.dim << " params=" << FormatDouble(c.point.params)
               << " tokens=" << FormatDouble(c.point.tokens)
               << " test_loss=" << FormatDouble(c.point.loss) << "\n";
      }
      std::ostringstream csv;
      WriteScalingCsv(csv, points);
      WriteFile(dir / "points.csv", csv.str());
      try {
        const auto fit = FitScaling(points);
        WriteJson(dir / "fit.json", FitJson(fit, points.size()));
        io.out << FitJson(fit, points.size()).dump() << "\n";
      } catch (const Error& e) {
        // The grid still stands on its own; report why no fit was written.
        io.err << "no fit: " << e.what() << "\n";
      }
    });
  }
  {
    auto* cmd = scaling->add_subcommand("fit", "Fit the (P, D) scaling law to a CSV of points");
    auto input = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "CSV with header params,tokens,loss")->required();
    cmd->add_option("--out", *out, "directory for fit.json");
    cmd->callback([=, &io] {
      std::ifstream in(*input);
      if (!in) Fail(ErrorKind::kIo, "cannot read '" + *input + "'");
      const auto points = ReadScalingCsv(in);
      const auto fit = FitScaling(points);
      const Json j = FitJson(fit, points.size());
      if (!out->empty()) {
        std::error_code ec;
        fs::create_directories(*out, ec);
        if (ec) Fail(ErrorKind::kIo, "cannot create '" + *out + "': " + ec.message());
        WriteJson(fs::path(*out) / "fit.json", j);
      }
      io.out << j.dump() << "\n";
    });
  }
}

// traces.bin: u32 count, then one tensor per sentence. manifest.json holds
// the tokens and tree distances.
struct Traces {
  Json manifest;
  std::vector<ProbeSentence> sentences;
};

Traces LoadTraces(const std::string& dir) {
  Traces t;
  t.manifest = Json::parse(ReadFile(fs::path(dir) / "manifest.json"));
  std::ifstream in(fs::path(dir) / "traces.bin", std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot read traces in '" + dir + "'");
  const std::uint32_t n = ReadU32(in);
  const auto& entries = t.manifest.at("sentences");
  if (entries.size() != n) {
    Fail(ErrorKind::kData, "traces: manifest lists " + std::to_string(entries.size()) +
                               " sentences, traces.bin holds " + std::to_string(n));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    ProbeSentence s;
    s.vectors = ReadTensor(in);
    s.distances = entries[i].at("distances").get<std::vector<std::vector<int>>>();
    t.sentences.push_back(std::move(s));
  }
  return t;
}

void AddProbe(CLI::App& app, Io& io) {
  auto* probe = app.add_subcommand("probe", "Structural probes on captured activations");
  probe->require_subcommand(1);
  {
    auto* cmd = probe->add_subcommand(
        "capture", "Capture activations of a grammar-trained run on fresh sentences");
    auto run_dir = std::make_shared<std::string>();
    auto layer = std::make_shared<std::size_t>(1);
    auto count = std::make_shared<std::size_t>(200);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    auto force = std::make_shared<bool>(false);
    cmd->add_option("--run", *run_dir, "run directory trained with data=grammar")->required();
    cmd->add_option("--layer", *layer, "activation index (0 = input, l+1 = after layer l)");
    cmd->add_option("--sentences", *count, "sentences to sample");
    cmd->add_option("--seed", *seed, "seed");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--force", *force, "replace a non-empty directory");
    cmd->callback([=, &io] {
      const LoadedRun run = LoadRun(*run_dir);
      if (run.spec.data != "grammar") {
        Fail(ErrorKind::kConfig, "probe capture needs a run trained with data=grammar");
      }
      Grammar g = Grammar::Load(run.spec.kv.GetString("grammar", "fig3_pcfg"));
      if (!g.probabilistic()) g = g.WithUniformProbabilities();
      Rng rng(DeriveSeed(*seed, "probe/sentences"));
      const fs::path dir = PrepareOutputDir(*out, *force);
      Json manifest;
      manifest["format_version"] = kFormatVersion;
      manifest["run"] = *run_dir;
      manifest["layer"] = *layer;
      manifest["sentences"] = Json::array();
      std::ofstream bin(dir / "traces.bin", std::ios::binary);
      WriteU32(bin, static_cast<std::uint32_t>(*count));
      std::size_t made = 0;
      while (made < *count) {
        auto gen = Generate(g, rng);
        if (gen.tokens.size() < 2 || gen.tokens.size() + 1 > run.model->window()) continue;
        std::vector<TokenId> ids;
        std::vector<std::string> words;
        for (SymbolId s : gen.tokens) {
          words.push_back(g.name(s));
          ids.push_back(run.vocab.Id(words.back()));
        }
        const ProbeSentence s = ProbeSentenceFor(*run.model, *layer, ids, gen.tree);
        WriteTensor(bin, s.vectors);
        manifest["sentences"].push_back({{"tokens", words}, {"distances", s.distances}});
        ++made;
      }
      bin.close();
      if (!bin) Fail(ErrorKind::kIo, "cannot write traces.bin");
      WriteJson(dir / "manifest.json", manifest);
      io.out << "sentences=" << made << " layer=" << *layer << "\n";
    });
  }
  {
    auto* cmd = probe->add_subcommand("train", "Fit a rank-r tree-distance probe");
    auto traces = std::make_shared<std::string>();
    auto c = std::make_shared<ProbeConfig>();
    auto shuffle = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    auto force = std::make_shared<bool>(false);
    cmd->add_option("--traces", *traces, "directory written by probe capture")->required();
    cmd->add_option("--rank", c->rank, "projection rank r");
    cmd->add_option("--steps", c->steps, "full-batch steps");
    cmd->add_option("--lr", c->learning_rate, "Adam learning rate");
    cmd->add_option("--seed", c->seed, "seed");
    cmd->add_flag("--shuffle", *shuffle, "negative control: permute each sentence's tree");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--force", *force, "replace a non-empty directory");
    cmd->callback([=, &io] {
      Traces t = LoadTraces(*traces);
      if (*shuffle) {
        Rng rng(DeriveSeed(c->seed, "probe/shuffle"));
        t.sentences = ShuffleTrees(t.sentences, rng);
      }
      auto p = TrainStructuralProbe(t.sentences, *c);
      p.layer = t.manifest.value("layer", std::size_t{0});
      const fs::path dir = PrepareOutputDir(*out, *force);
      std::ofstream bin(dir / "probe.bin", std::ios::binary);
      WriteTensor(bin, p.projection);
      bin.close();
      if (!bin) Fail(ErrorKind::kIo, "cannot write probe.bin");
      Json j;
      j["format_version"] = kFormatVersion;
      j["rank"] = c->rank;
      j["layer"] = p.layer;
      j["shuffled"] = *shuffle;
      j["loss"] = p.loss;
      j["loss_curve"] = p.loss_curve;
      WriteJson(dir / "probe.json", j);
      io.out << "rank=" << c->rank << " loss=" << FormatDouble(p.loss) << "\n";
    });
  }
  {
    auto* cmd = probe->add_subcommand("eval", "Spearman and RMSE of a probe on held-out traces");
    auto probe_dir = std::make_shared<std::string>();
    auto traces = std::make_shared<std::string>();
    auto shuffle = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--probe", *probe_dir, "directory written by probe train")->required();
    cmd->add_option("--traces", *traces, "held-out capture directory")->required();
    cmd->add_flag("--shuffle", *shuffle, "negative control: permute each sentence's tree");
    cmd->add_option("--seed", *seed, "shuffle seed");
    cmd->callback([=, &io] {
      Traces t = LoadTraces(*traces);
      if (*shuffle) {
        Rng rng(DeriveSeed(*seed, "probe/shuffle"));
        t.sentences = ShuffleTrees(t.sentences, rng);
      }
      StructuralProbe p;
      std::ifstream bin(fs::path(*probe_dir) / "probe.bin", std::ios::binary);
      if (!bin) Fail(ErrorKind::kIo, "cannot read probe in '" + *probe_dir + "'");
      p.projection = ReadTensor(bin);
      const auto s = EvaluateProbe(p, t.sentences);
      Json j;
      j["format_version"] = kFormatVersion;
      j["spearman"] = s.spearman;
      j["rmse"] = s.rmse;
      j["sentences"] = s.sentences;
      j["skipped"] = s.skipped;
      io.out << j.dump() << "\n";
    });
  }
}

}  // namespace

void AddAnalysisCommands(CLI::App& app, Io& io) {
  AddScaling(app, io);
  AddProbe(app, io);
}

}  // namespace lmlab::cli
