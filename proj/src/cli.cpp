/* Copyright 2026 The opflow Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "opflow/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <streambuf>

#include "CLI11.hpp"
#include "opflow/apphub.hpp"
#include "opflow/report.hpp"
#include "opflow/run_config.hpp"
#include "opflow/saliency.hpp"

namespace opflow::cli {

namespace {

// Writes to a file and, optionally, a second stream.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == traits_type::eof()) return traits_type::not_eof(c);
    const auto ch = traits_type::to_char_type(c);
    if (a_ && a_->sputc(ch) == traits_type::eof()) return traits_type::eof();
    if (b_ && b_->sputc(ch) == traits_type::eof()) return traits_type::eof();
    return c;
  }
  int sync() override {
    const int ra = a_ ? a_->pubsync() : 0;
    const int rb = b_ ? b_->pubsync() : 0;
    return ra == 0 && rb == 0 ? 0 : -1;
  }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

RunSpec prepare(const TrainOptions& opts) {
  return build_run(resolve_config(load_config(opts.config), opts.env_seed, opts.overrides));
}

}  // namespace

int train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  RunSpec run;
  std::optional<Estimator> est;
  std::ofstream log_file;
  TeeBuf tee(nullptr, nullptr);
  std::ostream log(&tee);
  try {
    run = prepare(opts);
    run.estimator.log = &log;
    est.emplace(std::move(run.estimator));
    const SmokeReport smoke = est->smoke_test();
    if (!smoke.ok()) {
      err << "error: smoke test failed:\n" << smoke.to_string();
      return kInvalid;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }

  try {
    std::filesystem::create_directories(run.output_dir);
    log_file.open(run.output_dir / "train.log", std::ios::binary);
    if (!log_file) throw Error("cannot write " + (run.output_dir / "train.log").string());
    tee = TeeBuf(log_file.rdbuf(), opts.echo ? out.rdbuf() : nullptr);
    {
      std::ofstream cfg(run.output_dir / "config.json", std::ios::binary);
      cfg << run.config.dump(2) << '\n';
    }
    const History history = est->fit();
    log.flush();
    history.write_csv(run.output_dir / "history.csv");
    for (const auto& [name, model] : run.models) save(*model, run.output_dir / (name + ".ckpt"));
    out << "wrote " << (run.output_dir / "history.csv").string() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    log.flush();
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int benchmark(const TrainOptions& opts, std::size_t n_batches, std::ostream& out, std::ostream& err) {
  RunSpec run;
  try {
    run = prepare(opts);
    if (n_batches == 0) throw ConfigError("--batches must be >= 1");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  try {
    const Pipeline& p = run.estimator.pipeline;
    const BenchmarkResult r = opflow::benchmark(p.train, p.config, p.ops, n_batches);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "batches_per_sec=%.3f samples_per_sec=%.3f", r.batches_per_sec,
                  r.samples_per_sec);
    out << buf << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int saliency(const std::filesystem::path& checkpoint, const std::filesystem::path& input_csv,
             const std::filesystem::path& out_pgm, std::ostream& err) {
  try {
    saliency_to_pgm(checkpoint, input_csv, out_pgm);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int report(const std::filesystem::path& history_csv, const std::filesystem::path& out_md,
           std::ostream& err) {
  try {
    write_report(history_csv, out_md);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"opflow: dataflow training runner"};
  app.require_subcommand(1);

  TrainOptions topts;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train from a JSON run config");
  train_cmd->add_option("config", topts.config, "Run config (JSON)")->required();
  train_cmd->add_option("--set", topts.overrides, "Override a config field: key.path=value");
  train_cmd->add_flag("-q,--quiet", quiet, "Write log lines to train.log only");

  TrainOptions bopts;
  std::size_t n_batches = 10;
  auto* bench_cmd = app.add_subcommand("benchmark", "Measure pipeline throughput");
  bench_cmd->add_option("config", bopts.config, "Run config (JSON)")->required();
  bench_cmd->add_option("-n,--batches", n_batches, "Number of batches")->capture_default_str();
  bench_cmd->add_option("--set", bopts.overrides, "Override a config field: key.path=value");

  std::string ckpt, grid, pgm;
  auto* sal_cmd = app.add_subcommand("saliency", "Gradient saliency map of one input grid");
  sal_cmd->add_option("checkpoint", ckpt, "Model checkpoint")->required();
  sal_cmd->add_option("input_csv", grid, "Input image as a CSV grid")->required();
  sal_cmd->add_option("out_pgm", pgm, "Output PGM (P5)")->required();

  std::string history, md;
  auto* rep_cmd = app.add_subcommand("report", "Markdown report of a training history");
  rep_cmd->add_option("history_csv", history, "history.csv from train")->required();
  rep_cmd->add_option("out_md", md, "Output markdown")->required();

  std::string example_name;
  auto* ex_cmd = app.add_subcommand("example", "Print a template run config, or list them");
  ex_cmd->add_option("name", example_name, "Template name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("OPFLOW_SEED")) env_seed = s;
  if (*train_cmd) {
    topts.env_seed = env_seed;
    topts.echo = !quiet;
    return train(topts, out, err);
  }
  if (*bench_cmd) {
    bopts.env_seed = env_seed;
    return benchmark(bopts, n_batches, out, err);
  }
  if (*sal_cmd) return saliency(ckpt, grid, pgm, err);
  if (*ex_cmd) {
    if (example_name.empty()) {
      for (const auto& n : apphub::example_names()) out << n << '\n';
      return kOk;
    }
    try {
      out << apphub::example(example_name).dump(2) << '\n';
      return kOk;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kInvalid;
    }
  }
  return report(history, md, err);
}

}  // namespace opflow::cli
