// Copyright (c) 2026 The capsr Authors. All Rights Reserved.
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

#include "capsr/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "capsr/run_config.hpp"

namespace capsr {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> scale;
  std::optional<std::string> loss;
  bool deterministic = false;
  std::vector<std::string> set;
  std::string out;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--config", f.config, "Run configuration file (key = value lines)");
  cmd.add_option("--seed", f.seed, "Seed for every random draw");
  cmd.add_option("--scale", f.scale, "Upscaling factor r (2, 3 or 4)");
  cmd.add_option("--loss", f.loss, "Training loss name, e.g. adaptive, l1, mix");
  cmd.add_flag("--deterministic", f.deterministic, "Request bitwise reproducible execution");
  cmd.add_option("--set", f.set, "Extra override key=value, repeatable");
}

// Builds the effective configuration: defaults, then the file (or a fallback
// text such as a checkpoint echo), then flags.
RunConfig resolve(const CommonFlags& f, const std::string& fallback_text = "") {
  RunConfig c;
  if (!f.config.empty()) {
    c = load_run_config(f.config);
  } else if (!fallback_text.empty()) {
    c = parse_run_config(fallback_text, "<checkpoint>");
  }
  std::vector<std::pair<std::string, std::string>> kv;
  if (f.seed) kv.emplace_back("train.seed", std::to_string(*f.seed));
  if (f.scale) kv.emplace_back("model.r", std::to_string(*f.scale));
  if (f.loss) kv.emplace_back("loss.name", *f.loss);
  if (f.deterministic) kv.emplace_back("train.deterministic", "true");
  for (const auto& s : f.set) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  apply_overrides(c, kv);
  c.validate();
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw IoError("cannot write " + p.string());
}

void echo_config(const fs::path& dir, const RunConfig& c, const std::string& extra = "") {
  fs::create_directories(dir);
  write_text(dir / "config.txt", c.to_text() + extra);
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void print_summary(std::ostream& out, const EvalReport& report) {
  const ImageMetrics m = report.mean();
  out << report.dataset << " x" << report.scale << " (" << report.rows.size() << " images)"
      << "  PSNR " << format_metric(m.psnr) << "  SSIM " << format_metric(m.ssim) << "  MS-SSIM "
      << format_metric(m.ms_ssim) << "  3-PSNR " << format_metric(m.psnr3) << "  3-SSIM "
      << format_metric(m.ssim3) << "\n";
}

void write_report(const fs::path& dir, const EvalReport& report) {
  fs::create_directories(dir);
  write_text(dir / "report.csv", report.csv());
  write_text(dir / "summary.json", report.summary_json());
}

// A model restored from a checkpoint, at either precision.
class Upscaler {
 public:
  // No checkpoint selects the bicubic baseline.
  Upscaler(const RunConfig& config, const std::optional<Checkpoint>& ckpt)
      : scale_(config.model.scale), precision_(config.precision) {
    if (!ckpt) return;
    std::vector<StoredTensor> weights;
    for (const auto& t : ckpt->params) {
      if (t.name.rfind("loss.", 0) != 0) weights.push_back(t);
    }
    if (precision_ == Precision::kFloat) {
      f_.emplace(config.model, config.train.seed);
      auto params = f_->parameters();
      restore_parameters(weights, params);
    } else {
      d_.emplace(config.model, config.train.seed);
      auto params = d_->parameters();
      restore_parameters(weights, params);
    }
  }

  [[nodiscard]] Image operator()(const Image& lr) const {
    if (f_) return f_->predict(lr.cast<float>()).cast<double>();
    if (d_) return d_->predict(lr);
    return bicubic_upscale(lr, scale_);
  }

 private:
  int scale_;
  Precision precision_;
  std::optional<SrCapsModel<float>> f_;
  std::optional<SrCapsModel<double>> d_;
};

std::optional<Checkpoint> checkpoint_for(const std::string& path, const std::string& baseline) {
  if (!baseline.empty()) {
    if (!path.empty()) throw UsageError("--checkpoint and --baseline are mutually exclusive");
    return std::nullopt;
  }
  if (path.empty()) throw UsageError("either --checkpoint or --baseline bicubic is required");
  if (!fs::is_regular_file(path)) throw ConfigError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

template <typename T>
void train_with(const RunConfig& c, const PairedDataset& train, const PairedDataset* valid,
                const fs::path& run_dir, const std::string& resume, std::ostream& out) {
  Trainer<T> trainer(c.model, c.train, c.to_text());
  if (!resume.empty()) {
    if (!fs::is_regular_file(resume)) throw ConfigError("checkpoint not found: " + resume);
    trainer.resume(load_checkpoint(resume));
    out << "resumed at epoch " << trainer.epoch() << "\n";
  } else {
    fs::remove(run_dir / "history.jsonl");
  }
  out << "model parameters: " << trainer.model().summary().total << "\n";
  (void)trainer.fit(train, valid, run_dir, &out);
  out << "finished " << trainer.epoch() << " epochs, " << trainer.step() << " steps; checkpoint "
      << (run_dir / "last.ckpt").string() << "\n";
}

int cmd_train(const CommonFlags& f, const std::optional<int64_t>& epochs,
              const std::string& dataset, const std::string& resume, std::ostream& out) {
  CommonFlags flags = f;
  if (epochs) flags.set.insert(flags.set.begin(), "train.epochs=" + std::to_string(*epochs));
  if (!dataset.empty()) flags.set.insert(flags.set.begin(), "data.root=" + dataset);
  const RunConfig c = resolve(flags);
  if (c.data.root.empty()) throw ConfigError("no dataset given (use --dataset or data.root)");
  const DatasetSpec train_spec = c.split(c.data.split);
  require_dir(train_spec.base(), "dataset");
  const fs::path run_dir = flags.out.empty() ? fs::path("runs") / "train" : fs::path(flags.out);
  echo_config(run_dir, c);

  const PairedDataset train = PairedDataset::load(train_spec);
  if (train.empty()) throw ConfigError("no images found in " + train_spec.hr_path().string());
  std::optional<PairedDataset> valid;
  if (!c.valid_split.empty() && fs::is_directory(c.split(c.valid_split).base())) {
    valid = PairedDataset::load(c.split(c.valid_split));
  } else {
    out << "no validation split, best.ckpt will not be written\n";
  }
  const PairedDataset* vp = valid ? &*valid : nullptr;
  if (c.precision == Precision::kFloat) {
    train_with<float>(c, train, vp, run_dir, resume, out);
  } else {
    train_with<double>(c, train, vp, run_dir, resume, out);
  }
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& baseline,
             const std::string& dataset, const std::string& split, std::ostream& out) {
  const std::optional<Checkpoint> ckpt = checkpoint_for(checkpoint, baseline);
  CommonFlags flags = f;
  if (!dataset.empty()) flags.set.insert(flags.set.begin(), "data.root=" + dataset);
  const RunConfig c = resolve(flags, ckpt ? ckpt->config_text : "");
  if (c.data.root.empty()) throw ConfigError("no dataset given (use --dataset or data.root)");
  const DatasetSpec spec = c.split(split);
  require_dir(spec.base(), "dataset");
  const Upscaler up(c, ckpt);
  const PairedDataset data = PairedDataset::load(spec);
  if (data.empty()) throw ConfigError("no images found in " + spec.hr_path().string());

  EvalReport report;
  report.dataset = spec.base().filename().string();
  if (report.dataset.empty()) report.dataset = spec.base().parent_path().filename().string();
  report.scale = c.model.scale;
  const EvalOptions opt = c.eval_options();
  for (const auto& pair : data.pairs()) {
    report.rows.push_back(evaluate_pair(pair.id, up(pair.lr), pair.hr, opt));
  }
  print_summary(out, report);
  if (!flags.out.empty()) {
    const std::string source = baseline.empty() ? checkpoint : "baseline " + baseline;
    echo_config(flags.out, c, "# source: " + source + "\n");
    write_report(flags.out, report);
  }
  return kExitOk;
}

int cmd_upscale(const CommonFlags& f, const std::string& checkpoint, const std::string& baseline,
                const std::vector<std::string>& inputs, std::ostream& out, std::ostream& err) {
  const std::optional<Checkpoint> ckpt = checkpoint_for(checkpoint, baseline);
  const RunConfig c = resolve(f, ckpt ? ckpt->config_text : "");
  if (f.out.empty()) throw UsageError("upscale needs --out");
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (auto& p : png_files(in)) files.push_back(p);
    } else {
      files.emplace_back(in);
    }
  }
  if (files.empty()) throw UsageError("no input images");
  const Upscaler up(c, ckpt);
  echo_config(f.out, c);
  int failed = 0;
  for (const auto& p : files) {
    try {
      const fs::path dst = fs::path(f.out) / p.filename();
      save_png(dst, up(load_png(p)));
      out << p.string() << " -> " << dst.string() << "\n";
    } catch (const std::exception& e) {
      err << "error: " << p.string() << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_compare(const CommonFlags& f, const std::string& sr_dir, const std::string& hr_dir,
                std::optional<int> crop, std::ostream& out) {
  CommonFlags flags = f;
  if (crop) flags.set.push_back("eval.crop=" + std::to_string(*crop));
  RunConfig c = resolve(flags);
  if (!crop && c.eval_crop < 0) c.eval_crop = 0;  // no model scale to infer a border from
  require_dir(sr_dir, "SR directory");
  require_dir(hr_dir, "HR directory");
  std::set<std::string> sr_names;
  std::set<std::string> hr_names;
  for (const auto& p : png_files(sr_dir)) sr_names.insert(p.filename().string());
  for (const auto& p : png_files(hr_dir)) hr_names.insert(p.filename().string());
  if (sr_names != hr_names || sr_names.empty()) {
    std::string msg = "filename sets differ";
    for (const auto& n : sr_names) {
      if (!hr_names.count(n)) msg += "\n  only in " + sr_dir + ": " + n;
    }
    for (const auto& n : hr_names) {
      if (!sr_names.count(n)) msg += "\n  only in " + hr_dir + ": " + n;
    }
    if (sr_names.empty() && hr_names.empty()) msg = "no .png images to compare";
    throw ConfigError(msg);
  }
  EvalReport report;
  report.dataset = fs::path(hr_dir).filename().string();
  report.scale = c.model.scale;
  const EvalOptions opt = c.eval_options();
  for (const auto& name : sr_names) {
    const Image sr = load_png(fs::path(sr_dir) / name);
    const Image hr = load_png(fs::path(hr_dir) / name);
    if (sr.shape() != hr.shape()) {
      throw ConfigError("size mismatch for " + name + ": " + sr.shape().str() + " vs " +
                        hr.shape().str());
    }
    report.rows.push_back(evaluate_pair(fs::path(name).stem().string(), sr, hr, opt));
  }
  out << report.csv();
  print_summary(out, report);
  if (!flags.out.empty()) {
    echo_config(flags.out, c);
    write_report(flags.out, report);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"capsr: capsule network single image super-resolution"};
  app.require_subcommand(1);

  CommonFlags train_f;
  std::optional<int64_t> epochs;
  std::string train_dataset;
  std::string resume;
  auto* train = app.add_subcommand("train", "Train a model and write a run directory");
  add_common(*train, train_f);
  train->add_option("--epochs", epochs, "Number of epochs");
  train->add_option("--dataset", train_dataset, "Dataset root holding the train/valid splits");
  train->add_option("--resume", resume, "Continue from a checkpoint with training state");
  train->add_option("--out", train_f.out, "Run directory (default runs/train)");

  CommonFlags eval_f;
  std::string eval_ckpt;
  std::string eval_baseline;
  std::string eval_dataset;
  std::string eval_split;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint or a baseline on a dataset");
  add_common(*eval, eval_f);
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint");
  eval->add_option("--baseline", eval_baseline, "Use a baseline instead of a model")
      ->check(CLI::IsMember({"bicubic"}));
  eval->add_option("--dataset", eval_dataset, "Dataset directory (HR/ and optional LRx<r>/)");
  eval->add_option("--split", eval_split, "Subdirectory of the dataset to use");
  eval->add_option("--out", eval_f.out, "Directory for report.csv, summary.json, config.txt");

  CommonFlags up_f;
  std::string up_ckpt;
  std::string up_baseline;
  std::vector<std::string> up_inputs;
  auto* upscale = app.add_subcommand("upscale", "Super-resolve PNG files");
  add_common(*upscale, up_f);
  upscale->add_option("--checkpoint", up_ckpt, "Model checkpoint");
  upscale->add_option("--baseline", up_baseline, "Use a baseline instead of a model")
      ->check(CLI::IsMember({"bicubic"}));
  upscale->add_option("--out", up_f.out, "Output directory")->required();
  upscale->add_option("inputs", up_inputs, "PNG files or directories")->required();

  CommonFlags cmp_f;
  std::string sr_dir;
  std::string hr_dir;
  std::optional<int> crop;
  auto* compare = app.add_subcommand("compare", "Compare two directories of PNG images");
  add_common(*compare, cmp_f);
  compare->add_option("sr", sr_dir, "Directory of super-resolved images")->required();
  compare->add_option("hr", hr_dir, "Directory of reference images")->required();
  compare->add_option("--crop", crop, "Border pixels excluded from every metric (default 0)");
  compare->add_option("--out", cmp_f.out, "Directory for report.csv, summary.json, config.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_f, epochs, train_dataset, resume, out);
    if (*eval) return cmd_eval(eval_f, eval_ckpt, eval_baseline, eval_dataset, eval_split, out);
    if (*upscale) return cmd_upscale(up_f, up_ckpt, up_baseline, up_inputs, out, err);
    if (*compare) return cmd_compare(cmp_f, sr_dir, hr_dir, crop, out);
  } catch (const std::invalid_argument& e) {  // ConfigError, UsageError, ParameterError
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace capsr
