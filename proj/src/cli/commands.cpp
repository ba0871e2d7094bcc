#include "qll/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <map>

#include "qll/ambigen.hpp"
#include "qll/dataset_io.hpp"
#include "qll/experiment.hpp"
#include "qll/io_util.hpp"
#include "qll/parallel.hpp"
#include "qll/results.hpp"

namespace qll {

namespace {

namespace fs = std::filesystem;

struct GenerateArgs {
  std::uint32_t c = 4;
  std::uint32_t d = 8;
  std::string mix = "mixup";
  std::uint32_t m = 2;
  std::uint32_t r = 4;
  std::uint32_t n = 2000;
  std::uint32_t n_test = 1000;
  std::uint64_t seed = 1;
  double separation = 6.0;
  double noise = 1.0;
  bool reject_degenerate = false;
  std::string out = "data";
};

struct TrainArgs {
  TrainOptions opts;
  std::string train_path;
  std::string test_path;
  std::string out;
  std::string label;
  std::string variant;
};

struct SweepArgs {
  ExperimentConfig exp;
  std::string train_path;
  std::string test_path;
  std::string out = "sweep";
};

struct ReportArgs {
  std::string runs = "runs";
  std::string csv;
  std::string format = "text";
};

std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Inputs are taken as given when they exist, otherwise under the output root.
fs::path resolve_input(const std::string& p) {
  const fs::path given(p);
  if (given.is_absolute() || fs::exists(given)) return given;
  const fs::path under_root = resolve_output(given);
  if (fs::exists(under_root)) return under_root;
  throw std::runtime_error("input file not found: " + p);
}

// Training options shared by `train` and `sweep`; `with_grid_fields` adds
// the single-run method/prior/seed flags.
void add_train_options(CLI::App* cmd, TrainOptions& o, bool with_grid_fields) {
  if (with_grid_fields) {
    cmd->add_option("--method", o.method, "ce|bs|gce|sce|js|cpu-sjs|cpu-kl|cpu-js")->capture_default_str();
    cmd->add_option("--pi1", o.pi1, "Prior weighting the positive risk")->capture_default_str();
    cmd->add_option("--pi2", o.pi2, "Prior on the negative risk of positives, or 'auto' for m/c")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Seed for init, shuffling and SJS weights")->capture_default_str();
  }
  cmd->add_option("--epochs", o.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str()->check(CLI::Range(2u, 1u << 30));
  cmd->add_option("--lr", o.lr, "Initial learning rate (default: per method)");
  cmd->add_option("--momentum", o.momentum)->capture_default_str();
  cmd->add_option("--weight-decay", o.weight_decay, "Default: per method");
  cmd->add_option("--model", o.model, "linear|mlp")->capture_default_str();
  cmd->add_option("--hidden", o.hidden, "MLP hidden width")->capture_default_str();
  cmd->add_option("--u-mode", o.u_mode, "complement|full")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Fix the SJS weight in (0, 0.5] instead of sampling it");
  cmd->add_option("--beta", o.beta, "bs: weight on the given label");
  cmd->add_option("--gce-q", o.gce_q, "gce: exponent q");
  cmd->add_option("--sce-a", o.sce_a, "sce: cross-entropy weight");
  cmd->add_option("--sce-b", o.sce_b, "sce: reverse cross-entropy weight");
  cmd->add_option("--js-pi1", o.js_pi1, "js: weight on the label distribution");
}

AmbiguousDataset load(const std::string& p) { return read_dataset(resolve_input(p)); }

std::string print_entropy(const std::string& name, const AmbiguousDataset& ds) {
  const EntropySummary e = summarize_entropy(ds);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s entropy (nats): mean %.6f  min %.6f  max %.6f\n", name.c_str(), e.mean, e.min,
                e.max);
  return buf;
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  MixSpec mix;
  const MixKind kind = [&] {
    try {
      return parse_mix_kind(a.mix);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (kind == MixKind::kNone) throw UsageError("--mix must be mixup or patchmix");
  mix.kind = kind;
  mix.m = a.m;
  mix.r = a.r;
  mix.reject_degenerate = a.reject_degenerate;
  if (a.c == 0 || a.n % a.c != 0 || a.n_test % a.c != 0) {
    throw UsageError("--n and --n-test must be positive multiples of --c");
  }
  BaseSpec base{a.c, a.d, a.n / a.c, a.separation, a.noise};
  BaseSpec test_spec = base;
  test_spec.n_per_class = a.n_test / a.c;
  try {
    base.validate();
    test_spec.validate();
    mix.validate(a.d);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid spec: ") + e.what());
  }

  const AmbiguousDataset base_train = synth_base(base, RngStream(a.seed, streams::kBaseTrain));
  const AmbiguousDataset base_test = synth_base(test_spec, RngStream(a.seed, streams::kBaseTest));
  const AmbiguousDataset amb = generate_ambiguous_dataset(base_train, mix, a.n, RngStream(a.seed, streams::kDatagen));

  const fs::path dir = resolve_output(a.out);
  const std::pair<const char*, const AmbiguousDataset*> files[] = {
      {"base_train.qll", &base_train}, {"base_test.qll", &base_test}, {"ambiguous_train.qll", &amb}};
  for (const auto& [name, ds] : files) {
    write_dataset(dir / name, *ds);
    out << "wrote " << (dir / name).string() << " (" << ds->size() << " examples)\n";
  }
  out << print_entropy("ambiguous_train", amb);
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const AmbiguousDataset train_set = load(a.train_path);
  const AmbiguousDataset test_set = load(a.test_path);
  const TrainConfig cfg = build_train_config(a.opts, train_set);

  RunRecord id;
  id.method = a.opts.method;
  id.label = a.label.empty() ? a.opts.method : a.label;
  id.variant = a.variant.empty() ? dataset_variant(train_set) : a.variant;
  id.seed = a.opts.seed;
  const fs::path run_dir =
      resolve_output(a.out.empty() ? "runs/" + a.opts.method + "-seed" + std::to_string(a.opts.seed) : a.out);

  const TrainReport report = execute_run(train_set, test_set, cfg, id, run_dir);
  char buf[200];
  std::snprintf(buf, sizeof buf, "best test accuracy %.4f  last-5 mean %.4f  (%zu epochs, %.1f s)\n",
                report.best_test_accuracy, report.last5_test_accuracy, report.epochs.size(),
                report.wall_time_seconds);
  out << buf;
  if (report.skipped_batches) out << "skipped single-class batches: " << report.skipped_batches << "\n";
  out << "run directory: " << run_dir.string() << "\n";
  return kExitOk;
}

std::string slug(std::string s) {
  for (char& ch : s) {
    if (ch == ' ' || ch == '/') ch = '_';
  }
  return s;
}

int cmd_sweep(SweepArgs& a, std::ostream& out) {
  ExperimentConfig& exp = a.exp;
  exp.out_dir = a.out;
  exp.validate();
  const AmbiguousDataset train_set = load(a.train_path);
  const AmbiguousDataset test_set = load(a.test_path);
  exp.train_path = a.train_path;
  exp.test_path = a.test_path;
  const fs::path root = resolve_output(exp.out_dir);
  const std::string variant = dataset_variant(train_set);

  std::vector<RunRecord> runs;
  // Maps each row label back to its method for the spread summary.
  std::map<std::string, std::string> method_of_label;
  for (const auto& method : exp.methods) {
    TrainOptions base = exp.train;
    base.method = method;
    const bool pu = is_pu_method(method_preset(method).loss);
    std::vector<std::pair<double, std::string>> grid;
    if (pu) {
      for (double p1 : exp.pi1_grid) {
        for (const auto& p2 : exp.pi2_grid) grid.emplace_back(p1, p2);
      }
    } else {
      grid.emplace_back(base.pi1, base.pi2);
    }
    for (const auto& [p1, p2] : grid) {
      TrainOptions opts = base;
      opts.pi1 = p1;
      opts.pi2 = p2;
      std::string label = method;
      if (pu) label += " pi1=" + fmt_g(p1) + " pi2=" + fmt_g(resolve_pi2(p2, train_set));
      method_of_label[label] = method;
      for (std::uint64_t seed : exp.seeds) {
        opts.seed = seed;
        const TrainConfig cfg = build_train_config(opts, train_set);
        RunRecord id{method, label, variant, seed, 0.0};
        const fs::path run_dir = root / "runs" / slug(label) / ("seed-" + std::to_string(seed));
        const TrainReport report = execute_run(train_set, test_set, cfg, id, run_dir);
        id.best_test_accuracy = report.best_test_accuracy;
        runs.push_back(id);
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-32s seed %-4llu best %.4f\n", label.c_str(),
                      static_cast<unsigned long long>(seed), report.best_test_accuracy);
        out << buf;
      }
    }
  }

  const ResultsTable table = build_results_table(runs);
  std::string text = render_text(table);
  std::map<std::string, std::pair<double, double>> range;  // method -> (min, max) of grid means
  for (const auto& row : table.rows) {
    const std::string& method = method_of_label[row.label];
    if (row.label == method) continue;
    auto [it, fresh] = range.try_emplace(method, row.mean, row.mean);
    if (!fresh) {
      it->second.first = std::min(it->second.first, row.mean);
      it->second.second = std::max(it->second.second, row.mean);
    }
  }
  for (const auto& [method, mm] : range) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "spread %s: %.4f (min %.4f, max %.4f)\n", method.c_str(), mm.second - mm.first,
                  mm.first, mm.second);
    text += buf;
  }
  out << "\n" << text;
  atomic_write_file(root / "results.txt", text);
  atomic_write_file(root / "results.csv", render_csv(table));
  out << "results: " << (root / "results.txt").string() << "\n";
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path dir = resolve_output(a.runs);
  const std::vector<RunRecord> runs = collect_runs(dir);
  if (runs.empty()) throw std::runtime_error("no completed runs found under " + dir.string());
  const ResultsTable table = build_results_table(runs);
  if (a.format == "csv") {
    out << render_csv(table);
  } else {
    out << render_text(table);
  }
  if (!a.csv.empty()) atomic_write_file(resolve_output(a.csv), render_csv(table));
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized label learning experiments: data generation, training, prior sweeps and reports."};
  app.name("qll");
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file ([generate], [train], ... sections)");
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.footer("Relative output paths are placed under $QLL_OUT when it is set.");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write base train/test and ambiguous train datasets");
  g->add_option("--c", gen.c, "Number of classes")->capture_default_str();
  g->add_option("--d", gen.d, "Feature dimension")->capture_default_str();
  g->add_option("--mix", gen.mix, "mixup|patchmix")->capture_default_str();
  g->add_option("--m", gen.m, "Instances mixed per example")->capture_default_str();
  g->add_option("--r", gen.r, "Multinomial trials (mixup) or blocks (patchmix)")->capture_default_str();
  g->add_option("--n", gen.n, "Training examples (base and ambiguous)")->capture_default_str();
  g->add_option("--n-test", gen.n_test, "Clean test examples")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--separation", gen.separation, "Distance between class means")->capture_default_str();
  g->add_option("--noise", gen.noise, "Per-coordinate noise sigma")->capture_default_str();
  g->add_flag("--reject-degenerate", gen.reject_degenerate, "Redraw groups whose soft label is one-hot");
  g->add_option("--out", gen.out, "Output directory")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model and write metrics.csv, model.qllm and run.meta");
  t->add_option("--train", tr.train_path, "Training dataset (.qll)")->required();
  t->add_option("--test", tr.test_path, "Clean test dataset (.qll)")->required();
  add_train_options(t, tr.opts, true);
  t->add_option("--out", tr.out, "Run directory (default runs/<method>-seed<seed>)");
  t->add_option("--label", tr.label, "Row label used by report (default: method)");
  t->add_option("--variant", tr.variant, "Column label used by report (default: from dataset metadata)");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Train over a prior grid and seeds; print a results table");
  s->add_option("--train", sw.train_path, "Training dataset (.qll)")->required();
  s->add_option("--test", sw.test_path, "Clean test dataset (.qll)")->required();
  s->add_option("--methods", sw.exp.methods, "Methods to run")->capture_default_str()->delimiter(',');
  s->add_option("--pi1-grid", sw.exp.pi1_grid)->capture_default_str()->delimiter(',');
  s->add_option("--pi2-grid", sw.exp.pi2_grid, "Values in (0, 1] or 'auto'")->capture_default_str()->delimiter(',');
  s->add_option("--seeds", sw.exp.seeds)->capture_default_str()->delimiter(',');
  add_train_options(s, sw.exp.train, false);
  s->add_option("--out", sw.out, "Sweep directory")->capture_default_str();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Aggregate run directories into mean ± std tables");
  r->add_option("--runs", rep.runs, "Directory searched recursively for runs")->capture_default_str();
  r->add_option("--csv", rep.csv, "Also write the CSV form to this file");
  r->add_option("--format", rep.format, "text|csv")->capture_default_str()->check(CLI::IsMember({"text", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const ThreadCountGuard guard(threads > 0 ? threads : max_threads());
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (s->parsed()) return cmd_sweep(sw, out);
    return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace qll
