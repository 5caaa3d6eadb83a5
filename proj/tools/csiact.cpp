// csiact: command-line front end for dataset synthesis, training,
// evaluation, comparison and serving.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "csiact/experiment.hpp"
#include "csiact/inference.hpp"
#include "csiact/model_store.hpp"
#include "csiact/report.hpp"
#include "csiact/service.hpp"
#include "csiact/synth.hpp"

namespace fs = std::filesystem;
using namespace csiact;

namespace {

const CLI::Range kCount(1, 1000000);

struct Globals {
  std::uint64_t seed = 42;
  fs::path out_dir = ".";
  bool quiet = false;
};

struct DataFlags {
  fs::path dir;
  fs::path features;
  fs::path labels;

  void add_to(CLI::App* cmd) {
    auto* d = cmd->add_option("--data", dir, "Directory of sample CSV files");
    auto* f = cmd->add_option("--features", features, "Feature matrix file (one row per line)");
    auto* l = cmd->add_option("--labels", labels, "Label file matching --features");
    f->needs(l);
    l->needs(f);
    d->excludes(f);
    f->excludes(d);
  }

  DesignMatrix load() const {
    if (!features.empty()) return ingest_feature_matrix(features, labels);
    if (dir.empty()) throw CLI::RequiredError("--data or --features/--labels");
    const auto samples = load_dataset(dir);
    if (samples.empty()) throw Error(Errc::EmptyInput, "no sample CSV files in " + dir.string());
    return assemble_design_matrix(samples);
  }
};

struct HyperFlags {
  ClassifierSpec spec;
  void add_to(CLI::App* cmd) {
    cmd->add_option("--trees", spec.forest.n_trees, "Random forest size")->capture_default_str()->check(kCount);
    cmd->add_option("--knn-k", spec.knn.k, "KNN neighbours")->capture_default_str()->check(kCount);
    cmd->add_option("--hidden", spec.mlp.hidden_size, "MLP hidden units")->capture_default_str()->check(kCount);
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir, ec)) throw Error(Errc::IoFailure, "cannot create directory " + dir.string());
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_file_atomic(path, text);
}

std::string results_text(const ExperimentResult& r) {
  std::string out = format_results_table(r);
  for (const auto& c : r.classifiers) {
    out += "\n" + std::string(display_name(c.kind)) +
           (r.protocol.type == Protocol::Type::CrossValidation ? " (summed over folds)\n" : "\n");
    out += format_confusion(c.confusion);
  }
  return out;
}

void run_evaluation(const Globals& g, const ExperimentResult& result, const fs::path& report_path) {
  const auto report = report_path.empty()
                          ? g.out_dir / (result.protocol.type == Protocol::Type::CrossValidation ? "report-cv.json"
                                                                                                  : "report-split.json")
                          : report_path;
  auto table_path = report;
  table_path.replace_extension(".txt");
  write_text_file(report, format_report_json(result));
  write_text_file(table_path, results_text(result));
  std::cout << format_results_table(result);
  std::cout << "report: " << report.string() << "\n";
  std::cout << "table: " << table_path.string() << "\n";
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected HOST:PORT");
  const auto host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--listen", "port must be a number");
  }
  if (host.empty() || port < 0 || port > 65535) throw CLI::ValidationError("--listen", "expected HOST:PORT");
  return {host, port};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wi-Fi CSI activity recognition: synthesize, train, evaluate, serve"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for reports and generated files")->capture_default_str();
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress output");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic sample dataset");
  int n_per_class = 30;
  fs::path synth_out;
  synth::SynthConfig synth_cfg;
  std::optional<std::uint64_t> synth_seed;
  synth_cmd->add_option("--n-per-class", n_per_class, "Samples per activity")->capture_default_str()->check(kCount);
  synth_cmd->add_option("--out", synth_out, "Output directory (default OUT_DIR/dataset)");
  synth_cmd->add_option("--sep", synth_cfg.class_separation, "Class separation in [0, 1]")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--noise", synth_cfg.noise_sigma, "Noise standard deviation")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--amplitude", synth_cfg.motion_amplitude, "Motion amplitude")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--trace-length", synth_cfg.trace_length, "Nominal trace length")
      ->capture_default_str()
      ->check(CLI::Range(16, 1000000));
  synth_cmd->add_option("--seed", synth_seed, "Overrides the global --seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a classifier on a dataset and save it");
  DataFlags train_data;
  HyperFlags train_hyper;
  std::string algo = "ensemble";
  fs::path model_out;
  std::optional<std::uint64_t> train_seed;
  train_data.add_to(train_cmd);
  train_hyper.add_to(train_cmd);
  train_cmd->add_option("--algo", algo, "Classifier kind")
      ->capture_default_str()
      ->check(CLI::IsMember({"forest", "knn", "svm", "mlp", "ensemble"}));
  train_cmd->add_option("--out", model_out, "Model file (default OUT_DIR/<algo>.csimodel)");
  train_cmd->add_option("--seed", train_seed, "Overrides the global --seed");

  // eval-cv / eval-split
  auto* cv_cmd = app.add_subcommand("eval-cv", "k-fold cross validation of all classifiers");
  DataFlags cv_data;
  HyperFlags cv_hyper;
  int k = 10;
  fs::path cv_report;
  std::optional<std::uint64_t> cv_seed;
  cv_data.add_to(cv_cmd);
  cv_hyper.add_to(cv_cmd);
  cv_cmd->add_option("--k", k, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  cv_cmd->add_option("--report", cv_report, "Report file (default OUT_DIR/report-cv.json)");
  cv_cmd->add_option("--seed", cv_seed, "Overrides the global --seed");

  auto* split_cmd = app.add_subcommand("eval-split", "Single seeded train/test split of all classifiers");
  DataFlags split_data;
  HyperFlags split_hyper;
  double test_fraction = 0.3;
  fs::path split_report;
  std::optional<std::uint64_t> split_seed;
  split_data.add_to(split_cmd);
  split_hyper.add_to(split_cmd);
  split_cmd->add_option("--test-fraction", test_fraction, "Fraction of rows held out")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--report", split_report, "Report file (default OUT_DIR/report-split.json)");
  split_cmd->add_option("--seed", split_seed, "Overrides the global --seed");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Side-by-side accuracy of two reports");
  fs::path report_a, report_b, compare_out;
  compare_cmd->add_option("--report-a", report_a, "First report")->required();
  compare_cmd->add_option("--report-b", report_b, "Second report")->required();
  compare_cmd->add_option("--out", compare_out, "Comparison file (default OUT_DIR/comparison.json)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP classification service");
  ServiceConfig scfg;
  std::string listen = "127.0.0.1:8420";
  std::optional<fs::path> report_dir;
  long min_loading_ms = 0;
  serve_cmd->add_option("--model", scfg.initial_model, "Model to activate at start")->envname("CSIACT_MODEL");
  serve_cmd->add_option("--models", scfg.model_dir, "Model directory (default: the --model directory)")
      ->envname("CSIACT_MODEL_DIR");
  serve_cmd->add_option("--captures", scfg.capture_dir, "Drop directory of live captures")
      ->envname("CSIACT_CAPTURE_DIR");
  serve_cmd->add_option("--reports", report_dir, "Report directory (default OUT_DIR)")->envname("CSIACT_REPORT_DIR");
  serve_cmd->add_option("--static", scfg.static_dir, "Static assets for the console")->envname("CSIACT_STATIC_DIR");
  serve_cmd->add_option("--listen", listen, "HOST:PORT")->capture_default_str()->envname("CSIACT_LISTEN");
  serve_cmd->add_option("--expected-width", scfg.expected_width, "Refuse models of another feature width (0: any)")
      ->capture_default_str();
  serve_cmd->add_option("--min-loading-ms", min_loading_ms, "Minimum time a job stays in loading")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Classify one capture file with a saved model");
  fs::path classify_model, classify_sample;
  classify_cmd->add_option("--model", classify_model, "Model file")->required();
  classify_cmd->add_option("--sample", classify_sample, "Sample CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto progress = [&](const std::string& msg) {
    if (!g.quiet) std::cerr << msg << "\n";
  };

  try {
    if (*synth_cmd) {
      synth_cfg.seed = synth_seed.value_or(g.seed);
      const auto out = synth_out.empty() ? g.out_dir / "dataset" : synth_out;
      std::cout << "seed: " << synth_cfg.seed << "\n";
      const auto manifest = synth::generate_dataset(synth_cfg, n_per_class, out);
      std::cout << "samples: " << manifest.files.size() << "\n";
      std::cout << "manifest: " << manifest.manifest_path.string() << "\n";
    } else if (*train_cmd) {
      const auto seed = train_seed.value_or(g.seed);
      std::cout << "seed: " << seed << "\n";
      const auto dm = train_data.load();
      auto spec = train_hyper.spec;
      spec.kind = *parse_model_kind(algo);
      progress("training " + algo + " on " + std::to_string(dm.size()) + " rows x " + std::to_string(dm.width()));
      auto model = fit(spec, dm, seed);
      const double acc = accuracy_on(model, dm);
      const auto out = model_out.empty() ? g.out_dir / (algo + std::string(kModelExtension)) : model_out;
      if (out.has_parent_path()) ensure_dir(out.parent_path());
      save_model(make_envelope(std::move(model), dm), out);
      std::cout << "training accuracy: " << format_fixed(acc * 100.0) << " %\n";
      std::cout << "model: " << out.string() << "\n";
    } else if (*cv_cmd) {
      const auto seed = cv_seed.value_or(g.seed);
      std::cout << "seed: " << seed << "\n";
      const auto dm = cv_data.load();
      const auto result = run_cross_validation(dm, k, cv_hyper.spec, default_kinds(dm), seed, progress);
      run_evaluation(g, result, cv_report);
    } else if (*split_cmd) {
      const auto seed = split_seed.value_or(g.seed);
      std::cout << "seed: " << seed << "\n";
      const auto dm = split_data.load();
      const auto result = run_train_test_split(dm, test_fraction, split_hyper.spec, default_kinds(dm), seed, progress);
      run_evaluation(g, result, split_report);
    } else if (*compare_cmd) {
      const auto cmp = compare_datasets(load_report(report_a), load_report(report_b));
      const auto out = compare_out.empty() ? g.out_dir / "comparison.json" : compare_out;
      write_text_file(out, to_json(cmp).dump(2) + "\n");
      std::cout << format_comparison_table(cmp);
      std::cout << "comparison: " << out.string() << "\n";
    } else if (*serve_cmd) {
      std::tie(scfg.host, scfg.port) = parse_listen(listen);
      scfg.report_dir = report_dir.value_or(g.out_dir);
      scfg.min_loading = std::chrono::milliseconds(min_loading_ms);
      scfg.synthetic.seed = g.seed;
      std::error_code ec;
      if (!scfg.capture_dir.empty() && !fs::is_directory(scfg.capture_dir, ec))
        throw Error(Errc::IoFailure, "capture directory " + scfg.capture_dir.string() + " does not exist");
      // SIGINT/SIGTERM are blocked in every thread and collected by one waiter,
      // which stops the server from ordinary (non-handler) context.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

      std::unique_ptr<Service> service;
      try {
        service = std::make_unique<Service>(scfg);
      } catch (const ServiceError& e) {
        throw Error(Errc::CorruptModel, e.what());
      }
      const int port = service->bind();
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        service->stop();
      });
      std::cout << "listening on http://" << scfg.host << ":" << port << "\n";
      if (!service->active_model_name().empty()) std::cout << "active model: " << service->active_model_name() << "\n";
      std::cout << std::flush;
      service->serve();
      // serve() only returns once stop() ran, so the waiter has finished.
      waiter.join();
    } else if (*classify_cmd) {
      const auto env = load_model(classify_model);
      const auto p = classify_capture(env.model, load_sample_csv(classify_sample));
      std::cout << p.label << "\n";
      if (!g.quiet) {
        std::cout << "votes:";
        for (const auto& [label, n] : p.per_row_votes) std::cout << " " << label << "=" << n;
        std::cout << "\nrow agreement: " << format_fixed(p.row_agreement, 4) << "\n";
      }
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
