#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vibrodiag/classifiers.hpp"
#include "vibrodiag/error.hpp"
#include "vibrodiag/eval.hpp"
#include "vibrodiag/features.hpp"
#include "vibrodiag/ingest.hpp"
#include "vibrodiag/parallel.hpp"
#include "vibrodiag/spectrum.hpp"
#include "vibrodiag/synth.hpp"

namespace vibrodiag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

enum class NormalizeMode { Column, Spectrum, None };

/// Options of the extract stage.
struct ExtractConfig {
  fs::path data_dir;
  std::optional<fs::path> manifest;
  SpectrumOptions spectrum;
  FeatureOptions features;
  NormalizeMode normalize = NormalizeMode::Column;
  bool dataset_checks = true;
};

struct ExtractResult {
  FeatureMatrix matrix;  // after drop_missing (and normalization)
  std::size_t records = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

/// Dataset tree -> 27-dim feature matrix: parse, FFT, describe, drop rows
/// with missing values, then normalize per the configured mode.
inline ExtractResult extract_dataset(const ExtractConfig& config) {
  const DatasetLayout layout = config.manifest ? load_manifest(*config.manifest) : DatasetLayout::defaults();
  const auto entries = scan_dataset(config.data_dir, layout);

  std::vector<FeatureVector> rows(entries.size());
  std::vector<std::vector<std::string>> warnings(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto record = parse_record(entries[i].path, entries[i].label);
    if (config.dataset_checks) warnings[i] = dataset_record_warnings(record);
    auto spec = to_spectrum(record, config.spectrum);
    if (config.normalize == NormalizeMode::Spectrum) minmax_spectrum(spec);
    rows[i] = extract_features(spec, config.features, entries[i].label, entries[i].path.generic_string());
  });

  ExtractResult result;
  result.records = entries.size();
  for (auto& w : warnings) result.warnings.insert(result.warnings.end(), w.begin(), w.end());
  FeatureMatrix all;
  all.rows = std::move(rows);
  auto [kept, dropped] = drop_missing(all);
  result.dropped = dropped;
  result.matrix = config.normalize == NormalizeMode::Column ? normalize_minmax(kept) : std::move(kept);
  return result;
}

inline FeatureMatrix load_features(const fs::path& path) {
  return features_from_csv(read_file(path), path.string());
}

/// Feature CSV -> classifier input, refusing rows with missing values.
inline LabeledData load_labeled(const fs::path& path) {
  auto matrix = load_features(path);
  for (const auto& row : matrix.rows)
    if (row.filterable())
      throw Error(ErrorCode::NonFiniteInput, path.string() + " contains rows with missing values");
  if (matrix.rows.empty()) throw Error(ErrorCode::EmptyMatrix, path.string() + " has no rows");
  return to_labeled(matrix);
}

namespace detail {

inline SplitPlan parse_mode(const std::string& mode, std::size_t folds, std::uint64_t seed) {
  if (mode == "holdout" || mode == "1fold") return SplitPlan::holdout(0.2, seed);
  if (mode == "5fold") return SplitPlan::kfold(5, seed);
  if (mode == "kfold") return SplitPlan::kfold(folds, seed);
  throw CLI::ValidationError("--mode", "expected holdout, 1fold, 5fold or kfold");
}

struct ClassifierFlags {
  std::string kind = "svm";
  double c = 1.0;
  std::optional<double> gamma;
  std::size_t k = 5;
  double var_smoothing = 1e-9;

  void add(CLI::App* app) {
    app->add_option("--clf", kind, "Classifier: svm, knn or gnb")
        ->check(CLI::IsMember({"svm", "knn", "gnb"}))
        ->capture_default_str();
    app->add_option("--c", c, "SVM regularization C")->capture_default_str();
    app->add_option("--gamma", gamma, "SVM RBF gamma (default 1/(d*Var(X)))");
    app->add_option("--k", k, "KNN neighbour count")->capture_default_str();
    app->add_option("--var-smoothing", var_smoothing, "GNB variance smoothing factor")
        ->capture_default_str();
  }

  ClassifierSpec spec() const {
    ClassifierSpec s;
    s.kind = *parse_kind(kind);
    s.svm_c = c;
    s.svm_gamma = gamma;
    s.knn_k = k;
    s.gnb_smoothing = var_smoothing;
    return s;
  }
};

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Runs one command line. Returns 0 on success, 1 on data errors (message
/// names the error kind), 2 on usage errors.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"vibrodiag: vibration fault diagnosis pipeline", "vibrodiag"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset tree");
  SynthConfig synth_config;
  fs::path synth_out;
  std::optional<fs::path> synth_manifest;
  synth->add_option("--out", synth_out, "Output dataset root")->required();
  synth->add_option("--per-class", synth_config.per_class_count, "Records per condition")
      ->capture_default_str();
  synth->add_option("--rotation-hz", synth_config.rotation_hz)->capture_default_str();
  synth->add_option("--sample-rate", synth_config.sample_rate_hz)->capture_default_str();
  synth->add_option("--duration", synth_config.duration_s)->capture_default_str();
  synth->add_option("--noise-std", synth_config.noise_std, "Noise std in g")->capture_default_str();
  synth->add_option("--manifest", synth_manifest, "condition=dir mapping file");
  add_seed(synth);

  // extract
  auto* extract = app.add_subcommand("extract", "Dataset tree -> feature CSV");
  ExtractConfig extract_config;
  fs::path extract_out;
  std::optional<fs::path> norm_out;
  std::string shape_mode = "reciprocal", normalize_mode = "column";
  bool no_unit_conversion = false, no_checks = false;
  extract->add_option("--data", extract_config.data_dir, "Dataset root")->required();
  extract->add_option("--out", extract_out, "Feature CSV to write")->required();
  extract->add_option("--manifest", extract_config.manifest, "condition=dir mapping file");
  extract->add_flag("--remove-dc", extract_config.spectrum.remove_dc, "Subtract the mean before the FFT");
  extract->add_flag("--no-unit-conversion", no_unit_conversion, "Keep g instead of m/s^2");
  extract->add_option("--shape-factor", shape_mode, "reciprocal (1/mean) or conventional (rms/mean|x|)")
      ->check(CLI::IsMember({"reciprocal", "conventional"}))
      ->capture_default_str();
  extract->add_option("--normalize", normalize_mode, "column, spectrum or none")
      ->check(CLI::IsMember({"column", "spectrum", "none"}))
      ->capture_default_str();
  extract->add_option("--norm-out", norm_out, "Write the per-column min/max here");
  extract->add_flag("--no-dataset-checks", no_checks, "Skip the 20 kHz / 5 s sanity warnings");

  // train
  auto* train = app.add_subcommand("train", "Feature CSV -> model file");
  fs::path train_features, train_out;
  detail::ClassifierFlags train_clf;
  train->add_option("--features", train_features)->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train_clf.add(train);

  const CLI::IsMember kModes({"holdout", "1fold", "5fold", "kfold"});

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Cross-validate one classifier, or score a saved model");
  fs::path eval_features;
  std::optional<fs::path> eval_out, eval_model;
  std::string eval_mode = "5fold";
  std::size_t eval_folds = 5;
  bool eval_strict = false;
  detail::ClassifierFlags eval_clf;
  evaluate_cmd->add_option("--features", eval_features)->required();
  evaluate_cmd->add_option("--out", eval_out, "Report CSV to write");
  evaluate_cmd->add_option("--model", eval_model, "Score this saved model on all rows instead");
  evaluate_cmd->add_option("--mode", eval_mode, "holdout|1fold|5fold|kfold")
      ->check(kModes)
      ->capture_default_str();
  evaluate_cmd->add_option("--folds", eval_folds, "k for --mode kfold")->capture_default_str();
  evaluate_cmd->add_flag("--strict-normalization", eval_strict, "Min-max on training splits only");
  eval_clf.add(evaluate_cmd);
  add_seed(evaluate_cmd);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid search one classifier's main parameter");
  fs::path sweep_features;
  std::optional<fs::path> sweep_out;
  std::string sweep_mode = "holdout";
  std::size_t sweep_folds = 5, sweep_max = 100;
  bool sweep_strict = false;
  std::string sweep_kind = "svm";
  sweep->add_option("--features", sweep_features)->required();
  sweep->add_option("--out", sweep_out, "Curve CSV to write (param,train_accuracy,eval_accuracy)");
  sweep->add_option("--clf", sweep_kind)->check(CLI::IsMember({"svm", "knn", "gnb"}))->capture_default_str();
  sweep->add_option("--mode", sweep_mode, "holdout|1fold|5fold|kfold")->check(kModes)->capture_default_str();
  sweep->add_option("--folds", sweep_folds)->capture_default_str();
  sweep->add_option("--max-param", sweep_max, "Grid end: C or K up to N, smoothing down to 1e-N")
      ->capture_default_str();
  sweep->add_flag("--strict-normalization", sweep_strict);
  add_seed(sweep);

  // report
  auto* report = app.add_subcommand("report", "Sweep and evaluate all classifiers in both modes");
  fs::path report_features, report_dir;
  std::size_t report_max = 100;
  report->add_option("--features", report_features)->required();
  report->add_option("--out-dir", report_dir, "Directory for reports and curves")->required();
  report->add_option("--max-param", report_max)->capture_default_str();
  add_seed(report);

  // spectrum-dump
  auto* dump = app.add_subcommand("spectrum-dump", "One record -> spectrum CSV");
  fs::path dump_record, dump_out;
  double dump_max_hz = 0.0;
  bool dump_remove_dc = false, dump_no_units = false;
  dump->add_option("--record", dump_record, "Record CSV")->required();
  dump->add_option("--out", dump_out, "Spectrum CSV to write")->required();
  dump->add_option("--max-hz", dump_max_hz, "Keep bins up to this frequency (0 = all)");
  dump->add_flag("--remove-dc", dump_remove_dc);
  dump->add_flag("--no-unit-conversion", dump_no_units);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*synth) {
      synth_config.seed = seed;
      const auto layout = synth_manifest ? load_manifest(*synth_manifest) : DatasetLayout::defaults();
      const auto paths = write_synthetic_dataset(synth_out, synth_config, layout);
      out << "wrote " << paths.size() << " records to " << synth_out.string() << "\n";
    } else if (*extract) {
      extract_config.spectrum.unit_conversion = !no_unit_conversion;
      extract_config.features.shape_factor =
          shape_mode == "reciprocal" ? ShapeFactorMode::Reciprocal : ShapeFactorMode::Conventional;
      extract_config.normalize = normalize_mode == "column"     ? NormalizeMode::Column
                                 : normalize_mode == "spectrum" ? NormalizeMode::Spectrum
                                                                : NormalizeMode::None;
      extract_config.dataset_checks = !no_checks;
      const auto result = extract_dataset(extract_config);
      constexpr std::size_t kMaxWarnings = 10;
      for (std::size_t i = 0; i < result.warnings.size() && i < kMaxWarnings; ++i)
        err << "warning: " << result.warnings[i] << "\n";
      if (result.warnings.size() > kMaxWarnings)
        err << "warning: " << result.warnings.size() - kMaxWarnings << " more warnings suppressed\n";
      write_file(extract_out, features_to_csv(result.matrix));
      if (norm_out) write_file(*norm_out, normalization_to_csv(result.matrix.normalization));
      out << "records: " << result.records << "\nrows: " << result.matrix.size()
          << "\ndropped_count: " << result.dropped << "\nelapsed_s: " << detail::seconds_since(start)
          << "\n";
    } else if (*train) {
      const auto data = load_labeled(train_features);
      const auto model = fit(train_clf.spec(), data.features, data.labels);
      write_file(train_out, save_model(model));
      if (const auto* m = std::get_if<svm::Model>(&model)) {
        for (const auto& bm : m->machines)
          if (!bm.converged)
            err << "warning: ConvergenceWarning: SMO hit its iteration cap for classes " << bm.positive
                << "/" << bm.negative << "\n";
      }
      out << "trained " << describe(train_clf.spec()) << " on " << data.labels.size() << " rows\n";
    } else if (*evaluate_cmd) {
      const auto data = load_labeled(eval_features);
      EvalReport rep;
      if (eval_model) {
        const auto model = load_model(read_file(*eval_model));
        const auto predicted = predict(model, data.features);
        rep.confusion = ConfusionMatrix(vibrodiag::detail::class_count(data.labels));
        rep.confusion.add(data.labels, predicted);
        rep.fold_accuracies = {accuracy_percent(data.labels, predicted)};
        rep.fold_train_accuracies = {std::numeric_limits<double>::quiet_NaN()};
        for (std::size_t c = 0; c < rep.confusion.classes(); ++c)
          rep.per_class_recall.push_back(rep.confusion.recall(c));
        rep.weighted_accuracy = rep.confusion.weighted_accuracy();
        rep.spec.kind = model_kind(model);
      } else {
        const auto plan = detail::parse_mode(eval_mode, eval_folds, seed);
        rep = evaluate(eval_clf.spec(), data, plan, EvalOptions{eval_strict});
      }
      if (eval_out) write_file(*eval_out, report_csv(rep));
      out << "classifier: " << describe(rep.spec) << "\n";
      if (!eval_model) out << "mode: " << describe(rep.plan) << " seed=" << rep.plan.seed << "\n";
      out << "fold_accuracies:";
      for (double a : rep.fold_accuracies) out << " " << text::format_double(a);
      out << "\nmean_fold_accuracy: " << text::format_double(rep.mean_fold_accuracy())
          << "\nweighted_accuracy: " << text::format_double(rep.weighted_accuracy) << "\n"
          << "confusion (rows true, row-normalized):\n"
          << format_confusion(rep.confusion);
    } else if (*sweep) {
      const auto data = load_labeled(sweep_features);
      const auto kind = *parse_kind(sweep_kind);
      std::vector<ClassifierSpec> grid;
      switch (kind) {
        case ClassifierKind::Svm: grid = svm_grid(sweep_max); break;
        case ClassifierKind::Knn: grid = knn_grid(sweep_max); break;
        case ClassifierKind::Gnb: grid = gnb_grid(static_cast<int>(sweep_max)); break;
      }
      const auto plan = detail::parse_mode(sweep_mode, sweep_folds, seed);
      const auto result = grid_search(grid, data, plan, EvalOptions{sweep_strict});
      if (sweep_out) write_file(*sweep_out, curve_csv(result));
      out << "best: " << describe(result.best) << "\nbest_param: " << text::format_double(result.curve[result.best_index].param)
          << "\nbest_eval_accuracy: " << text::format_double(result.curve[result.best_index].eval_accuracy)
          << "\nelapsed_s: " << detail::seconds_since(start) << "\n";
    } else if (*report) {
      const auto data = load_labeled(report_features);
      fs::create_directories(report_dir);
      std::string table = "classifier,best_param_1fold,accuracy_1fold,best_param_5fold,accuracy_5fold\n";
      out << "classifier   1-fold WA   5-fold WA\n";
      for (auto kind : {ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Gnb}) {
        std::vector<ClassifierSpec> grid;
        switch (kind) {
          case ClassifierKind::Svm: grid = svm_grid(report_max); break;
          case ClassifierKind::Knn: grid = knn_grid(report_max); break;
          case ClassifierKind::Gnb: grid = gnb_grid(static_cast<int>(report_max)); break;
        }
        const std::string name(kind_name(kind));
        table += name;
        double accs[2];
        int slot = 0;
        for (const auto& [mode_name, plan] :
             {std::pair{std::string("1fold"), SplitPlan::holdout(0.2, seed)},
              std::pair{std::string("5fold"), SplitPlan::kfold(5, seed)}}) {
          const auto gs = grid_search(grid, data, plan);
          const auto rep = evaluate(gs.best, data, plan);
          write_file(report_dir / ("curve_" + name + "_" + mode_name + ".csv"), curve_csv(gs));
          write_file(report_dir / ("report_" + name + "_" + mode_name + ".csv"), report_csv(rep));
          table += "," + text::format_double(gs.curve[gs.best_index].param) + "," +
                   text::format_double(rep.weighted_accuracy);
          accs[slot++] = rep.weighted_accuracy;
          out << name << " " << mode_name << " best " << describe(gs.best) << "\n"
              << format_confusion(rep.confusion);
        }
        table += "\n";
        char line[96];
        std::snprintf(line, sizeof line, "%-10s %10.3f %11.3f\n", name.c_str(), accs[0], accs[1]);
        out << line;
      }
      write_file(report_dir / "accuracy_table.csv", table);
      out << "elapsed_s: " << detail::seconds_since(start) << "\n";
    } else if (*dump) {
      const auto record = parse_record(dump_record, ConditionLabel::Normal);
      SpectrumOptions opts;
      opts.remove_dc = dump_remove_dc;
      opts.unit_conversion = !dump_no_units;
      const auto spec = to_spectrum(record, opts);
      write_file(dump_out, spectrum_csv(spec, dump_max_hz));
      out << "bins: " << spec.bins() << "\nbin_hz: " << text::format_double(spec.bin_hz) << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: Io: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace vibrodiag::cli
