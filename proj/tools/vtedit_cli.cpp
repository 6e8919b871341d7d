// SPDX-License-Identifier: Apache-2.0
// vtedit: dataset generation, statistics, benchmark export, evaluation and review.

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "vtedit/vtedit.hpp"

namespace {

using namespace vtedit;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void write_output(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  if (!path.empty()) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::config_invalid, path + " is not JSON");
    c = config_from_json(j);
  }
  apply_env_overrides(c);
  return c;
}

int report_run(const RunResult& r) {
  if (r.interrupted) {
    std::cout << "interrupted; checkpoint kept in " << r.run_dir.string() << " (use `vtedit resume`)\n";
    return 3;
  }
  std::size_t verified = 0, rejected = 0;
  for (const auto& rec : r.manifest->records) (rec.status == RecordStatus::verified ? verified : rejected)++;
  std::cout << "verified " << verified << ", rejected " << rejected << ", failed " << r.failures.size() << "\n";
  std::cout << "manifest " << (r.run_dir / "manifest.jsonl").string() << "\n";
  if (!r.failures.empty()) std::cout << "errors   " << (r.run_dir / "errors.jsonl").string() << "\n";
  return 0;
}

StopPolicy signal_stop() {
  return [](const std::string&, Stage) { return g_interrupted.load(); };
}

std::vector<double> parse_grid(const std::string& text) {
  // "lo:hi:step"
  std::vector<double> grid;
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(text);
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0 || hi < lo) {
    throw Error(Errc::invalid_argument, "sweep must be lo:hi:step");
  }
  for (int i = 0;; ++i) {
    const double t = lo + i * step;
    if (t > hi + 1e-9) break;
    grid.push_back(t);
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-driven garment editing dataset toolkit"};
  app.require_subcommand(1);

  // synth-catalog
  std::string sc_root = ".";
  CatalogOptions sc_opt;
  auto* synth = app.add_subcommand("synth-catalog", "Write a synthetic garment/person/parse catalog");
  synth->add_option("--root", sc_root, "Storage root")->required();
  synth->add_option("--count", sc_opt.count, "Number of garments");
  synth->add_option("--seed", sc_opt.seed, "Seed");
  synth->add_option("--width", sc_opt.width, "Image width");
  synth->add_option("--height", sc_opt.height, "Image height");

  // generate / resume
  std::string config_path, catalog_path, run_id, root_override;
  int workers = 0;
  auto* generate = app.add_subcommand("generate", "Run the four-stage generation pipeline");
  generate->add_option("--config", config_path, "Config JSON (VTEDIT_* variables override it)");
  generate->add_option("--root", root_override, "Storage root (overrides config)");
  generate->add_option("--catalog", catalog_path, "Catalog JSONL (default <root>/catalog.jsonl)");
  generate->add_option("--run-id", run_id, "Run id (default run-<seed>)");
  generate->add_option("--workers", workers, "Worker threads");

  auto* resume = app.add_subcommand("resume", "Complete an interrupted run");
  resume->add_option("--root", root_override, "Storage root")->required();
  resume->add_option("--run-id", run_id, "Run id")->required();
  resume->add_option("--workers", workers, "Worker threads");

  // stats
  std::string manifest_path, out_path;
  bool as_json = false;
  auto* stats = app.add_subcommand("stats", "Edit-type, category and split statistics of verified records");
  stats->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  stats->add_flag("--json", as_json, "Structured output");

  // assign-splits
  std::string splits_path, write_splits;
  double test_fraction = -1;
  std::uint64_t seed = 0;
  auto* splits = app.add_subcommand("assign-splits", "Assign train/test by garment identity");
  splits->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  auto* splits_in = splits->add_option("--splits", splits_path, "Existing split table (CSV)");
  auto* frac = splits->add_option("--test-fraction", test_fraction, "Build a new table with this test fraction");
  splits->add_option("--seed", seed, "Seed for a new table");
  splits->add_option("--write-splits", write_splits, "Where to save a newly built table");
  splits->add_option("--out", out_path, "Output manifest")->required();
  splits_in->excludes(frac);

  // export-tasks
  std::string kind_name;
  auto* tasks_cmd = app.add_subcommand("export-tasks", "Export benchmark tasks from the test split");
  tasks_cmd->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  tasks_cmd->add_option("--kind", kind_name, "vton_paired | vton_unpaired | vtoff")->required();
  tasks_cmd->add_option("--seed", seed, "Seed (unpaired pairing)");
  tasks_cmd->add_option("--out", out_path, "Output JSONL (default stdout)");

  // export-judge-records
  auto* judge_cmd = app.add_subcommand("export-judge-records", "Per-sample judge scores as JSONL");
  judge_cmd->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  judge_cmd->add_option("--out", out_path, "Output JSONL (default stdout)");

  // mock-predict
  std::string tasks_path, predictions, storage_root = ".", model = "oracle";
  auto* predict = app.add_subcommand("mock-predict", "Write reference predictions (oracle or identity model)");
  predict->add_option("--tasks", tasks_path, "Tasks JSONL")->required();
  predict->add_option("--root", storage_root, "Storage root");
  predict->add_option("--out", predictions, "Prediction directory")->required();
  predict->add_option("--model", model, "oracle | identity")->check(CLI::IsMember({"oracle", "identity"}));

  // evaluate
  std::string features_uri, features_id = "remote-features", perceptual_uri;
  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("evaluate", "Score predictions against benchmark tasks");
  eval->add_option("--tasks", tasks_path, "Tasks JSONL")->required();
  eval->add_option("--predictions", predictions, "Directory of <task_id>.ppm")->required();
  eval->add_option("--root", storage_root, "Storage root");
  eval->add_option("--workers", eval_opt.workers, "Worker threads");
  eval->add_option("--kid-subset", eval_opt.kid.subset_size, "KID subset size (0: all)");
  eval->add_option("--kid-subsets", eval_opt.kid.subsets, "KID subset count");
  eval->add_option("--features-uri", features_uri, "Feature service (default: built-in mock)");
  eval->add_option("--features-id", features_id, "Extractor id reported with FID/KID");
  eval->add_option("--perceptual-uri", perceptual_uri, "LPIPS/DISTS service (default: built-in mock)");
  eval->add_flag("--json", as_json, "Structured output");

  // calibrate
  std::string labels_path, sweep;
  double threshold = -1;
  auto* calib = app.add_subcommand("calibrate", "Judge-vs-human confusion matrix");
  calib->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  calib->add_option("--labels", labels_path, "Label log JSONL")->required();
  calib->add_option("--t", threshold, "Threshold (default: manifest threshold)");
  calib->add_option("--sweep", sweep, "Threshold grid lo:hi:step");
  calib->add_flag("--json", as_json, "Structured output");

  // serve-review
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* review = app.add_subcommand("serve-review", "Serve the review API");
  review->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  review->add_option("--labels", labels_path, "Label log JSONL")->required();
  review->add_option("--root", storage_root, "Storage root for image refs");
  review->add_option("--host", host, "Bind address");
  review->add_option("--port", port, "Port");

  // serve-mock
  auto* mock = app.add_subcommand("serve-mock", "Serve mock model services over HTTP");
  mock->add_option("--root", storage_root, "Shared storage root")->required();
  mock->add_option("--host", host, "Bind address");
  mock->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const auto cat = synth_catalog(sc_root, sc_opt);
      std::cout << "wrote " << cat.size() << " entries to " << (std::filesystem::path(sc_root) / "catalog.jsonl").string()
                << "\n";
      return 0;
    }

    if (*generate || *resume) {
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      if (*generate) {
        auto cfg = load_config(config_path);
        if (!root_override.empty()) cfg.storage_root = root_override;
        if (!run_id.empty()) cfg.run_id = run_id;
        if (workers > 0) cfg.workers = workers;
        const auto catalog = load_catalog(catalog_path.empty() ? cfg.storage_root / "catalog.jsonl"
                                                               : std::filesystem::path(catalog_path));
        Pipeline p(cfg, make_backends(cfg));
        return report_run(p.run(catalog, signal_stop()));
      }
      auto cfg = load_run_config(root_override, run_id);
      if (workers > 0) cfg.workers = workers;
      Pipeline p(cfg, make_backends(cfg));
      return report_run(p.resume(signal_stop()));
    }

    if (*stats) {
      const auto s = compute_stats(load_manifest(manifest_path));
      std::cout << (as_json ? to_json(s).dump(2) + "\n" : render_table(s));
      return 0;
    }

    if (*splits) {
      auto m = load_manifest(manifest_path);
      SplitTable table;
      if (!splits_path.empty()) {
        table = parse_split_table(read_file(splits_path));
      } else {
        if (test_fraction < 0) throw Error(Errc::invalid_argument, "give --splits or --test-fraction");
        std::set<std::string> ids;
        for (const auto& r : m.records) ids.insert(r.garment_identity);
        table = make_split_table(ids, test_fraction, seed);
        if (!write_splits.empty()) write_file_atomic(write_splits, serialize_split_table(table));
      }
      write_manifest(out_path, assign_splits(std::move(m), table));
      return 0;
    }

    if (*tasks_cmd) {
      const auto kind = task_kind_from_string(kind_name);
      if (!kind) throw Error(Errc::invalid_argument, "unknown task kind " + kind_name);
      write_output(out_path, serialize_tasks(export_benchmark_tasks(load_manifest(manifest_path), *kind, seed)));
      return 0;
    }

    if (*judge_cmd) {
      write_output(out_path, export_judge_records(load_manifest(manifest_path)));
      return 0;
    }

    if (*predict) {
      const StorageRoot storage{storage_root};
      const auto tasks = parse_tasks(read_file(tasks_path));
      std::filesystem::create_directories(predictions);
      for (const auto& t : tasks) {
        const auto& src = model == "oracle" ? t.ground_truth : t.person_input;
        write_ppm(prediction_path(predictions, t.task_id), read_ppm(storage.resolve(src)));
      }
      std::cout << "wrote " << tasks.size() << " predictions to " << predictions << "\n";
      return 0;
    }

    if (*eval) {
      auto backends = make_mock_eval_backends();
      if (!features_uri.empty()) {
        ServiceEndpoint ep;
        ep.base_uri = features_uri;
        backends.features = std::make_shared<HttpFeatureExtractor>(ep, features_id);
      }
      if (!perceptual_uri.empty()) {
        ServiceEndpoint ep;
        ep.base_uri = perceptual_uri;
        backends.perceptual = std::make_shared<HttpPerceptual>(ep);
      }
      const auto report =
          evaluate(parse_tasks(read_file(tasks_path)), predictions, StorageRoot{storage_root}, backends, eval_opt);
      std::cout << (as_json ? to_json(report).dump(2) + "\n" : render_table(report));
      return 0;
    }

    if (*calib) {
      const auto m = load_manifest(manifest_path);
      const LabelLog log(labels_path);
      const auto scores = verifier_scores(m);
      if (!sweep.empty()) {
        nlohmann::json all = nlohmann::json::array();
        for (const auto& r : sweep_threshold(log.labels(), scores, parse_grid(sweep))) {
          if (as_json) {
            all.push_back(to_json(r));
          } else {
            std::cout << render_table(r) << "\n";
          }
        }
        if (as_json) std::cout << all.dump(2) << "\n";
        return 0;
      }
      const auto r = calibrate(log.labels(), scores, threshold < 0 ? m.threshold : threshold);
      std::cout << (as_json ? to_json(r).dump(2) + "\n" : render_table(r));
      return 0;
    }

    if (*review) {
      ReviewService svc(load_manifest(manifest_path), labels_path, StorageRoot{storage_root});
      ReviewServer server(svc);
      std::cout << "review API on http://" << host << ":" << port << " (" << svc.pending().size() << " pending)\n"
                << std::flush;
      server.serve(host, port);
      return 0;
    }

    if (*mock) {
      const StorageRoot storage{storage_root};
      MockServiceServer server(storage, make_mock_backends(storage, storage.resolve("attributes")));
      server.start(host, port);
      std::cout << "mock services on " << server.base_uri() << "\n" << std::flush;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      server.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
