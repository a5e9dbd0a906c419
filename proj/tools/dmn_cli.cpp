// dmn: command-line front end for building, training, evaluating and
// benchmarking deep map networks.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmn/dmn.hpp"
#include "dmn/json_io.hpp"

namespace fs = std::filesystem;
using namespace dmn;

namespace {

struct Globals {
  std::string config;
  int threads = 0;
  std::uint64_t seed = 0;
  double clip_ratio = kDefaultClipRatio;
};

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void log(const std::string& msg) { std::cerr << "dmn: " << msg << '\n'; }

// Missing required options are reported after config merging, so a config
// file can supply them.
void require(const CLI::App& sub, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (sub.get_option(n)->count() == 0)
      throw ConfigError(std::string(sub.get_name()) + ": " + n + " is required");
}

// Applies `--config` values to every option the command line left unset.
void merge_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") throw ConfigError("config files cannot nest \"config\"");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw ConfigError("config key '" + key + "' is not an option of " + sub.get_name());
    if (opt->count() > 0) continue;  // explicit argv wins
    std::vector<std::string> results;
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number()) return fmt(v.get<double>());
      throw ConfigError("config key '" + key + "' has an unsupported value");
    };
    if (value.is_array())
      for (const auto& v : value) results.push_back(scalar(v));
    else
      results.push_back(scalar(value));
    if (opt->get_type_size_max() == 0 && value.is_boolean() && !value.get<bool>()) continue;
    opt->add_result(results);
    opt->run_callback();
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_atomically(path, [&](std::ostream& os) { os << text; });
}

AnchorSet pick_anchors(const LabeledDataset& data, Eigen::Index count, std::uint64_t seed) {
  if (count < 2) throw ConfigError("--num-anchors must be >= 2");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  if (count < data.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(count));
    std::sort(rows.begin(), rows.end());
  }
  const LabeledDataset sub = data.subset(rows);
  return AnchorSet{sub.features, sub.ids};
}

DknArchitecture load_or_default_arch(const std::string& path, const Eigen::MatrixXd& anchors,
                                     std::uint64_t seed) {
  return path.empty() ? default_architecture(anchors, seed) : architecture_from_json(read_json_file(path));
}

void print_clip_report(const std::vector<UnitBuildReport>& units) {
  std::cerr << "layer\tunit\tretained\tdiscarded_mass\n";
  for (const auto& u : units)
    std::cerr << u.layer << '\t' << u.unit << '\t' << u.clip.retained << '\t'
              << fmt(u.clip.discarded_mass) << '\n';
}

std::string format_log(const std::vector<IterationLog>& log) {
  std::string out = "iteration\tE\thinge\tregularizer\tms\n";
  for (const auto& row : log)
    out += std::to_string(row.iteration) + '\t' + fmt(row.objective.total) + '\t' +
           fmt(row.objective.hinge) + '\t' + fmt(row.objective.regularizer) + '\t' +
           fmt(row.wall_ms) + '\n';
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep map networks: explicit deep kernel maps, end-to-end training, benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON file of option values; command-line values win");
  app.add_option("--threads", g.threads, "Cap on worker threads (0 = library default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--clip-ratio", g.clip_ratio, "Drop eigenvalues <= ratio * lambda_max")
      ->check(CLI::PositiveNumber);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a seeded synthetic multi-label dataset");
  SyntheticSpec spec;
  std::string gen_out;
  bool gen_raw = false;
  gen->add_option("--out", gen_out, "Dataset file to write");
  gen->add_option("--n", spec.n, "Samples");
  gen->add_option("--d", spec.d, "Feature dimension");
  gen->add_option("--K", spec.K, "Concepts");
  gen->add_option("--clusters", spec.clusters_per_class, "Cluster centers per concept");
  gen->add_option("--label-noise", spec.label_noise, "Label flip probability");
  gen->add_option("--feature-noise", spec.feature_noise, "Gaussian feature noise");
  gen->add_flag("--raw", gen_raw, "Keep raw features instead of L1-normalized histograms");

  // build-dmn
  auto* build = app.add_subcommand("build-dmn", "Build a DMN from anchor samples");
  std::string build_data, build_out, build_arch;
  Eigen::Index build_anchors = 100;
  build->add_option("--data", build_data, "Dataset whose features supply the anchors");
  build->add_option("--out", build_out, "Model file to write");
  build->add_option("--arch", build_arch, "Architecture JSON (default: 4 kernels, tanh 8, exp 1)");
  build->add_option("--num-anchors", build_anchors, "Anchor count N (seeded subset of the data)");

  // train
  auto* tr = app.add_subcommand("train", "End-to-end training of a built DMN");
  std::string tr_model, tr_data, tr_out, tr_log;
  TrainConfig tcfg;
  std::vector<double> tr_c, tr_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  int tr_folds = 3;
  tr->add_option("--model", tr_model, "Built model file");
  tr->add_option("--data", tr_data, "Training dataset");
  tr->add_option("--out", tr_out, "Trained model file to write");
  tr->add_option("--log", tr_log, "Objective log (TSV) to write");
  tr->add_option("--lr", tcfg.learning_rate, "Learning rate");
  tr->add_option("--max-iters", tcfg.max_iters, "Iteration limit");
  tr->add_option("--tol", tcfg.convergence_tol, "Relative objective change counted as converged");
  auto* c_opt = tr->add_option("--C", tr_c, "Trade-off: one value or one per concept");
  auto* grid_opt = tr->add_option("--cv-grid", tr_grid, "Cross-validation grid for C");
  tr->add_option("--cv-folds", tr_folds, "Cross-validation folds");
  tr->add_flag("--halve", tcfg.halve_on_increase, "Halve the learning rate when the objective rises");
  c_opt->excludes(grid_opt);

  // eval
  auto* ev = app.add_subcommand("eval", "MF-S, MF-C and mAP of a trained model on a dataset");
  std::string ev_model, ev_data, ev_out;
  ev->add_option("--model", ev_model, "Model file with a classifier head");
  ev->add_option("--data", ev_data, "Evaluation dataset");
  ev->add_option("--out", ev_out, "JSON report to write");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Compare backprop against central finite differences");
  std::string gc_model, gc_data, gc_out;
  GradCheckOptions gopt;
  double gc_tol = 1e-4, gc_c = 1.0;
  gc->add_option("--model", gc_model, "Model file");
  gc->add_option("--data", gc_data, "Dataset");
  gc->add_option("--out", gc_out, "Comparison table (TSV); stdout when omitted");
  gc->add_option("--step", gopt.step, "Finite-difference step");
  gc->add_option("--tol", gc_tol, "Largest acceptable relative error");
  gc->add_option("--max-per-param", gopt.max_per_param, "Seeded sample of coordinates per parameter matrix (0 = all)");
  gc->add_option("--C", gc_c, "Trade-off used when the model has no head");

  // bench
  auto* be = app.add_subcommand("bench", "Per-sample runtime of DKN versus DMN classification");
  BenchConfig bcfg;
  std::string be_arch, be_tsv, be_json;
  Eigen::Index be_anchors = 1000, be_dim = 16;
  be->add_option("--arch", be_arch, "Architecture JSON");
  be->add_option("--num-anchors", be_anchors, "Anchor count N");
  be->add_option("--d", be_dim, "Feature dimension of the random histograms");
  be->add_option("--sizes", bcfg.sizes, "Support-set sizes |T|, ascending");
  be->add_option("--reps", bcfg.reps, "Timed repetitions (>= 5)");
  be->add_option("--queries", bcfg.queries, "Classified samples per repetition");
  be->add_option("--classes", bcfg.classes, "Concepts scored per sample");
  be->add_flag("--parallel", bcfg.parallel, "Parallel DKN support loop");
  be->add_option("--out-tsv", be_tsv, "TSV report; stdout when neither output is given");
  be->add_option("--out-json", be_json, "JSON report");

  // prop1-check
  auto* pc = app.add_subcommand("prop1-check", "Per-unit relative reconstruction error of a fresh build");
  std::string pc_data, pc_arch;
  Eigen::Index pc_n = 100, pc_d = 16;
  double pc_tol = 1e-6;
  pc->add_option("--data", pc_data, "Dataset supplying anchors (default: random histograms)");
  pc->add_option("--arch", pc_arch, "Architecture JSON");
  pc->add_option("--n", pc_n, "Anchor count");
  pc->add_option("--d", pc_d, "Dimension of random anchors");
  pc->add_option("--tol", pc_tol, "Largest acceptable relative error");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) merge_config(app, *sub, g.config);
    if (g.threads > 0) {
      set_max_threads(g.threads);
      Eigen::setNbThreads(g.threads);
    }

    if (sub == gen) {
      require(*gen, {"--out"});
      spec.seed = g.seed;
      spec.histogram = !gen_raw;
      const LabeledDataset data = generate_synthetic(spec);
      save_dataset(data, gen_out);
      log("wrote " + std::to_string(data.size()) + " samples to " + gen_out);
    } else if (sub == build) {
      require(*build, {"--data", "--out"});
      const LabeledDataset data = load_dataset(build_data, false);
      const AnchorSet S = pick_anchors(data, build_anchors, g.seed);
      const DknArchitecture arch = load_or_default_arch(build_arch, S.samples, g.seed);
      const BuildResult built = build_dmn(arch, S, g.clip_ratio);
      print_clip_report(built.units);
      save_model(built.model, ClassifierHead{}, build_out);
      log("wrote model with N = " + std::to_string(S.size()) + " to " + build_out);
    } else if (sub == tr) {
      require(*tr, {"--model", "--data", "--out", "--log"});
      auto [model, head] = load_model(tr_model);
      const LabeledDataset data = load_dataset(tr_data);
      tcfg.seed = g.seed;
      Eigen::VectorXd C;
      if (!tr_c.empty()) {
        C = resolve_trade_offs(tr_c, data.classes());
      } else {
        C = cross_validate_C(data, model, tr_folds, tr_grid);
        log("cross-validated C: " + [&] {
          std::string s;
          for (Eigen::Index k = 0; k < C.size(); ++k) s += (k ? " " : "") + fmt(C(k));
          return s;
        }());
      }
      tcfg.trade_offs.assign(C.data(), C.data() + C.size());
      if (head.classes() != data.classes()) {
        head.normals = svm_solve(dmn_map(model, data.features), data.labels, C);
      }
      head.trade_offs = C;
      const TrainResult res = train(std::move(model), std::move(head), data, tcfg);
      write_text(tr_log, format_log(res.log));
      save_model(res.model, res.head, tr_out);
      log(res.message + "; " + std::to_string(res.log.size()) + " logged iterations");
      if (res.status == TrainStatus::numeric_failure) {
        log("numeric failure; wrote the last good state");
        return 2;
      }
    } else if (sub == ev) {
      require(*ev, {"--model", "--data", "--out"});
      const auto [model, head] = load_model(ev_model);
      if (head.classes() == 0) throw InputError("model has no classifier head; train it first");
      const LabeledDataset data = load_dataset(ev_data, false);
      if (data.classes() != head.classes())
        throw InputError("dataset has " + std::to_string(data.classes()) + " concepts, head has " +
                         std::to_string(head.classes()));
      const EvalReport rep = evaluate(classify_batch(model, head, data.features), data.labels);
      write_text(ev_out, to_json(rep).dump(2) + "\n");
      log("MF-S " + fmt(rep.mf_s) + "  MF-C " + fmt(rep.mf_c) + "  mAP " + fmt(rep.map));
    } else if (sub == gc) {
      require(*gc, {"--model", "--data"});
      auto [model, head] = load_model(gc_model);
      const LabeledDataset data = load_dataset(gc_data);
      if (head.classes() == 0) {
        head.trade_offs = Eigen::VectorXd::Constant(data.classes(), gc_c);
        head.normals = svm_solve(dmn_map(model, data.features), data.labels, head.trade_offs);
      }
      gopt.seed = g.seed;
      const GradCheckReport rep = gradient_check(model, head, data, gopt);
      std::string table = "layer\tunit\tgroup\tindex\tanalytic\tnumeric\trel_error\tskipped\n";
      for (const auto& e : rep.entries)
        table += std::to_string(e.layer) + '\t' + std::to_string(e.unit) + '\t' +
                 std::string(to_string(e.group)) + '\t' + std::to_string(e.index) + '\t' +
                 fmt(e.analytic) + '\t' + fmt(e.numeric) + '\t' + fmt(e.rel_error) + '\t' +
                 (e.skipped ? "1" : "0") + '\n';
      if (gc_out.empty())
        std::cout << table;
      else
        write_text(gc_out, table);
      log(std::to_string(rep.checked()) + " coordinates checked, max relative error " +
          fmt(rep.max_rel_error()));
      if (rep.max_rel_error() > gc_tol) {
        log("relative error exceeds " + fmt(gc_tol));
        return 2;
      }
    } else if (sub == be) {
      bcfg.seed = g.seed;
      const AnchorSet S = AnchorSet::from_samples(random_histograms(be_anchors, be_dim, g.seed));
      const DknArchitecture arch = load_or_default_arch(be_arch, S.samples, g.seed);
      const BenchReport rep = run_bench(arch, S, bcfg, g.clip_ratio);
      std::ostringstream tsv;
      write_bench_tsv(tsv, rep);
      if (!be_tsv.empty()) write_text(be_tsv, tsv.str());
      if (!be_json.empty()) write_text(be_json, to_json(rep).dump(2) + "\n");
      if (be_tsv.empty() && be_json.empty()) std::cout << tsv.str();
    } else if (sub == pc) {
      AnchorSet S = pc_data.empty()
                        ? AnchorSet::from_samples(random_histograms(pc_n, pc_d, g.seed))
                        : pick_anchors(load_dataset(pc_data, false), pc_n, g.seed);
      const DknArchitecture arch = load_or_default_arch(pc_arch, S.samples, g.seed);
      const BuildResult built = build_dmn(arch, S, g.clip_ratio);
      const auto err = reconstruction_errors(arch, S, built.anchor_maps);
      double worst = 0.0;
      std::cout << "layer\tunit\trel_error\n";
      for (std::size_t l = 0; l < err.size(); ++l)
        for (std::size_t p = 0; p < err[l].size(); ++p) {
          std::cout << l + 1 << '\t' << p + 1 << '\t' << fmt(err[l][p]) << '\n';
          worst = std::max(worst, err[l][p]);
        }
      log("max relative reconstruction error " + fmt(worst));
      if (worst > pc_tol) {
        log("error exceeds " + fmt(pc_tol));
        return 2;
      }
    }
  } catch (const NumericError& e) {
    log(std::string("numeric error: ") + e.what());
    return 2;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (const CLI::Error& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
