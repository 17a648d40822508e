#include "lexigan/cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lexigan/cli/selftest.hpp"
#include "lexigan/corpus/lexicon.hpp"
#include "lexigan/errors.hpp"
#include "lexigan/parallel.hpp"
#include "lexigan/probe/probe.hpp"
#include "lexigan/training/checkpoint.hpp"
#include "lexigan/training/trainer.hpp"

namespace lexigan::cli {

namespace fs = std::filesystem;

namespace {

struct DataFlags {
  std::string data_dir;
  std::string lexicon;
  std::uint64_t data_seed = 1;
};

struct TrainFlags {
  DataFlags data;
  std::string arch = "fiw";
  std::size_t features = 3;
  std::size_t classes = 5;
  std::string preset = "desk";
  std::uint64_t steps = 5000;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t batch = 64;
  double lambda_gp = 10.0;
  double lambda_info = 1.0;
  double lr = 1e-4;
  std::size_t d_updates = 5;
  int shuffle = 2;
  std::uint64_t ckpt_every = 0;
  std::string resume;
};

struct GenerateFlags {
  std::string ckpt;
  std::vector<double> code;
  std::size_t class_index = 0;
  double value = 1.0;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct ProbeFlags {
  std::string ckpt;
  DataFlags data;
  std::vector<double> values{1.0};
  std::size_t per_code = 100;
  std::uint64_t seed = 0;
  std::string out;
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  auto* data = app->add_option("--data", f.data_dir, "Corpus directory: <class>/<file>.wav");
  auto* lex = app->add_option("--lexicon", f.lexicon, "Synthetic lexicon spec file");
  data->excludes(lex);
  app->add_option("--data-seed", f.data_seed, "Seed for lexicon synthesis");
}

// One line, `key=value` pairs in option order; defaults included.
std::string resolved_line(const CLI::App& app) {
  std::string line = "config: command=" + app.get_name();
  for (const auto* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      if (opt->get_expected_max() == 0 && value.empty()) value = "true";
    } else {
      value = opt->get_default_str();
      if (value.empty()) value = opt->get_expected_max() == 0 ? "false" : "-";
    }
    line += " " + name + "=" + value;
  }
  return line;
}

corpus::Dataset load_data(const DataFlags& f, std::size_t slot) {
  if (!f.data_dir.empty()) return corpus::load_corpus_dir(f.data_dir, slot);
  if (!f.lexicon.empty()) return corpus::synth_lexicon(corpus::load_lexicon(f.lexicon), slot, f.data_seed);
  throw UsageError("one of --data or --lexicon is required");
}

std::string value_token(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& log, const std::string& config_line) {
  if (f.data.data_dir.empty() && f.data.lexicon.empty()) throw UsageError("train needs --data DIR or --lexicon FILE");
  if (f.out.empty()) throw UsageError("train needs --out DIR");

  training::TrainState state;
  if (!f.resume.empty()) {
    state = training::load_checkpoint(f.resume);
    state.config.total_steps = f.steps;
  } else {
    training::TrainConfig cfg;
    cfg.preset = models::parse_preset(f.preset);
    const auto arch = models::parse_arch(f.arch);
    const std::size_t total = models::LayerTable::for_preset(cfg.preset).latent_dim;
    cfg.arch = models::LatentConfig::with_total(arch, arch == models::Arch::fiw ? f.features : f.classes, total);
    cfg.batch = f.batch;
    cfg.lambda_gp = f.lambda_gp;
    cfg.lambda_info = f.lambda_info;
    cfg.lr = f.lr;
    cfg.d_updates_per_cycle = f.d_updates;
    cfg.shuffle_radius = f.shuffle;
    cfg.seed = f.seed;
    cfg.total_steps = f.steps;
    cfg.validate();
    state = training::TrainState::initialize(cfg);
  }
  const auto slot = models::LayerTable::for_preset(state.config.preset).output_length();
  const auto data = load_data(f.data, slot);

  const fs::path dir(f.out);
  ensure_dir(dir);
  std::ofstream run_log(dir / "train.log", f.resume.empty() ? std::ios::trunc : std::ios::app);
  run_log << config_line << '\n';
  const std::string msg = "data: " + std::to_string(data.clips.size()) + " clips, " +
                          std::to_string(data.num_classes()) + " classes, slot " + std::to_string(slot);
  log << msg << '\n';
  run_log << msg << '\n';

  std::ofstream csv(dir / "loss.csv", f.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!csv) throw IoError("cannot write " + (dir / "loss.csv").string());
  if (f.resume.empty()) csv << training::loss_csv_header() << '\n';

  training::Trainer trainer(std::move(state), data);
  const auto ckpt = dir / "ckpt.fwgn";
  try {
    while (trainer.state().step < f.steps) {
      const auto r = trainer.train_cycle();
      csv << training::loss_csv_row(r) << '\n';
      if (f.ckpt_every > 0 && trainer.state().step % f.ckpt_every == 0) {
        csv.flush();
        training::save_checkpoint(trainer.state(), ckpt);
      }
    }
  } catch (const TrainingFault& e) {
    const auto dump = dir / "fault.fwgn";
    csv.flush();
    training::save_checkpoint(trainer.state(), dump);
    log << "error: " << e.what() << "; state dumped to " << dump.string() << '\n';
    run_log << "fault: " << e.what() << " dump=" << dump.string() << '\n';
    return kExitFault;
  }
  csv.flush();
  training::save_checkpoint(trainer.state(), ckpt);
  run_log << "done: step " << trainer.state().step << '\n';
  out << ckpt.string() << '\n';
  return kExitOk;
}

int cmd_generate(const GenerateFlags& f, bool have_code, bool have_class, std::ostream& out) {
  if (have_code == have_class) throw UsageError("generate needs exactly one of --code or --class");
  if (!std::isfinite(f.value)) throw UsageError("--value must be finite");
  const auto state = training::load_checkpoint(f.ckpt);
  const auto& latent = state.config.arch;
  std::vector<double> code;
  if (have_code) {
    if (f.code.size() != latent.num_code) {
      throw UsageError("--code has " + std::to_string(f.code.size()) + " values, checkpoint expects " +
                       std::to_string(latent.num_code));
    }
    code = f.code;
  } else {
    if (f.class_index >= latent.num_classes()) {
      throw UsageError("--class " + std::to_string(f.class_index) + " out of range for " +
                       std::to_string(latent.num_classes()) + " classes");
    }
    code = models::encode_class(latent, f.class_index, f.value);
  }
  std::string name;
  for (double c : code) name += (name.empty() ? "" : "_") + value_token(c);
  const fs::path dir = fs::path(f.out) / name;
  ensure_dir(dir);

  ad::NoGradGuard no_grad;
  std::vector<models::LatentVector> zs;
  for (std::size_t i = 0; i < f.count; ++i) {
    Rng rng = Rng::derive(f.seed, i);
    zs.push_back({code, models::sample_noise(latent.num_noise, rng)});
  }
  const auto audio = models::generate(state.generator, zs);
  const std::size_t L = audio.shape()[1];
  for (std::size_t i = 0; i < f.count; ++i) {
    corpus::AudioClip clip;
    clip.samples.assign(audio.data().begin() + static_cast<std::ptrdiff_t>(i * L),
                        audio.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * L));
    corpus::write_wav(clip, dir / (std::to_string(i) + ".wav"));
  }
  out << dir.string() << ": " << f.count << " files\n";
  return kExitOk;
}

int cmd_probe(const ProbeFlags& f, std::size_t threads, std::ostream& out, std::ostream& log) {
  if (f.data.data_dir.empty() && f.data.lexicon.empty()) throw UsageError("probe needs --data DIR or --lexicon FILE");
  if (f.values.empty()) throw UsageError("--values needs at least one value");
  for (std::size_t i = 1; i < f.values.size(); ++i)
    if (!(f.values[i] > f.values[i - 1])) throw UsageError("--values must be strictly increasing");
  if (f.per_code == 0) throw UsageError("--per-code must be at least 1");

  const auto state = training::load_checkpoint(f.ckpt);
  const auto slot = models::LayerTable::for_preset(state.config.preset).output_length();
  const auto data = load_data(f.data, slot);
  const auto bank = probe::build_templates(data);
  log << "templates: " << bank.num_classes() << " classes, reject threshold " << bank.reject_threshold
      << ", self accuracy " << probe::self_classification_accuracy(data, bank) << '\n';

  probe::ProbeOptions opts;
  opts.threads = threads;
  opts.checkpoint_id = fs::path(f.ckpt).filename().string() + "@" + std::to_string(state.step);
  const auto reports =
      probe::extreme_probe(state.generator, state.config.arch, bank, f.values, f.per_code, f.seed, opts);

  const fs::path dir(f.out);
  ensure_dir(dir);
  std::ofstream csv(dir / "probe.csv", std::ios::trunc), jsonl(dir / "probe.jsonl", std::ios::trunc);
  std::ofstream fits(dir / "fits.json", std::ios::trunc);
  if (!csv || !jsonl || !fits) throw IoError("cannot write probe outputs under " + dir.string());
  fits << "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    probe::write_report_csv(rep, csv, i == 0);
    probe::write_report_jsonl(rep, jsonl);
    const auto assignment = probe::assign_codes(rep);
    const double accuracy = probe::retrieval_accuracy(rep, assignment);

    std::ostringstream entry;
    entry << "{\"value\": " << value_token(rep.value) << ", \"retrieval_accuracy\": " << accuracy
          << ", \"assignment_tie\": " << (assignment.any_tie ? "true" : "false");
    std::string summary = "value " + value_token(rep.value) + ": retrieval " + std::to_string(accuracy) +
                          ", median modal fraction " + std::to_string(probe::median_modal_fraction(rep)) +
                          ", median entropy " + std::to_string(probe::median_entropy(rep));
    try {
      const auto model = probe::fit_code_model(rep);
      entry << ",\n\"code_model\": " << probe::fit_to_json(model.full) << ",\n\"empty_model\": "
            << probe::fit_to_json(model.empty);
      summary += ", AIC " + std::to_string(model.full.aic) + " vs empty " + std::to_string(model.empty.aic);
    } catch (const ValidationError& e) {
      entry << ", \"code_model\": null, \"code_model_note\": \"" << e.what() << "\"";
      summary += ", no code model (" + std::string(e.what()) + ")";
    }
    if (rep.latent.arch == models::Arch::fiw) {
      const auto assoc = probe::feature_association(rep, probe::high_centroid_onset());
      entry << ",\n\"feature_association\": " << probe::fit_to_json(assoc.full) << ",\n\"feature_dropped\": [";
      for (std::size_t j = 0; j < assoc.dropped.size(); ++j)
        entry << (j ? ", " : "") << probe::fit_to_json(assoc.dropped[j]);
      entry << "]";
    }
    entry << "}";
    fits << entry.str() << (i + 1 < reports.size() ? ",\n" : "\n");
    out << summary << '\n';
  }
  fits << "]\n";
  return kExitOk;
}

int cmd_selftest(bool inject_fault, std::ostream& out) {
  const auto results = run_selftest(inject_fault);
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.module << '/' << r.op << ": " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  out << (failed ? std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed"
                 : "all " + std::to_string(results.size()) + " checks passed")
      << '\n';
  return failed ? kExitFault : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"ciwGAN / fiwGAN on raw audio", "lexigan"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::optional<std::size_t> threads_flag;

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a model");
  train->set_config("--config", "", "key = value file; flags take precedence");
  add_data_flags(train, tf.data);
  train->add_option("--arch", tf.arch, "ciw or fiw")->check(CLI::IsMember({"ciw", "fiw"}));
  auto* features = train->add_option("--features", tf.features, "fiw: number of binary code features");
  auto* classes = train->add_option("--classes", tf.classes, "ciw: number of one-hot classes");
  train->add_option("--preset", tf.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  train->add_option("--steps", tf.steps, "Training cycles");
  train->add_option("--seed", tf.seed);
  train->add_option("--out", tf.out, "Output directory");
  train->add_option("--batch", tf.batch);
  train->add_option("--lambda-gp", tf.lambda_gp);
  train->add_option("--lambda-info", tf.lambda_info);
  train->add_option("--lr", tf.lr);
  train->add_option("--d-updates", tf.d_updates, "Critic updates per cycle");
  train->add_option("--shuffle", tf.shuffle, "Phase shuffle radius");
  train->add_option("--ckpt-every", tf.ckpt_every, "Checkpoint interval in cycles (0: only at exit)");
  train->add_option("--resume", tf.resume, "Continue from a checkpoint");
  train->add_option("--threads", threads_flag);

  GenerateFlags gf;
  auto* gen = app.add_subcommand("generate", "Write generated audio as WAV");
  gen->set_config("--config");
  gen->add_option("--ckpt", gf.ckpt)->required();
  auto* code = gen->add_option("--code", gf.code, "Code values, comma separated")->delimiter(',');
  auto* cls = gen->add_option("--class", gf.class_index, "Code class; active positions set to --value");
  code->excludes(cls);
  gen->add_option("--value", gf.value);
  gen->add_option("--count", gf.count);
  gen->add_option("--seed", gf.seed);
  gen->add_option("--out", gf.out)->required();
  gen->add_option("--threads", threads_flag);

  ProbeFlags pf;
  auto* prb = app.add_subcommand("probe", "Code sweeps, oracle labels and regressions");
  prb->set_config("--config");
  prb->add_option("--ckpt", pf.ckpt)->required();
  add_data_flags(prb, pf.data);
  prb->add_option("--values", pf.values, "Probe values, comma separated")->delimiter(',');
  prb->add_option("--per-code", pf.per_code);
  prb->add_option("--seed", pf.seed);
  prb->add_option("--out", pf.out)->required();
  prb->add_option("--threads", threads_flag);

  bool inject_fault = false;
  auto* st = app.add_subcommand("selftest", "Gradient checks, oracles and round trips");
  st->add_flag("--inject-fault", inject_fault, "Corrupt a backward rule (negative control)");

  std::vector<const char*> argv{"lexigan"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ? app.help() : e.what());
      if (const auto subs = app.get_subcommands(); !subs.empty()) out << subs.front()->help();
      return kExitOk;
    }
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const CLI::App* active = app.get_subcommands().front();
  const std::string config_line = resolved_line(*active);
  log << config_line << '\n';
  try {
    if (active == train) {
      const bool fiw = tf.arch == "fiw";
      if ((fiw && classes->count() > 0) || (!fiw && features->count() > 0))
        throw UsageError(fiw ? "--classes applies to ciw; use --features" : "--features applies to fiw; use --classes");
      return cmd_train(tf, out, log, config_line);
    }
    if (active == gen) return cmd_generate(gf, code->count() > 0, cls->count() > 0, out);
    if (active == prb) return cmd_probe(pf, resolve_threads(threads_flag), out, log);
    return cmd_selftest(inject_fault, out);
  } catch (const UsageError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFault;
  }
}

}  // namespace lexigan::cli
