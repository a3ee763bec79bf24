// Command-line front end: analysis, rendering, corpus generation, training,
// evaluation, trace simulation and the decision gateway.

#include "ctxguard/corpus.hpp"
#include "ctxguard/errors.hpp"
#include "ctxguard/evalharness.hpp"
#include "ctxguard/gateway.hpp"
#include "ctxguard/mediator.hpp"
#include "ctxguard/renderer.hpp"
#include "ctxguard/static_analyzer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ctxguard;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path &p, const std::string &s) {
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error("cannot write " + p.string());
  out << s;
}

/// Corpus from a directory, or generated from (seed, apps).
struct CorpusSource {
  std::string dir;
  std::uint64_t seed = 1;
  std::size_t apps = 200;

  void add_to(CLI::App *cmd) {
    cmd->add_option("--corpus", dir, "Corpus directory (default: generate)");
    cmd->add_option("--seed", seed, "Corpus seed when generating");
    cmd->add_option("--apps", apps, "Number of apps when generating");
  }
  Corpus load() const {
    return dir.empty() ? generate_corpus(seed, apps) : read_corpus(dir);
  }
};

Algo parse_algo(const std::string &s) { return algo_from_string(s); }

std::string model_file(PermissionType p) {
  return std::string(to_string(p)) + ".model";
}

void load_models(Mediator &m, const std::string &dir) {
  for (PermissionType p : kAllPermissions) {
    const fs::path f = fs::path(dir) / model_file(p);
    if (fs::exists(f))
      m.set_model(parse_model(slurp(f)));
  }
}

void write_report(const std::string &text, const std::string &json_text,
                  const std::string &json_path) {
  std::cout << text;
  if (!json_path.empty())
    spit(json_path, json_text);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Context-sensitive permission mediation toolkit"};
  app.require_subcommand(1);

  // analyze
  std::string analyze_pkg, review_file, api_map_file;
  auto *analyze = app.add_subcommand("analyze", "Extract context bindings from a package");
  analyze->add_option("package", analyze_pkg, ".apkg file")->required();
  analyze->add_option("--review", review_file, "Binding review (allow/deny site lists)");
  analyze->add_option("--api-map", api_map_file, "Sensitive API map file");

  // render
  std::string render_pkg, render_activity;
  auto *render = app.add_subcommand("render", "Render an Activity window");
  render->add_option("package", render_pkg, ".apkg file")->required();
  render->add_option("activity", render_activity, "Activity component id")->required();

  // gen-corpus
  std::uint64_t gen_seed = 1;
  std::size_t gen_apps = 200;
  std::string gen_out = "corpus";
  double mix_legal = 0.50, mix_illegal = 0.35, mix_ud = 0.15;
  std::size_t profile_count = 24;
  double profile_noise = 0.0;
  auto *gen = app.add_subcommand("gen-corpus", "Generate a labeled synthetic corpus");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--apps", gen_apps, "Number of apps");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--legal", mix_legal, "Legal fraction");
  gen->add_option("--illegal", mix_illegal, "Illegal fraction");
  gen->add_option("--user-dependent", mix_ud, "User-dependent fraction");
  gen->add_option("--profiles", profile_count, "Simulated user profiles to emit");
  gen->add_option("--noise", profile_noise, "Profile noise rate");

  // train
  CorpusSource train_src;
  std::string train_algo = "LR", train_perm = "all", train_out = "models";
  auto *train = app.add_subcommand("train", "Train per-permission models on a corpus");
  train_src.add_to(train);
  train->add_option("--algo", train_algo, "NB, LR, SVM or HT");
  train->add_option("--permission", train_perm, "Permission or 'all'");
  train->add_option("--out", train_out, "Model directory");

  // eval
  auto *eval = app.add_subcommand("eval", "Evaluation harness");
  eval->require_subcommand(1);
  CorpusSource eval_src;
  std::string eval_algo = "LR", eval_json, eval_sets;
  std::size_t eval_k = 5;
  std::uint64_t eval_seed = 1;
  bool no_group = false, when_subset = false;
  auto add_cv_opts = [&](CLI::App *c) {
    eval_src.add_to(c);
    c->add_option("--algo", eval_algo, "NB, LR, SVM or HT");
    c->add_option("--k", eval_k, "Folds");
    c->add_option("--harness-seed", eval_seed, "Fold and training seed");
    c->add_flag("--no-group", no_group, "Do not keep an app's instances in one fold");
    c->add_flag("--when-subset", when_subset, "Legal plus when-violating instances only");
    c->add_option("--json", eval_json, "Also write a JSON report here");
  };
  auto *cv = eval->add_subcommand("cv", "k-fold cross-validation");
  add_cv_opts(cv);
  cv->add_option("--features", eval_sets, "Feature sets, e.g. who+what (default all)");
  auto *abl = eval->add_subcommand("ablate", "Feature-set ablation");
  add_cv_opts(abl);
  auto *pers = eval->add_subcommand("personalize", "Simulated-user personalization");
  eval_src.add_to(pers);
  std::size_t pers_profiles = 24, pers_decisions = 50;
  double pers_noise = 0.0;
  pers->add_option("--algo", eval_algo, "NB, LR, SVM or HT");
  pers->add_option("--profiles", pers_profiles, "Number of profiles");
  pers->add_option("--decisions", pers_decisions, "Decisions per user");
  pers->add_option("--noise", pers_noise, "Profile noise rate");
  pers->add_option("--harness-seed", eval_seed, "Sampling seed");
  pers->add_option("--json", eval_json, "Also write a JSON report here");
  auto *bench = eval->add_subcommand("bench", "Pipeline latency over a replayed trace");
  std::string bench_trace, bench_models;
  std::vector<std::string> bench_pkgs;
  std::size_t bench_reps = 1000;
  eval_src.add_to(bench);
  bench->add_option("--trace", bench_trace, "Trace file")->required();
  bench->add_option("--package", bench_pkgs, "Package files the trace uses");
  bench->add_option("--models", bench_models, "Model directory (default: train LR on the corpus)");
  bench->add_option("--reps", bench_reps, "Repetitions");
  bench->add_option("--json", eval_json, "Also write a JSON report here");

  // simulate
  std::string sim_trace, sim_models, sim_log, sim_policy = "prompt";
  std::vector<std::string> sim_pkgs;
  std::string sim_corpus;
  double tau_lo = 0.2, tau_hi = 0.8;
  bool sim_expire = false;
  auto *sim = app.add_subcommand("simulate", "Replay a device trace through the mediator");
  sim->add_option("trace", sim_trace, "Trace file")->required();
  sim->add_option("--package", sim_pkgs, "Package files");
  sim->add_option("--corpus", sim_corpus, "Install every package of a corpus");
  sim->add_option("--models", sim_models, "Model directory");
  sim->add_option("--log", sim_log, "Append closed records to this decision log");
  sim->add_option("--background", sim_policy, "prompt or always-deny");
  sim->add_option("--tau-lo", tau_lo, "Deny at or below");
  sim->add_option("--tau-hi", tau_hi, "Allow at or above");
  sim->add_flag("--expire", sim_expire, "Expire prompts still pending at the end");

  // serve
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto *serve = app.add_subcommand("serve", "Run the decision gateway");
  serve->add_option("--port", serve_port, "Port");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--package", sim_pkgs, "Package files");
  serve->add_option("--corpus", sim_corpus, "Install every package of a corpus");
  serve->add_option("--models", sim_models, "Model directory");
  serve->add_option("--background", sim_policy, "prompt or always-deny");

  CLI11_PARSE(app, argc, argv);

  auto make_mediator = [&]() {
    MediatorConfig cfg;
    cfg.thresholds = {tau_lo, tau_hi};
    cfg.background = background_policy_from_string(sim_policy);
    auto m = std::make_unique<Mediator>(cfg);
    for (const auto &p : sim_pkgs)
      m->install(parse_package(slurp(p)));
    if (!sim_corpus.empty())
      for (auto &p : read_corpus(sim_corpus).packages)
        m->install(std::move(p));
    if (!sim_models.empty())
      load_models(*m, sim_models);
    return m;
  };

  try {
    if (*analyze) {
      const AppPackage pkg = parse_package(slurp(analyze_pkg));
      SensitiveApiMap custom;
      const SensitiveApiMap *map = &default_sensitive_api_map();
      if (!api_map_file.empty()) {
        custom = load_sensitive_api_map(slurp(api_map_file));
        map = &custom;
      }
      auto bindings = extract_bindings(pkg, *map);
      if (!review_file.empty())
        bindings = apply_review(std::move(bindings),
                                parse_binding_review(slurp(review_file)));
      std::cout << serialize_bindings(pkg.package_id, bindings);
    } else if (*render) {
      const AppPackage pkg = parse_package(slurp(render_pkg));
      std::cout << serialize_snapshot(render_window(pkg, render_activity));
    } else if (*gen) {
      TemplateMix mix;
      mix.legal = mix_legal;
      mix.illegal = mix_illegal;
      mix.user_dependent = mix_ud;
      const Corpus c = generate_corpus(gen_seed, gen_apps, mix);
      write_corpus(c, gen_out);
      spit(fs::path(gen_out) / "profiles.json",
           serialize_profiles(generate_profiles(gen_seed, profile_count,
                                                profile_noise)));
      std::cout << "wrote " << c.packages.size() << " packages, "
                << c.instances.size() << " instances to " << gen_out << "\n";
    } else if (*train) {
      const Corpus c = train_src.load();
      auto models = train_models(build_dataset(c), parse_algo(train_algo));
      fs::create_directories(train_out);
      for (const auto &[p, m] : models) {
        if (train_perm != "all" && to_string(p) != train_perm)
          continue;
        spit(fs::path(train_out) / model_file(p), serialize_model(m));
        std::cout << to_string(p) << ": " << m.examples_seen()
                  << " examples -> " << (fs::path(train_out) / model_file(p)).string()
                  << "\n";
      }
    } else if (*eval) {
      if (*cv || *abl) {
        const Corpus c = eval_src.load();
        auto data = build_dataset(c);
        if (when_subset)
          data = when_violation_subset(data);
        CvOptions opt;
        opt.k = eval_k;
        opt.seed = eval_seed;
        opt.group_by_app = !no_group;
        if (*cv) {
          if (!eval_sets.empty())
            opt.enabled = EnabledSets::parse(eval_sets);
          const CvResult r = cross_validate(data, parse_algo(eval_algo), opt);
          write_report(format_cv_table(r), cv_to_json(r), eval_json);
        } else {
          const auto rows = ablate(data, parse_algo(eval_algo),
                                   EnabledSets::all_subsets(), opt);
          write_report(format_ablation_table(rows), ablation_to_json(rows),
                       eval_json);
        }
      } else if (*pers) {
        const Corpus c = eval_src.load();
        PersonalizationOptions opt;
        opt.decisions_per_user = pers_decisions;
        opt.seed = eval_seed;
        opt.algo = parse_algo(eval_algo);
        const auto r = personalize_eval(
            c, generate_profiles(eval_src.seed, pers_profiles, pers_noise), opt);
        write_report(format_personalization_table(r), personalization_to_json(r),
                     eval_json);
      } else if (*bench) {
        Mediator m;
        for (const auto &p : bench_pkgs)
          m.install(parse_package(slurp(p)));
        if (!bench_models.empty()) {
          load_models(m, bench_models);
        } else {
          for (auto &[p, model] :
               train_models(build_dataset(eval_src.load()), Algo::LR))
            m.set_model(std::move(model));
        }
        const auto s = bench_overhead(m, parse_trace(slurp(bench_trace)), bench_reps);
        write_report(format_latency(s), latency_to_json(s), eval_json);
      }
    } else if (*sim) {
      auto m = make_mediator();
      const auto ids = m->run_trace(parse_trace(slurp(sim_trace)));
      if (sim_expire)
        for (const auto &t : std::vector<PromptTicket>(m->pending().begin(),
                                                       m->pending().end()))
          m->expire_prompt(t.ticket_id,
                           t.created_at + m->config().prompt_timeout_ms.value_or(0));
      std::ofstream log;
      if (!sim_log.empty())
        log.open(sim_log, std::ios::app);
      for (const auto &id : ids) {
        const RequestRecord &r = *m->find_record(id);
        std::cout << serialize_record(r) << "\n";
        if (log.is_open() && r.closed)
          log << serialize_record(r) << "\n";
      }
      for (const auto &t : m->pending())
        std::cerr << "pending prompt " << t.ticket_id << " for " << t.request_id
                  << "\n";
    } else if (*serve) {
      auto m = make_mediator();
      Gateway gw(*m);
      std::cerr << "serving on http://" << serve_host << ":" << serve_port
                << "/v1\n";
      if (!gw.serve(serve_host, serve_port)) {
        std::cerr << "error: cannot listen on " << serve_host << ":" << serve_port
                  << "\n";
        return 1;
      }
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
