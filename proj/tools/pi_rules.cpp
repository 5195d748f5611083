// Command-line front end: rule validation, inference, learning, evaluation,
// inference inversion, probability-possibility transforms and benchmark
// generators, all file-driven.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pirules/pirules.hpp"

namespace fs = std::filesystem;
using namespace pirules;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;

unsigned resolve_jobs(unsigned cli_jobs) {
  if (cli_jobs != 0) return cli_jobs;
  if (const char* env = std::getenv("PI_RULES_JOBS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

std::map<std::string, DistributionFile> read_inputs(
    const std::vector<std::string>& specs, const Cascade& cascade) {
  std::map<std::string, DistributionFile> files;
  std::optional<std::size_t> rows;
  for (const std::string& spec : specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--input expects attr=path, got '" + spec + "'");
    std::string attr = spec.substr(0, eq);
    DistributionFile file = read_distribution_csv(spec.substr(eq + 1));
    const Domain& dom = cascade.attributes().at(attr);
    if (file.header != dom.labels())
      throw ValidationError(spec.substr(eq + 1) + ": header does not match the domain of '" +
                            attr + "'");
    if (rows && *rows != file.rows.size())
      throw ValidationError("input files disagree on the sample count");
    rows = file.rows.size();
    files.emplace(std::move(attr), std::move(file));
  }
  if (files.empty()) throw ValidationError("no --input given");
  if (*rows == 0) throw ValidationError("no samples in the input files");
  return files;
}

Cascade cascade_for_manifest(const Manifest& m) {
  if (m.problem == "addition") return make_addition_cascade(AdditionSpec{m.size});
  return make_sudoku_cascade(make_sudoku_spec(m.size));
}

std::vector<ProblemSample> samples_for_manifest(const Manifest& m) {
  DistributionFile dist = read_distribution_csv(m.distributions);
  auto labels = read_labels_csv(m.labels);
  if (m.problem == "addition")
    return make_addition_samples(AdditionSpec{m.size}, dist.rows, labels);
  return make_sudoku_samples(make_sudoku_spec(m.size), dist.rows, labels);
}

nlohmann::json report_to_json(const CascadeLearnReport& report,
                              const std::map<std::string, double>& taus) {
  nlohmann::json j;
  j["taus"] = taus;
  j["stages"] = nlohmann::json::array();
  for (const StageLearnReport& stage : report.stages) {
    nlohmann::json js;
    js["set"] = stage.set_name;
    js["reliable"] = stage.learn.reliable_count;
    js["total"] = stage.learn.samples.size();
    js["stacked_nabla"] = stage.learn.stacked_nabla;
    js["samples"] = nlohmann::json::array();
    for (const SampleAssessment& s : stage.learn.samples)
      js["samples"].push_back({{"nabla", s.nabla}, {"selected", s.selected}});
    j["stages"].push_back(std::move(js));
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"possibilistic rule-based systems: inference, learning, inversion"};
  app.require_subcommand(1);
  unsigned jobs = 0;
  app.add_option("--jobs", jobs, "sample-level parallelism (env PI_RULES_JOBS)");

  // --- validate ---------------------------------------------------------
  auto* cmd_validate = app.add_subcommand("validate", "check a rule file");
  std::string validate_rules;
  cmd_validate->add_option("--rules", validate_rules, "rule file (JSON)")->required();

  // --- infer ------------------------------------------------------------
  auto* cmd_infer = app.add_subcommand("infer", "run forward inference over CSV inputs");
  std::string infer_rules, infer_outdir;
  std::vector<std::string> infer_inputs;
  bool infer_renorm = false;
  cmd_infer->add_option("--rules", infer_rules, "rule file (JSON)")->required();
  cmd_infer->add_option("--input", infer_inputs, "attr=distributions.csv (repeatable)")
      ->required();
  cmd_infer->add_option("--out-dir", infer_outdir, "output directory")->required();
  cmd_infer->add_flag("--renormalize", infer_renorm,
                      "renormalize un-normalized input distributions");

  // --- learn ------------------------------------------------------------
  auto* cmd_learn = app.add_subcommand("learn", "learn rule parameters from training data");
  std::string learn_rules, learn_train, learn_manifest, learn_valid, learn_params_out,
      learn_report_out, learn_transform = "antipignistic";
  std::vector<std::string> learn_taus;
  bool learn_search = false;
  ThresholdConfig tcfg;
  cmd_learn->add_option("--rules", learn_rules, "rule file (defaults to the manifest problem)");
  cmd_learn->add_option("--train", learn_train, "training data (JSON lines)");
  cmd_learn->add_option("--manifest", learn_manifest, "training dataset manifest (JSON)");
  cmd_learn->add_option("--valid", learn_valid,
                        "validation data for the threshold search (same format as --train)");
  cmd_learn->add_option("--tau", learn_taus,
                        "tolerance threshold, either VALUE or GROUP=VALUE (repeatable)");
  cmd_learn->add_flag("--search", learn_search, "search thresholds on the validation data");
  cmd_learn->add_option("--transform", learn_transform, "antipignistic|minspec (manifest data)");
  cmd_learn->add_option("--threshold-l", tcfg.l, "threshold candidate count");
  cmd_learn->add_option("--threshold-h", tcfg.h, "threshold exponent");
  cmd_learn->add_option("--threshold-eps", tcfg.eps, "threshold epsilon");
  cmd_learn->add_option("--min-improvement", tcfg.min_improvement, "search stop rule");
  cmd_learn->add_option("--stagnation", tcfg.stagnation, "search stop rule");
  cmd_learn->add_option("--params-out", learn_params_out, "learned parameters (JSON)")
      ->required();
  cmd_learn->add_option("--report-out", learn_report_out, "reliability report (JSON)");

  // --- eval -------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a cascade on a dataset manifest");
  std::string eval_rules, eval_manifest, eval_params, eval_transform = "antipignistic",
                                                      eval_report_out;
  cmd_eval->add_option("--rules", eval_rules, "rule file (defaults to the manifest problem)");
  cmd_eval->add_option("--manifest", eval_manifest, "dataset manifest (JSON)")->required();
  cmd_eval->add_option("--params", eval_params, "learned parameters to apply (JSON)");
  cmd_eval->add_option("--transform", eval_transform, "antipignistic|minspec");
  cmd_eval->add_option("--report-out", eval_report_out, "evaluation report (JSON)");

  // --- transform ----------------------------------------------------------
  auto* cmd_transform = app.add_subcommand("transform", "probability <-> possibility CSV");
  std::string tr_method = "antipignistic", tr_in, tr_out;
  bool tr_inverse = false, tr_renorm = false;
  cmd_transform->add_option("--method", tr_method, "antipignistic|minspec");
  cmd_transform->add_flag("--inverse", tr_inverse, "possibility -> probability");
  cmd_transform->add_flag("--renormalize", tr_renorm, "renormalize rows first");
  cmd_transform->add_option("--input", tr_in, "input CSV")->required();
  cmd_transform->add_option("--output", tr_out, "output CSV")->required();

  // --- backprop -----------------------------------------------------------
  auto* cmd_backprop = app.add_subcommand(
      "backprop", "invert inference: emit targeted input distributions");
  std::string bp_rules, bp_set, bp_params, bp_target, bp_outdir, bp_pick = "low";
  cmd_backprop->add_option("--rules", bp_rules, "rule file (JSON)")->required();
  cmd_backprop->add_option("--set", bp_set, "rule set name (default: last in the cascade)");
  cmd_backprop->add_option("--params", bp_params, "learned parameters to apply (JSON)");
  cmd_backprop->add_option("--target", bp_target, "target output distributions CSV")
      ->required();
  cmd_backprop->add_option("--out-dir", bp_outdir, "output directory")->required();
  cmd_backprop->add_option("--pick", bp_pick, "low|high solution");

  // --- generate -----------------------------------------------------------
  auto* cmd_generate = app.add_subcommand("generate", "emit benchmark rule files or data");
  auto* gen_rules = cmd_generate->add_subcommand("rules", "emit a benchmark rule file");
  std::string gr_problem, gr_out;
  std::size_t gr_k = 1, gr_side = 4;
  gen_rules->add_option("--problem", gr_problem, "addition|sudoku")->required();
  gen_rules->add_option("--k", gr_k, "digits per operand (addition)");
  gen_rules->add_option("--side", gr_side, "4|9 (sudoku)");
  gen_rules->add_option("--out", gr_out, "rule file to write")->required();

  auto* gen_data = cmd_generate->add_subcommand("data", "emit a synthetic addition dataset");
  std::string gd_problem = "addition", gd_outdir, gd_split;
  std::size_t gd_k = 1, gd_samples = 100;
  SyntheticNoiseModel gd_model;
  std::uint64_t gd_label_seed = 1;
  gen_data->add_option("--problem", gd_problem, "addition");
  gen_data->add_option("--k", gd_k, "digits per operand");
  gen_data->add_option("--samples", gd_samples, "sample count");
  gen_data->add_option("--base", gd_model.base, "correct-class base mass");
  gen_data->add_option("--temperature", gd_model.temperature, "noise temperature in [0,1]");
  gen_data->add_option("--seed", gd_model.seed, "noise seed");
  gen_data->add_option("--label-seed", gd_label_seed, "digit label seed");
  gen_data->add_option("--split", gd_split, "split name recorded in the manifest");
  gen_data->add_option("--out-dir", gd_outdir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  const unsigned effective = resolve_jobs(jobs);

  if (*cmd_validate) {
    Cascade cascade = read_cascade_json(validate_rules);
    for (const std::string& w : validate_warnings(cascade)) std::cerr << "warning: " << w << "\n";
    std::cout << "ok: " << cascade.sets().size() << " rule sets, "
              << cascade.attributes().size() << " attributes\n";
    return kExitOk;
  }

  if (*cmd_infer) {
    Cascade cascade = read_cascade_json(infer_rules);
    auto files = read_inputs(infer_inputs, cascade);
    const std::size_t count = files.begin()->second.rows.size();
    fs::create_directories(infer_outdir);
    CompiledCascade compiled = compile(cascade);
    InferOptions opts{infer_renorm};

    std::vector<DistributionMap> outputs(count);
    parallel_for(count, effective, [&](std::size_t i) {
      DistributionMap in;
      for (const auto& [attr, file] : files) in[attr] = file.rows[i];
      outputs[i] = infer_cascade(compiled, in, opts);
    });

    std::vector<std::vector<std::string>> predictions(count);
    for (const std::string& attr : cascade.final_outputs()) {
      const Domain& dom = cascade.attributes().at(attr);
      std::vector<DegreeVector> rows;
      rows.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const DegreeVector& row = outputs[i].at(attr);
        if (!is_normalized(row))
          std::cerr << "warning: sample " << i + 1 << ": output for '" << attr
                    << "' is not normalized (incoherent rule set)\n";
        rows.push_back(row);
        auto arg = unique_argmax(row);
        predictions[i].push_back(arg ? dom.label(*arg) : std::string("!ambiguous"));
      }
      write_distribution_csv(fs::path(infer_outdir) / (attr + ".csv"), dom.labels(), rows);
    }
    {
      auto out = std::ofstream(fs::path(infer_outdir) / "predictions.csv");
      bool first = true;
      for (const std::string& attr : cascade.final_outputs()) {
        if (!first) out << ',';
        out << attr;
        first = false;
      }
      out << '\n';
      for (const auto& row : predictions) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (c) out << ',';
          out << row[c];
        }
        out << '\n';
      }
    }
    return kExitOk;
  }

  if (*cmd_learn) {
    TransformMethod method = learn_transform == "minspec" ? TransformMethod::minspec
                                                          : TransformMethod::antipignistic;
    std::optional<Cascade> cascade;
    std::vector<TrainingSample> train, valid;
    if (!learn_manifest.empty()) {
      Manifest m = read_manifest_json(learn_manifest);
      cascade = learn_rules.empty() ? cascade_for_manifest(m) : read_cascade_json(learn_rules);
      train = to_training_samples(samples_for_manifest(m), method);
    } else {
      if (learn_rules.empty())
        throw ValidationError("--rules is required unless --manifest is given");
      cascade = read_cascade_json(learn_rules);
      if (learn_train.empty()) throw ValidationError("--train or --manifest is required");
      train = read_training_jsonl(learn_train, *cascade);
    }
    if (train.empty()) throw ValidationError("no training samples");
    if (!learn_valid.empty()) {
      if (fs::path(learn_valid).extension() == ".json") {
        Manifest m = read_manifest_json(learn_valid);
        valid = to_training_samples(samples_for_manifest(m), method);
      } else {
        valid = read_training_jsonl(learn_valid, *cascade);
      }
    }

    std::map<std::string, double> taus;
    if (learn_search || (learn_taus.empty() && !valid.empty())) {
      if (valid.empty())
        throw ValidationError("--search needs validation data (--valid)");
      auto result = threshold_search(*cascade, train, valid, tcfg, {}, {}, effective);
      taus = result.taus;
    } else if (!learn_taus.empty()) {
      for (const std::string& spec : learn_taus) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) {
          double v = std::stod(spec);
          for (const RuleSet& set : cascade->sets()) taus[set.tau_group()] = v;
        } else {
          taus[spec.substr(0, eq)] = std::stod(spec.substr(eq + 1));
        }
      }
    } else {
      // top candidate of the threshold set: strictly above 1 selects all
      for (const RuleSet& set : cascade->sets()) taus[set.tau_group()] = 1.0 + tcfg.eps;
    }

    CascadeLearnReport report = cascade_learn(*cascade, train, taus, {}, effective);
    write_parameters_json(learn_params_out, *cascade);
    if (!learn_report_out.empty()) {
      auto out = std::ofstream(learn_report_out);
      out << report_to_json(report, taus).dump(2) << '\n';
    }
    std::cout << "learned " << report.stages.size() << " rule sets\n";
    return kExitOk;
  }

  if (*cmd_eval) {
    Manifest m = read_manifest_json(eval_manifest);
    Cascade cascade =
        eval_rules.empty() ? cascade_for_manifest(m) : read_cascade_json(eval_rules);
    if (!eval_params.empty()) apply_parameters_json(eval_params, cascade);
    auto samples = samples_for_manifest(m);
    TransformMethod method = eval_transform == "minspec" ? TransformMethod::minspec
                                                         : TransformMethod::antipignistic;
    EvalReport report = evaluate(cascade, samples, method, {}, effective);
    std::cout << "accuracy " << report.accuracy << " (" << report.correct << "/" << report.total
              << "), ambiguous " << report.ambiguous << "\n";
    if (!eval_report_out.empty()) {
      nlohmann::json j;
      j["accuracy"] = report.accuracy;
      j["correct"] = report.correct;
      j["total"] = report.total;
      j["ambiguous"] = report.ambiguous;
      j["stage_seconds"] = nlohmann::json::object();
      for (const auto& [name, secs] : report.stage_seconds) j["stage_seconds"][name] = secs;
      auto out = std::ofstream(eval_report_out);
      out << j.dump(2) << '\n';
    }
    return kExitOk;
  }

  if (*cmd_transform) {
    DistributionFile file = read_distribution_csv(tr_in);
    std::vector<DegreeVector> rows;
    rows.reserve(file.rows.size());
    for (std::size_t i = 0; i < file.rows.size(); ++i) {
      DegreeVector row = file.rows[i];
      if (tr_inverse) {
        if (tr_method == "minspec")
          throw ValidationError("the minimum-specificity transform has no inverse");
        if (tr_renorm) row = renormalize_possibility(row);
        rows.push_back(poss_to_prob_antipignistic(row));
      } else {
        if (tr_renorm) row = renormalize_probability(row);
        double sum = 0.0;
        for (Degree v : row) sum += v;
        if (std::abs(sum - 1.0) > 1e-9)
          throw ValidationError(tr_in + ": row " + std::to_string(i + 2) +
                                ": probability masses sum to " + format_degree(sum) +
                                " (use --renormalize)");
        rows.push_back(tr_method == "minspec" ? prob_to_poss_minspec(row)
                                              : prob_to_poss_antipignistic(row));
      }
    }
    write_distribution_csv(tr_out, file.header, rows);
    return kExitOk;
  }

  if (*cmd_backprop) {
    Cascade cascade = read_cascade_json(bp_rules);
    if (!bp_params.empty()) apply_parameters_json(bp_params, cascade);
    const RuleSet& set = bp_set.empty() ? cascade.sets().back() : cascade.set(bp_set);
    const Domain& out_dom = set.output_domain();
    DistributionFile targets = read_distribution_csv(bp_target);
    if (targets.header != out_dom.labels())
      throw ValidationError(bp_target + ": header does not match the output domain of '" +
                            set.name() + "'");
    if (targets.rows.empty()) throw ValidationError("no samples in the target file");
    SolutionPick pick = bp_pick == "high" ? SolutionPick::high : SolutionPick::low;

    std::map<std::string, std::vector<DegreeVector>> poss_rows, prob_rows;
    for (const DegreeVector& target : targets.rows) {
      OmegaSystem omega = build_omega_system(set, target);
      PremiseSolution sol = solve_omega(omega);
      if (!sol.consistent)
        throw ValidationError("target is not reachable: the inversion system is inconsistent "
                              "(Chebyshev distance " +
                              format_degree(sol.nabla) + ")");
      DistributionMap inputs = targeted_inputs(set, sol, pick);
      for (const auto& [attr, pi] : inputs) {
        poss_rows[attr].push_back(pi);
        prob_rows[attr].push_back(poss_to_prob_antipignistic(pi));
      }
    }
    fs::create_directories(bp_outdir);
    for (const auto& [attr, rows] : poss_rows) {
      const Domain& dom = cascade.attributes().at(attr);
      write_distribution_csv(fs::path(bp_outdir) / (attr + ".csv"), dom.labels(), rows);
      write_distribution_csv(fs::path(bp_outdir) / (attr + ".prob.csv"), dom.labels(),
                             prob_rows[attr]);
    }
    return kExitOk;
  }

  if (*gen_rules) {
    if (gr_problem == "addition") {
      write_cascade_json(gr_out, make_addition_cascade(AdditionSpec{gr_k}));
    } else if (gr_problem == "sudoku") {
      write_cascade_json(gr_out, make_sudoku_cascade(make_sudoku_spec(gr_side)));
    } else {
      throw ValidationError("unknown problem '" + gr_problem + "'");
    }
    return kExitOk;
  }

  if (*gen_data) {
    if (gd_problem != "addition")
      throw ValidationError("synthetic data generation covers addition only; supply sudoku "
                            "distributions via a manifest");
    AdditionSpec spec{gd_k};
    auto [samples, labels] = synth_addition_dataset(spec, gd_samples, gd_model, gd_label_seed);
    fs::create_directories(gd_outdir);
    std::vector<DegreeVector> rows;
    rows.reserve(gd_samples * 2 * gd_k);
    for (const ProblemSample& s : samples)
      for (std::size_t i = 1; i <= 2 * gd_k; ++i)
        rows.push_back(s.prob_inputs.at(spec.operand_attr(i)));
    write_distribution_csv(fs::path(gd_outdir) / "distributions.csv",
                           detail::digit_labels(10), rows);
    write_labels_csv(fs::path(gd_outdir) / "labels.csv", labels);
    Manifest m;
    m.problem = "addition";
    m.size = gd_k;
    m.distributions = "distributions.csv";
    m.labels = "labels.csv";
    m.split = gd_split;
    write_manifest_json(fs::path(gd_outdir) / "manifest.json", m);
    return kExitOk;
  }

  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NoReliableSampleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
