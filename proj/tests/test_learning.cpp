#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "oracles.hpp"
#include "pirules/pirules.hpp"

using namespace pirules;
using Catch::Approx;

namespace {

struct RunningExample {
  AttributeTablePtr attrs;
  RuleSet first;
  RuleSet second;

  static RunningExample make() {
    auto table = std::make_shared<AttributeTable>();
    table->add("a1", Domain({"0", "1"}));
    table->add("a2", Domain({"0", "1"}));
    table->add("b", Domain({"(0,0)", "(0,1)", "(1,0)", "(1,1)"}));
    table->add("c", Domain({"0", "1"}));
    AttributeTablePtr attrs = table;
    std::vector<Rule> first{
        {{{"a1", {0}}}, {0, 1}},
        {{{"a1", {1}}}, {2, 3}},
        {{{"a2", {0}}}, {0, 2}},
        {{{"a2", {1}}}, {1, 3}},
    };
    std::vector<Rule> second{
        {{{"b", {0, 3}}}, {1}},
        {{{"b", {1, 2}}}, {0}},
    };
    return {attrs, RuleSet("b", "b", attrs, first), RuleSet("c", "c", attrs, second)};
  }

  // target over labels (0,0),(0,1),(1,0),(1,1) from cell degrees ((1,1),(0,1),(1,0),(0,0))
  static DegreeVector target_from_cells(Degree y11, Degree y01, Degree y10, Degree y00) {
    return {y00, y01, y10, y11};
  }
};

PremiseDegrees degrees(std::initializer_list<Degree> lambda, std::initializer_list<Degree> rho) {
  return {DegreeVector(lambda), DegreeVector(rho)};
}

}  // namespace

TEST_CASE("equation system of the expert-provided sample") {
  auto ex = RunningExample::make();
  // lambda/rho of the consistency example, target cells (0.2, 0.87, 0.2, 1)
  PremiseDegrees premise = degrees({0.12, 0.18, 1, 1}, {1, 1, 0.43, 0.66});
  DegreeVector target = RunningExample::target_from_cells(0.2, 0.87, 0.2, 1.0);
  EquationSystem sys = build_system(ex.first, premise, target);
  const double expected[4][8] = {{1, 1, 0.18, 1, 1, 0.43, 1, 1},
                                 {0.12, 1, 1, 1, 1, 0.43, 1, 1},
                                 {1, 1, 0.18, 1, 1, 1, 1, 0.66},
                                 {0.12, 1, 1, 1, 1, 1, 1, 0.66}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) REQUIRE(sys.gamma(i, j) == expected[i][j]);
  CHECK(sys.y == DegreeVector{0.2, 0.87, 0.2, 1.0});

  SECTION("its solutions") {
    SolveResult res = solve(sys);
    CHECK(res.consistent);
    CHECK(res.nabla == 0.0);
    CHECK(res.e_low == DegreeVector{1, 0, 0.2, 0, 0, 0.87, 0, 1});
    CHECK(res.e_high == DegreeVector{1, 0.2, 0.2, 1, 1, 0.87, 0.87, 1});
    CHECK(res.x_approx == res.e_low);
    CHECK(res.y_approx == sys.y);
  }
}

TEST_CASE("second chained system and its solutions") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({0.25, 0.35}, {1, 1});
  EquationSystem sys = build_system(ex.second, premise, DegreeVector{0.4, 1.0});
  // cells are {0} then {1}
  CHECK(sys.y == DegreeVector{0.4, 1.0});
  SolveResult res = solve(sys);
  CHECK(res.consistent);
  CHECK(res.e_low == DegreeVector{1, 0, 0.4, 0});
  CHECK(res.e_high == DegreeVector{1, 0.4, 0.4, 1});
}

TEST_CASE("all-zero target gives an all-zero second member") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({1, 0, 1, 0}, {0, 1, 0, 1});
  EquationSystem sys = build_system(ex.first, premise, DegreeVector(4, 0.0));
  CHECK(sys.y == DegreeVector(4, 0.0));
}

TEST_CASE("second member equals the cell-wise possibility of the target") {
  oracles::Rng rng(31);
  for (int it = 0; it < 100; ++it) {
    auto sys = oracles::random_system(rng, 1 + rng() % 8, 2 + rng() % 12, 1);
    DistributionMap in = oracles::random_inputs(rng, sys);
    PremiseDegrees premise = premise_degrees(*sys.set, in);
    DegreeVector target = oracles::random_degrees(rng, sys.set->output_domain().size());
    EquationSystem es = build_system(*sys.set, premise, target);
    const PartitionIndex& part = sys.set->partition();
    for (std::size_t k = 0; k < part.omega(); ++k) {
      double expected = 0.0;
      for (std::size_t u : part.cell(k).indices()) expected = std::max(expected, target[u]);
      REQUIRE(es.y[k] == expected);
    }
  }
}

TEST_CASE("inconsistent crisp sample: distance and repaired system") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({1, 0, 1, 0}, {0, 1, 0, 1});
  DegreeVector target = RunningExample::target_from_cells(0.005, 0, 0, 1.0);
  EquationSystem sys = build_system(ex.first, premise, target);
  REQUIRE(sys.y == DegreeVector{0.005, 0, 0, 1});

  DegreeVector row_dist = chebyshev_row_distances_reference(sys.gamma, sys.y);
  CHECK(row_dist == DegreeVector{0, 0.0025, 0.0025, 0});
  CHECK(chebyshev_distance(sys) == 0.0025);

  SolveResult res = solve(sys);
  CHECK_FALSE(res.consistent);
  CHECK(res.nabla == 0.0025);
  CHECK(res.y_approx == DegreeVector{0.0025, 0.0025, 0.0025, 1});
  CHECK(res.x_approx == DegreeVector{0, 0.0025, 0.0025, 0, 0, 0.0025, 0.0025, 0});
  CHECK(reliable(sys, 0.01));
  CHECK_FALSE(reliable(sys, 0.001));
}

TEST_CASE("reliability threshold semantics") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({1, 1, 0.1, 1}, {1, 1, 1, 0.1});
  DegreeVector target = RunningExample::target_from_cells(0, 1, 0, 0);
  EquationSystem sys = build_system(ex.first, premise, target);
  CHECK(chebyshev_distance(sys) == 1.0);
  CHECK_FALSE(reliable(sys, 0.05));
  CHECK(reliable(sys, 1.001));  // any threshold above 1 selects everything
  CHECK_THROWS_AS(reliable(sys, 0.0), ValidationError);
}

TEST_CASE("stacking two samples reproduces the worked approximate parameters") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({1, 0, 1, 0}, {0, 1, 0, 1});
  std::vector<std::pair<PremiseDegrees, DegreeVector>> samples{
      {premise, RunningExample::target_from_cells(0, 0, 0, 1.0)},
      {premise, RunningExample::target_from_cells(0.005, 0, 0, 1.0)},
  };
  LearnOutcome out = learn_from_premises(ex.first, samples, 0.01);
  REQUIRE(out.report.samples.size() == 2);
  CHECK(out.report.samples[0].nabla == 0.0);
  CHECK(out.report.samples[1].nabla == 0.0025);
  CHECK(out.report.reliable_count == 2);
  CHECK(out.report.stacked_nabla == 0.00125);
  std::vector<std::pair<Degree, Degree>> expected{
      {0, 0.00125}, {0.00125, 0}, {0, 0.00125}, {0.00125, 0}};
  CHECK(out.parameters == expected);
}

TEST_CASE("a single consistent sample learns its lowest solution") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({0.12, 0.18, 1, 1}, {1, 1, 0.43, 0.66});
  DegreeVector target = RunningExample::target_from_cells(0.2, 0.87, 0.2, 1.0);
  LearnOutcome out = learn_from_premises(ex.first, {{premise, target}}, 1.001);
  SolveResult res = solve(build_system(ex.first, premise, target));
  std::vector<std::pair<Degree, Degree>> expected;
  for (std::size_t j = 0; j < 4; ++j)
    expected.emplace_back(res.e_low[2 * j], res.e_low[2 * j + 1]);
  CHECK(out.parameters == expected);
}

TEST_CASE("no reliable sample raises the stage-tagged error") {
  auto ex = RunningExample::make();
  PremiseDegrees premise = degrees({1, 1, 1, 1}, {1, 1, 1, 1});
  DegreeVector target = RunningExample::target_from_cells(0, 1, 0, 0);
  try {
    learn_from_premises(ex.first, {{premise, target}}, 1e-6);
    FAIL("expected NoReliableSampleError");
  } catch (const NoReliableSampleError& e) {
    CHECK(e.stage == "b");
  }
}

TEST_CASE("sweep distance equals the reference on random systems") {
  oracles::Rng rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int it = 0; it < 150; ++it) {
    std::size_t rows = 1 + rng() % 40, cols = 1 + rng() % 8;
    DegreeMatrix gamma(rows, cols);
    DegreeVector y(rows);
    // a coarse value grid provokes ties and duplicates
    auto coarse = [&] { return std::round(unit(rng) * 8.0) / 8.0; };
    for (std::size_t r = 0; r < rows; ++r) {
      y[r] = coarse();
      for (std::size_t c = 0; c < cols; ++c) gamma(r, c) = coarse();
    }
    DegreeVector ref = chebyshev_row_distances_reference(gamma, y);
    DegreeVector fast = chebyshev_row_distances_sweep(gamma, y);
    REQUIRE(ref == fast);
  }
}

TEST_CASE("sweep distance equals the reference on a tall stacked system") {
  // shaped like a real stack: blocks of equation matrices over the running
  // example with continuous premise degrees
  auto ex = RunningExample::make();
  oracles::Rng rng(909);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StackedSystem stack;
  for (int block = 0; block < 200; ++block) {
    DistributionMap in{{"a1", oracles::random_normalized(rng, 2)},
                       {"a2", oracles::random_normalized(rng, 2)}};
    PremiseDegrees premise = premise_degrees(ex.first, in);
    DegreeVector target(4, 0.0);
    target[rng() % 4] = 1.0;
    if (unit(rng) < 0.5) target[rng() % 4] = unit(rng);
    EquationSystem sys = build_system(ex.first, premise, target);
    stack.gamma.append_rows(sys.gamma);
    stack.y.insert(stack.y.end(), sys.y.begin(), sys.y.end());
  }
  REQUIRE(stack.gamma.rows() == 800);
  DegreeVector ref = chebyshev_row_distances_reference(stack.gamma, stack.y);
  DegreeVector fast = chebyshev_row_distances_sweep(stack.gamma, stack.y);
  REQUIRE(ref == fast);
}

TEST_CASE("cascade learning is independent of the job count") {
  AdditionSpec spec{1};
  auto [samples, labels] = synth_addition_dataset(spec, 60, SyntheticNoiseModel{0.9, 1.0, 13}, 14);
  auto train = to_training_samples(samples, TransformMethod::antipignistic);
  std::map<std::string, double> taus{{"c", 1.001}, {"w", 1.001}, {"y", 1.001}};
  Cascade serial = make_addition_cascade(spec);
  Cascade parallel = make_addition_cascade(spec);
  cascade_learn(serial, train, taus, {}, 1);
  cascade_learn(parallel, train, taus, {}, 4);
  for (std::size_t s = 0; s < serial.sets().size(); ++s)
    for (std::size_t i = 0; i < serial.sets()[s].size(); ++i) {
      REQUIRE(serial.sets()[s].rules()[i].s == parallel.sets()[s].rules()[i].s);
      REQUIRE(serial.sets()[s].rules()[i].r == parallel.sets()[s].rules()[i].r);
    }
}

TEST_CASE("distance against the grid-search oracle on tiny systems") {
  oracles::Rng rng(2024);
  int done = 0;
  for (int it = 0; done < 30; ++it) {
    auto sys = oracles::random_system(rng, 1 + rng() % 2, 2 + rng() % 3, 1);
    DistributionMap in = oracles::random_inputs(rng, sys);
    PremiseDegrees premise = premise_degrees(*sys.set, in);
    DegreeVector target = oracles::random_degrees(rng, sys.set->output_domain().size());
    EquationSystem es = build_system(*sys.set, premise, target);
    if (es.gamma.rows() > 4) continue;
    double grid = oracles::grid_chebyshev_oracle(es.gamma, es.y, 0.05);
    double nabla = chebyshev_distance(es);
    REQUIRE(nabla <= grid + 1e-12);
    REQUIRE(grid <= nabla + 0.05);
    ++done;
  }
}

TEST_CASE("compatibility: any solution between the bounds reproduces the sample") {
  oracles::Rng rng(555);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int it = 0; it < 150; ++it) {
    auto sys = oracles::random_system(rng, 1 + rng() % 6, 2 + rng() % 10, 1);
    DistributionMap in = oracles::random_inputs(rng, sys);
    // consistent by construction: the target is an inferred output
    std::vector<std::pair<Degree, Degree>> params;
    for (std::size_t i = 0; i < sys.set->size(); ++i) params.emplace_back(unit(rng), unit(rng));
    sys.set->set_parameters(params);
    DegreeVector target = infer(*sys.set, in);
    PremiseDegrees premise = premise_degrees(*sys.set, in);
    EquationSystem es = build_system(*sys.set, premise, target);
    SolveResult res = solve(es);
    REQUIRE(res.consistent);

    // sandwich property
    REQUIRE(minmax_product(es.gamma, res.e_low) == minmax_product(es.gamma, res.e_high));

    // pick a random vector between the bounds and infer with it
    std::vector<std::pair<Degree, Degree>> learned;
    for (std::size_t j = 0; j < sys.set->size(); ++j) {
      double lo_s = res.e_low[2 * j], hi_s = res.e_high[2 * j];
      double lo_r = res.e_low[2 * j + 1], hi_r = res.e_high[2 * j + 1];
      learned.emplace_back(lo_s + unit(rng) * (hi_s - lo_s), lo_r + unit(rng) * (hi_r - lo_r));
    }
    sys.set->set_parameters(learned);
    DegreeVector cells = infer_cells(build_inference_matrix(*sys.set), premise);
    REQUIRE(cells == es.y);
  }
}

TEST_CASE("approximation guarantees hold for every system") {
  oracles::Rng rng(666);
  for (int it = 0; it < 200; ++it) {
    auto sys = oracles::random_system(rng, 1 + rng() % 6, 2 + rng() % 10, 1);
    DistributionMap in = oracles::random_inputs(rng, sys);
    PremiseDegrees premise = premise_degrees(*sys.set, in);
    DegreeVector target = oracles::random_degrees(rng, sys.set->output_domain().size());
    EquationSystem es = build_system(*sys.set, premise, target);
    SolveResult res = solve(es);
    // the residual recomputes nabla through a different operation chain, so
    // allow last-bit rounding differences
    REQUIRE(linf_distance(minmax_product(es.gamma, res.x_approx), es.y) ==
            Approx(res.nabla).margin(1e-12));
    REQUIRE(linf_distance(res.y_approx, es.y) == Approx(res.nabla).margin(1e-12));
    // sandwich property, consistent or not
    REQUIRE(minmax_product(es.gamma, res.e_low) == minmax_product(es.gamma, res.e_high));
    // the repaired system is consistent
    REQUIRE(chebyshev_distance(es.gamma, res.y_approx) == 0.0);
    REQUIRE(res.e_low.size() == res.e_high.size());
    for (std::size_t l = 0; l < res.e_low.size(); ++l)
      REQUIRE(res.e_low[l] <= res.e_high[l]);
  }
}

TEST_CASE("one-hot targets keep a unique argmax when the distance stays below one half") {
  oracles::Rng rng(777);
  int done = 0;
  for (int it = 0; done < 200 && it < 4000; ++it) {
    auto sys = oracles::random_system(rng, 1 + rng() % 6, 2 + rng() % 10, 1);
    DistributionMap in = oracles::random_inputs(rng, sys);
    PremiseDegrees premise = premise_degrees(*sys.set, in);
    const PartitionIndex& part = sys.set->partition();
    DegreeVector y(part.omega(), 0.0);
    std::size_t hot = rng() % part.omega();
    y[hot] = 1.0;
    EquationSystem es{build_equation_matrix(*sys.set, premise), y, &part};
    SolveResult res = solve(es);
    if (res.nabla >= 0.5) continue;
    auto arg = unique_argmax(res.y_approx);
    REQUIRE(arg.has_value());
    REQUIRE(*arg == hot);
    ++done;
  }
  REQUIRE(done == 200);
}

TEST_CASE("stacking order does not change the learned parameters") {
  oracles::Rng rng(888);
  auto ex = RunningExample::make();
  std::vector<std::pair<PremiseDegrees, DegreeVector>> samples;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    DistributionMap in{{"a1", oracles::random_normalized(rng, 2)},
                       {"a2", oracles::random_normalized(rng, 2)}};
    DegreeVector target(4, 0.0);
    target[rng() % 4] = 1.0;
    samples.emplace_back(premise_degrees(ex.first, in), target);
  }
  LearnOutcome a = learn_from_premises(ex.first, samples, 1.001);
  std::shuffle(samples.begin(), samples.end(), rng);
  LearnOutcome b = learn_from_premises(ex.first, samples, 1.001);
  CHECK(a.parameters == b.parameters);
}

TEST_CASE("cascade learning walks the worked example end to end") {
  auto ex = RunningExample::make();
  Cascade cascade(ex.attrs, {ex.first, ex.second});

  std::vector<TrainingSample> samples(4);
  samples[0].inputs = {{"a1", {1, 0.01}}, {"a2", {0.04, 1}}};
  samples[0].targets = {{"b", 1}, {"c", 0}};  // (0,1), different
  samples[1].inputs = {{"a1", {0.03, 1}}, {"a2", {0.02, 1}}};
  samples[1].targets = {{"b", 3}, {"c", 1}};  // (1,1), same
  samples[2].inputs = {{"a1", {1, 1}}, {"a2", {0.1, 1}}};
  samples[2].targets = {{"b", 1}, {"c", 0}};
  samples[3].inputs = {{"a1", {1, 0.01}}, {"a2", {0.05, 1}}};
  samples[3].targets = {{"b", 0}, {"c", 1}};  // mislabeled sample

  std::map<std::string, double> taus{{"b", 0.05}, {"c", 0.05}};
  CascadeLearnReport report = cascade_learn(cascade, samples, taus);

  REQUIRE(report.stages.size() == 2);
  const LearnReport& stage1 = report.stages[0].learn;
  CHECK(stage1.samples[0].nabla == 0.04);
  CHECK(stage1.samples[1].nabla == 0.03);
  CHECK(stage1.samples[2].nabla == 1.0);
  CHECK(stage1.samples[3].nabla == 1.0);
  CHECK(stage1.samples[0].selected);
  CHECK(stage1.samples[1].selected);
  CHECK_FALSE(stage1.samples[2].selected);
  CHECK_FALSE(stage1.samples[3].selected);
  CHECK(stage1.reliable_count == 2);
  CHECK(stage1.stacked_nabla == 0.0);

  const LearnReport& stage2 = report.stages[1].learn;
  CHECK(stage2.samples[0].nabla == 0.04);
  CHECK(stage2.samples[1].nabla == 0.03);
  CHECK(stage2.samples[2].nabla == 1.0);
  CHECK(stage2.samples[3].nabla == 1.0);
  CHECK(stage2.reliable_count == 2);

  for (const RuleSet& set : cascade.sets())
    for (const Rule& rule : set.rules()) {
      CHECK(rule.s == 0.0);
      CHECK(rule.r == 0.0);
    }

  // intermediate inferred distributions, cell order (1,1),(0,1),(1,0),(0,0)
  CompiledCascade compiled = compile(cascade);
  const DegreeVector expected_b[4] = {
      {0.04, 1, 0.01, 0.01},  // label order (0,0),(0,1),(1,0),(1,1)
      {0.02, 0.03, 0.02, 1},
      {0.1, 1, 0.1, 1},
      {0.05, 1, 0.01, 0.01},
  };
  for (int i = 0; i < 4; ++i) {
    DistributionMap out = infer_cascade(compiled, samples[i].inputs);
    REQUIRE(out.at("b") == expected_b[i]);
  }
}

TEST_CASE("other vectors between the bounds solve the worked stacked systems") {
  auto ex = RunningExample::make();
  // stage-1 stack of the worked cascade: repaired members of samples 1 and 2
  DegreeMatrix g1(4, 8), g2(4, 8);
  const double rows1[4][8] = {{1, 0.01, 0.01, 1, 1, 1, 1, 1},
                              {1, 1, 1, 1, 1, 1, 1, 1},
                              {1, 0.01, 0.01, 1, 0.04, 1, 1, 0.04},
                              {1, 1, 1, 1, 0.04, 1, 1, 0.04}};
  const double rows2[4][8] = {{1, 1, 1, 1, 1, 1, 1, 1},
                              {0.03, 1, 1, 0.03, 1, 1, 1, 1},
                              {1, 1, 1, 1, 0.02, 1, 1, 0.02},
                              {0.03, 1, 1, 0.03, 0.02, 1, 1, 0.02}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) {
      g1(i, j) = rows1[i][j];
      g2(i, j) = rows2[i][j];
    }
  StackedSystem stack;
  stack.gamma.append_rows(g1);
  stack.gamma.append_rows(g2);
  stack.y = {0.01, 1, 0.01, 0.04, 1, 0.03, 0.02, 0.02};
  StackedSolution sol = solve_stacked(stack);
  CHECK(sol.nabla == 0.0);
  CHECK(sol.x == DegreeVector(8, 0.0));
  DegreeVector alternative{0.03, 0.01, 0.01, 0.03, 0.02, 1, 1, 0.02};
  CHECK(minmax_product(stack.gamma, alternative) == stack.y);

  // stage-2 stack and its alternative solution
  DegreeMatrix gp(4, 4);
  const double rowsp[4][4] = {
      {1, 1, 1, 1}, {0.04, 1, 1, 0.04}, {1, 0.03, 0.03, 1}, {1, 1, 1, 1}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) gp(i, j) = rowsp[i][j];
  DegreeVector yp{1, 0.04, 0.03, 1};
  CHECK(chebyshev_distance(gp, yp) == 0.0);
  CHECK(maxeps_product_transpose_of(gp, yp) == DegreeVector(4, 0.0));
  CHECK(minmax_product(gp, DegreeVector{0.04, 0.03, 0.03, 0.04}) == yp);
}

TEST_CASE("a one-stage cascade matches learn_ruleset") {
  auto ex = RunningExample::make();
  Cascade cascade(ex.attrs, {ex.first});
  std::vector<TrainingSample> samples(2);
  samples[0].inputs = {{"a1", {1, 0.01}}, {"a2", {0.04, 1}}};
  samples[0].targets = {{"b", 1}};
  samples[1].inputs = {{"a1", {0.03, 1}}, {"a2", {0.02, 1}}};
  samples[1].targets = {{"b", 3}};
  cascade_learn(cascade, samples, {{"b", 0.05}});

  std::vector<LearnSample> ls(2);
  ls[0] = {samples[0].inputs, one_hot(4, 1)};
  ls[1] = {samples[1].inputs, one_hot(4, 3)};
  LearnOutcome direct = learn_ruleset(ex.first, ls, 0.05);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(cascade.sets()[0].rules()[i].s == direct.parameters[i].first);
    CHECK(cascade.sets()[0].rules()[i].r == direct.parameters[i].second);
  }
}

TEST_CASE("threshold candidate set") {
  ThresholdConfig cfg;  // l=30, h=5, eps=0.001
  std::vector<double> t = threshold_candidates(cfg);
  REQUIRE(t.size() == 30);
  CHECK(t.front() == Approx(4.119e-8).margin(1e-11));
  CHECK(t.back() == 1.001);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  CHECK(t.back() > 1.0);

  ThresholdConfig low{30, 2.0, 1e-3, 0.01, 1};
  CHECK(threshold_candidates(low).front() == Approx(1.112e-3).margin(1e-6));

  CHECK_THROWS_AS(threshold_candidates(ThresholdConfig{0, 5, 1e-3, 0.01, 1}),
                  ValidationError);
  CHECK_THROWS_AS(threshold_candidates(ThresholdConfig{30, 0.5, 1e-3, 0.01, 1}),
                  ValidationError);
}

TEST_CASE("threshold search stops on stagnation and keeps the lowest best tau") {
  auto ex = RunningExample::make();
  Cascade cascade(ex.attrs, {ex.first, ex.second});
  // clean samples: every candidate threshold that admits them learns the
  // same zero parameters, so accuracy stabilizes immediately
  std::vector<TrainingSample> train(2), valid(2);
  train[0].inputs = {{"a1", {1, 0.01}}, {"a2", {0.04, 1}}};
  train[0].targets = {{"b", 1}, {"c", 0}};
  train[1].inputs = {{"a1", {0.03, 1}}, {"a2", {0.02, 1}}};
  train[1].targets = {{"b", 3}, {"c", 1}};
  valid[0].inputs = {{"a1", {1, 0}}, {"a2", {0, 1}}};
  valid[0].targets = {{"c", 0}};
  valid[1].inputs = {{"a1", {0, 1}}, {"a2", {0, 1}}};
  valid[1].targets = {{"c", 1}};

  ThresholdConfig cfg;
  ThresholdSearchResult res = threshold_search(cascade, train, valid, cfg);
  REQUIRE_FALSE(res.trials.empty());
  CHECK(res.best_accuracy == 1.0);
  // the per-sample distances are 0.03/0.04, so candidates at or below 0.03
  // are infeasible and the chosen tau is the first feasible one
  double first_feasible = 0.0;
  for (const ThresholdTrial& t : res.trials)
    if (t.feasible) {
      first_feasible = t.tau;
      break;
    }
  CHECK(first_feasible > 0.03);
  CHECK(first_feasible < 0.04);
  CHECK(res.taus.at("b") == first_feasible);
  CHECK(res.taus.at("c") == first_feasible);
  // lockstep increments: trial taus strictly increase
  for (std::size_t i = 1; i < res.trials.size(); ++i)
    CHECK(res.trials[i].tau > res.trials[i - 1].tau);
  // stagnation = 1 stops right after the first non-improving evaluation
  std::size_t feasible_count = 0;
  for (const ThresholdTrial& t : res.trials) feasible_count += t.feasible;
  CHECK(feasible_count == 2);
}

TEST_CASE("learning on noiseless synthetic addition yields zero parameters") {
  AdditionSpec spec{1};
  Cascade cascade = make_addition_cascade(spec);
  SyntheticNoiseModel noiseless{0.9, 0.0, 7};
  auto [samples, labels] = synth_addition_dataset(spec, 40, noiseless, 11);
  auto train = to_training_samples(samples, TransformMethod::antipignistic);
  std::map<std::string, double> taus{{"c", 1.001}, {"w", 1.001}, {"y", 1.001}};
  cascade_learn(cascade, train, taus);
  for (const RuleSet& set : cascade.sets())
    for (const Rule& rule : set.rules()) {
      REQUIRE(rule.s == 0.0);
      REQUIRE(rule.r == 0.0);
    }
  CHECK(final_output_accuracy(cascade, train) == 1.0);
}
