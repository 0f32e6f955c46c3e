#include <doctest.h>

#include <random>
#include <sstream>

#include "socl/cluster.hpp"
#include "socl/errors.hpp"
#include "socl/features.hpp"
#include "socl/ingest.hpp"
#include "socl/protocol.hpp"
#include "socl/synth.hpp"

using namespace socl;
using namespace socl::synth;
using features::StudentCounts;
using features::StudentFeatureTable;

namespace {

StudentFeatureTable recount(const ingest::CommentLog& log) {
  return features::aggregate_students(log, ingest::categorize(log));
}

PersonaSpec persona(std::string name, double proportion, CountDistribution ice, CountDistribution resp,
                    CountDistribution solo) {
  PersonaSpec p;
  p.name = std::move(name);
  p.proportion = proportion;
  p.counts = {ice, resp, solo};
  return p;
}

CohortSpec mimic_spec(std::uint64_t seed) {
  CohortSpec spec;
  spec.n_students = 2302;
  spec.seed = seed;
  spec.personas = {persona("Extrovert", 0.019, NegativeBinomial{10, 0.25}, NegativeBinomial{10, 0.0625},
                           NegativeBinomial{10, 0.28571}),
                   persona("Attempter", 0.077, NegativeBinomial{6, 0.42857}, NegativeBinomial{6, 0.19355},
                           NegativeBinomial{6, 0.11765}),
                   persona("Introvert", 0.904, NegativeBinomial{2, 0.56022}, NegativeBinomial{2, 0.35088},
                           NegativeBinomial{2, 0.27397})};
  return spec;
}

}  // namespace

TEST_CASE("minimal two-student log") {
  StudentFeatureTable table{{{"S", 1, 0, 1}, {"T", 0, 1, 0}}};
  std::vector<std::string> rebalancing;
  const auto log = build_comment_log(table, {}, rebalancing);
  CHECK(log.comments.size() == 3);
  CHECK(rebalancing.empty());
  CHECK(recount(log) == table);
  std::size_t replies = 0;
  for (const auto& c : log.comments) {
    if (c.parent_id) {
      ++replies;
      CHECK(c.author_id == "T");
    }
  }
  CHECK(replies == 1);
}

TEST_CASE("infeasible reply budgets: strict mode errors, default mode rebalances") {
  StudentFeatureTable table{{{"S", 5, 0, 0}, {"T", 0, 3, 0}}};
  std::vector<std::string> rebalancing;
  auto strict_table = table;
  try {
    build_comment_log(strict_table, {true, "x"}, rebalancing);
    FAIL("expected an infeasibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
  auto loose = table;
  const auto log = build_comment_log(loose, {}, rebalancing);
  CHECK_FALSE(rebalancing.empty());
  CHECK(recount(log) == loose);
  CHECK(loose.column_sum(features::Variable::Ice) <= loose.column_sum(features::Variable::Resp));
}

TEST_CASE("replies without any thread are rebalanced") {
  StudentFeatureTable table{{{"S", 0, 2, 0}, {"T", 0, 0, 3}}};
  std::vector<std::string> rebalancing;
  const auto log = build_comment_log(table, {}, rebalancing);
  CHECK_FALSE(rebalancing.empty());
  CHECK(recount(log) == table);
}

TEST_CASE("constant distributions give exact counts") {
  CohortSpec spec;
  spec.n_students = 10;
  spec.personas = {persona("A", 0.5, Constant{2}, Constant{3}, Constant{0}),
                   persona("B", 0.5, Constant{0}, Constant{1}, Constant{4})};
  const auto cohort = generate_features(spec);
  REQUIRE(cohort.table.rows.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& row = cohort.table.rows[i];
    if (cohort.persona[i] == 0) {
      CHECK(row == StudentCounts{row.student_id, 2, 3, 0});
    } else {
      CHECK(row == StudentCounts{row.student_id, 0, 1, 4});
    }
  }
  CHECK(std::count(cohort.persona.begin(), cohort.persona.end(), 0u) == 5);
}

TEST_CASE("generation is deterministic for a seed") {
  const auto spec = mimic_spec(42);
  const auto a = generate_comment_log(spec);
  const auto b = generate_comment_log(spec);
  std::ostringstream sa;
  std::ostringstream sb;
  ingest::write_comment_log(sa, a.log);
  ingest::write_comment_log(sb, b.log);
  CHECK(sa.str() == sb.str());
  CHECK(a.planted.persona == b.planted.persona);
  auto other = spec;
  other.seed = 43;
  CHECK_FALSE(generate_features(other).table == generate_features(spec).table);
}

TEST_CASE("mimic cohort has positive pooled skewness and kurtosis") {
  const auto cohort = generate_features(mimic_spec(1));
  for (auto v : features::kVariables) {
    const auto column = cohort.table.column(v);
    const auto s = features::descriptive_stats(column);
    CHECK(*s.skewness > 0.0);
    CHECK(*s.excess_kurtosis > 0.0);
  }
  for (const auto& row : cohort.table.rows) CHECK(row.total() >= 1);
}

TEST_CASE("round trip: categorize and aggregate reproduce the planted counts") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int attempt = 0; checked < 20 && attempt < 200; ++attempt) {
    CohortSpec spec;
    spec.n_students = 5 + rng() % 300;
    spec.seed = rng();
    spec.strict = true;
    const std::size_t personas = 1 + rng() % 3;
    for (std::size_t p = 0; p < personas; ++p) {
      std::uniform_real_distribution<double> unit(0.05, 0.95);
      spec.personas.push_back(persona("p" + std::to_string(p), 1.0 / personas, NegativeBinomial{1.0 + 3 * unit(rng), unit(rng)},
                                      LognormalRounded{1.0 + unit(rng), 0.5 * unit(rng)},
                                      NegativeBinomial{1.0, unit(rng)}));
    }
    SyntheticLog generated;
    try {
      generated = generate_comment_log(spec);
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::Infeasible);
      continue;
    }
    CHECK(recount(generated.log) == generated.planted.table);
    CHECK(generated.planted.table == generate_features(spec).table);
    CHECK(generated.rebalancing.empty());
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("spec files parse and round-trip") {
  const std::string text =
      "# comment line\n"
      "n_students = 100\n"
      "seed = 9\n"
      "emit = feature-table\n"
      "persona.A.proportion = 0.25\n"
      "persona.A.n_ice = negbin(2, 0.5)\n"
      "persona.A.n_resp = lognormal(1.5, 0.25)\n"
      "persona.A.n_solo = constant(3)  # trailing comment\n"
      "persona.B.proportion = 0.75\n"
      "persona.B.n_ice = constant(1)\n"
      "persona.B.n_resp = constant(1)\n"
      "persona.B.n_solo = constant(0)\n";
  std::istringstream in(text);
  const auto spec = parse_cohort_spec(in);
  CHECK(spec.n_students == 100);
  CHECK(spec.seed == 9);
  CHECK(spec.emit == EmitKind::FeatureTable);
  REQUIRE(spec.personas.size() == 2);
  CHECK(std::get<NegativeBinomial>(spec.personas[0].counts[0]).r == 2.0);
  CHECK(std::get<LognormalRounded>(spec.personas[0].counts[1]).mu == 1.5);
  CHECK(std::get<Constant>(spec.personas[0].counts[2]).value == 3);

  std::ostringstream out;
  write_cohort_spec(out, spec);
  std::istringstream again(out.str());
  const auto reparsed = parse_cohort_spec(again);
  CHECK(generate_features(reparsed).table == generate_features(spec).table);
}

TEST_CASE("invalid specs are rejected") {
  auto rejects = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_cohort_spec(in), Error);
  };
  rejects("seed = 1\n");                                                         // no n_students
  rejects("n_students = 10\n");                                                  // no personas
  rejects("n_students = 10\npersona.A.proportion = 0.5\n");                      // proportions
  rejects("n_students = 10\npersona.A.proportion = 1\npersona.A.n_ice = negbin(0, 0.5)\n");
  rejects("n_students = 10\npersona.A.proportion = 1\npersona.A.n_ice = negbin(1, 1.5)\n");
  rejects("n_students = 10\npersona.A.proportion = 1\npersona.A.n_ice = poisson(3)\n");
  rejects("n_students = 10\npersona.A.proportion = 1\npersona.A.likes = constant(1)\n");
  rejects("n_students = 1\npersona.A.proportion = 0.5\npersona.B.proportion = 0.5\n");
  rejects("n_students = 10\nbogus = 1\n");
  rejects("n_students = ten\n");

  CohortSpec silent;
  silent.n_students = 5;
  silent.personas = {persona("Z", 1.0, Constant{0}, Constant{0}, Constant{0})};
  CHECK_THROWS_AS(generate_features(silent), Error);
}

TEST_CASE("well-separated personas are recovered by the full pipeline") {
  CohortSpec spec;
  spec.n_students = 600;
  spec.seed = 5;
  spec.personas = {persona("High", 0.2, NegativeBinomial{400, 400.0 / 460}, NegativeBinomial{400, 400.0 / 560},
                           NegativeBinomial{400, 400.0 / 420}),
                   persona("Mid", 0.3, NegativeBinomial{400, 400.0 / 430}, NegativeBinomial{400, 400.0 / 430},
                           NegativeBinomial{400, 400.0 / 490}),
                   persona("Low", 0.5, NegativeBinomial{400, 400.0 / 402}, NegativeBinomial{400, 400.0 / 403},
                           NegativeBinomial{400, 400.0 / 404})};
  const auto generated = generate_comment_log(spec);
  const auto table = recount(generated.log);
  protocol::ProtocolConfig config;
  config.seed = 1;
  const auto report = protocol::run_protocol(table, config);
  REQUIRE(report.chosen_k);
  CHECK(*report.chosen_k == 3);
  const auto& chosen = *std::find_if(report.candidates.begin(), report.candidates.end(),
                                     [](auto& c) { return c.k == 3; });
  CHECK(cluster::adjusted_rand_index(chosen.clustering->assignments, generated.planted.persona) >= 0.99);
}
