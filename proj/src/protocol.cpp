#include "socl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "socl/errors.hpp"
#include "socl/parallel.hpp"

namespace socl::protocol {
namespace {

using features::Variable;

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string format_p(double p) {
  if (p < 0.001) return "<0.001";
  return format_fixed(p, 3);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::string_view to_string(Correction c) { return c == Correction::None ? "none" : "holm"; }

std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::NotConverged:
      return "not-converged";
    case DiscardReason::UnderrepresentedCluster:
      return "underrepresented-cluster";
    case DiscardReason::InfeasibleK:
      return "infeasible-k";
  }
  return "?";
}

std::string_view to_string(Persona p) {
  switch (p) {
    case Persona::Extrovert:
      return "Extrovert";
    case Persona::Attempter:
      return "Attempter";
    case Persona::Introvert:
      return "Introvert";
  }
  return "?";
}

std::size_t ProtocolConfig::resolved_k_max(std::size_t variable_count) const {
  return k_max ? *k_max : (std::size_t{1} << variable_count);
}

void ProtocolConfig::validate() const {
  const std::size_t kmax = resolved_k_max(features::kVariableCount);
  if (k_min < 1) throw invalid_argument("k_min must be at least 1");
  if (kmax < k_min) {
    throw invalid_argument("k_max (" + std::to_string(kmax) + ") is below k_min (" + std::to_string(k_min) + ")");
  }
  if (max_iterations < 1) throw invalid_argument("max_iterations must be at least 1");
  if (!(min_cluster_share >= 0.0 && min_cluster_share < 1.0)) throw invalid_argument("min_cluster_share must be in [0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_argument("alpha must be in (0, 1)");
  if (restarts < 1) throw invalid_argument("restarts must be at least 1");
}

std::vector<CandidateResult> sweep_k(const features::FeatureMatrix& matrix, const ProtocolConfig& config) {
  config.validate();
  const std::size_t kmax = config.resolved_k_max(matrix.values.cols());
  std::vector<CandidateResult> candidates(kmax - config.k_min + 1);
  parallel_for(candidates.size(), std::max<std::size_t>(1, config.threads), [&](std::size_t i) {
    auto& c = candidates[i];
    c.k = config.k_min + i;
    cluster::KMeansConfig km;
    km.k = c.k;
    km.max_iterations = config.max_iterations;
    km.seed = config.seed;
    km.init = config.init;
    try {
      c.clustering = cluster::kmeans_best_of(matrix.values, km, config.restarts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidArgument && e.kind() != ErrorKind::Infeasible) throw;
      c.discarded_reason = DiscardReason::InfeasibleK;
      c.discard_detail = e.what();
    }
  });
  return candidates;
}

std::vector<CandidateResult> filter_candidates(std::vector<CandidateResult> candidates, const ProtocolConfig& config) {
  for (auto& c : candidates) {
    if (c.discarded_reason || !c.clustering) continue;
    const auto& cl = *c.clustering;
    if (!cl.converged) {
      c.discarded_reason = DiscardReason::NotConverged;
      c.discard_detail = "no convergence within " + std::to_string(cl.iterations_run) + " iterations";
      continue;
    }
    const std::size_t n = cl.assignments.size();
    const auto smallest = std::min_element(cl.sizes.begin(), cl.sizes.end());
    const double share = static_cast<double>(*smallest) / static_cast<double>(n);
    if (share < config.min_cluster_share) {
      c.discarded_reason = DiscardReason::UnderrepresentedCluster;
      c.discard_detail = "cluster " + std::to_string(smallest - cl.sizes.begin()) + " holds " +
                         std::to_string(*smallest) + " of " + std::to_string(n) + " students (" +
                         format_fixed(100.0 * share, 2) + "%) < " + format_fixed(100.0 * config.min_cluster_share, 2) +
                         "%";
    }
  }
  return candidates;
}

ValidationReport validate_candidate(const features::StudentFeatureTable& raw, const cluster::ClusteringResult& clustering,
                                    const ProtocolConfig& config) {
  const std::size_t n = raw.rows.size();
  if (clustering.assignments.size() != n) {
    throw invalid_argument("validate_candidate: " + std::to_string(clustering.assignments.size()) +
                           " assignments for " + std::to_string(n) + " students");
  }
  const std::size_t k = clustering.k();
  // groups[v][c]: raw counts of variable v in cluster c
  std::array<std::vector<std::vector<double>>, features::kVariableCount> groups;
  for (auto& g : groups) g.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (auto v : features::kVariables) {
      groups[static_cast<std::size_t>(v)][clustering.assignments[i]].push_back(static_cast<double>(raw.rows[i].get(v)));
    }
  }
  auto infeasible = [](stattests::StatisticName name, std::string note) {
    stattests::TestResult r;
    r.statistic_name = name;
    r.feasible = false;
    r.p_value = 1.0;
    r.note = std::move(note);
    return r;
  };
  const bool small_cluster = std::any_of(clustering.sizes.begin(), clustering.sizes.end(), [](auto s) { return s < 2; });

  ValidationReport report;
  for (auto v : features::kVariables) {
    OmnibusTest t;
    t.variable = v;
    if (k < 2) {
      t.result = infeasible(stattests::StatisticName::H, "needs at least two clusters");
    } else if (small_cluster) {
      t.result = infeasible(stattests::StatisticName::H, "a cluster has fewer than two members");
      t.result.df = static_cast<int>(k) - 1;
    } else {
      t.result = stattests::kruskal_wallis(groups[static_cast<std::size_t>(v)]);
    }
    report.omnibus.push_back(std::move(t));
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      for (auto v : features::kVariables) {
        PairwiseTest t;
        t.cluster_a = a;
        t.cluster_b = b;
        t.variable = v;
        if (clustering.sizes[a] < 2 || clustering.sizes[b] < 2) {
          t.result = infeasible(stattests::StatisticName::U, "a cluster has fewer than two members");
        } else {
          const auto& g = groups[static_cast<std::size_t>(v)];
          t.result = stattests::mann_whitney_u(g[a], g[b]);
        }
        report.pairwise.push_back(std::move(t));
      }
    }
  }

  auto adjust = [&](auto& family) {
    std::vector<double> p;
    for (const auto& t : family) p.push_back(t.result.p_value);
    if (config.correction == Correction::Holm) p = stattests::holm_adjust(p);
    for (std::size_t i = 0; i < family.size(); ++i) family[i].adjusted_p = p[i];
  };
  adjust(report.omnibus);
  adjust(report.pairwise);

  auto significant = [&](const auto& t) { return t.result.feasible && t.adjusted_p < config.alpha; };
  report.fully_separated = k >= 2 && std::all_of(report.omnibus.begin(), report.omnibus.end(), significant) &&
                           std::all_of(report.pairwise.begin(), report.pairwise.end(), significant);
  return report;
}

Selection select_k(std::span<const CandidateResult> candidates, const ProtocolConfig& config) {
  std::vector<const CandidateResult*> ordered;
  for (const auto& c : candidates) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->k < b->k; });

  Selection sel;
  for (const auto* c : ordered) {
    if (!c->discarded_reason && c->validation && c->validation->fully_separated) {
      sel.chosen_k = std::max(sel.chosen_k.value_or(0), c->k);
    }
  }
  for (const auto* c : ordered) {
    const std::string head = "k=" + std::to_string(c->k) + ": ";
    if (c->discarded_reason) {
      sel.decision_trace.push_back(head + "discarded (" + std::string(to_string(*c->discarded_reason)) + "): " +
                                   c->discard_detail);
    } else if (!c->validation) {
      sel.decision_trace.push_back(head + "discarded (not-validated): no validation report");
    } else if (!c->validation->fully_separated) {
      std::vector<std::string> failures;
      std::size_t total = 0;
      for (const auto& t : c->validation->omnibus) {
        ++total;
        if (!(t.result.feasible && t.adjusted_p < config.alpha)) {
          failures.push_back("KW " + std::string(features::variable_name(t.variable)) +
                             (t.result.feasible ? " (p=" + format_p(t.adjusted_p) + ")" : " (infeasible)"));
        }
      }
      for (const auto& t : c->validation->pairwise) {
        ++total;
        if (!(t.result.feasible && t.adjusted_p < config.alpha)) {
          failures.push_back("MW " + std::string(features::variable_name(t.variable)) + " cluster " +
                             std::to_string(t.cluster_a) + " vs " + std::to_string(t.cluster_b) +
                             (t.result.feasible ? " (p=" + format_p(t.adjusted_p) + ")" : " (infeasible)"));
        }
      }
      std::string line = head + "discarded (not-fully-separated): " + std::to_string(failures.size()) + " of " +
                         std::to_string(total) + " tests not significant at alpha=" + format_fixed(config.alpha, 3);
      for (std::size_t i = 0; i < failures.size(); ++i) line += (i ? "; " : ": ") + failures[i];
      sel.decision_trace.push_back(std::move(line));
    } else if (sel.chosen_k && c->k < *sel.chosen_k) {
      sel.decision_trace.push_back(head + "discarded (superseded): fully separated, but k=" +
                                   std::to_string(*sel.chosen_k) +
                                   " is also fully separated and resolves the engagement levels further");
    } else {
      sel.decision_trace.push_back(head + "selected: largest fully separated candidate");
    }
  }
  if (!sel.chosen_k) sel.decision_trace.push_back("no candidate is fully separated; no k selected");
  return sel;
}

ClusterProfiles profile_clusters(const features::StudentFeatureTable& raw, const cluster::ClusteringResult& clustering) {
  const std::size_t n = raw.rows.size();
  if (clustering.assignments.size() != n) throw invalid_argument("profile_clusters: assignments do not match table");
  const std::size_t k = clustering.k();
  const std::size_t d = clustering.centers.cols();

  ClusterProfiles out;
  std::vector<std::array<std::vector<double>, features::kVariableCount>> values(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto v : features::kVariables) {
      values[clustering.assignments[i]][static_cast<std::size_t>(v)].push_back(static_cast<double>(raw.rows[i].get(v)));
    }
  }
  std::vector<double> engagement(k, 0.0);  // sum of standardized center coordinates
  for (std::size_t c = 0; c < k; ++c) {
    ClusterProfile p;
    p.cluster = c;
    p.size = values[c][0].size();
    p.share = n ? static_cast<double>(p.size) / static_cast<double>(n) : 0.0;
    for (std::size_t j = 0; j < features::kVariableCount; ++j) {
      const auto& col = values[c][j];
      if (col.empty()) continue;
      p.mean[j] = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
      p.median[j] = median_of(col);
    }
    p.center.assign(clustering.centers.row(c).begin(), clustering.centers.row(c).end());
    for (std::size_t j = 0; j < d; ++j) engagement[c] += p.center[j];
    out.clusters.push_back(std::move(p));
  }

  // Rank labels: most engaged first, cluster index breaks ties.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return engagement[a] > engagement[b]; });
  for (std::size_t r = 0; r < k; ++r) out.clusters[order[r]].label = "engagement-rank-" + std::to_string(r + 1);

  if (k != 3) return out;
  const std::size_t ice = static_cast<std::size_t>(Variable::Ice), resp = static_cast<std::size_t>(Variable::Resp);
  const std::size_t introvert = order[2];
  if (engagement[order[1]] == engagement[introvert]) {
    out.warnings.push_back("persona rule tie: two clusters share the lowest engagement sum; using rank labels");
    return out;
  }
  const std::size_t x = order[0], y = order[1];
  const double sx = out.clusters[x].center[ice] + out.clusters[x].center[resp];
  const double sy = out.clusters[y].center[ice] + out.clusters[y].center[resp];
  if (sx == sy) {
    out.warnings.push_back("persona rule tie: equal ice-breaking + responding center sums; using rank labels");
    return out;
  }
  const std::size_t extrovert = sx > sy ? x : y;
  const std::size_t attempter = sx > sy ? y : x;
  out.clusters[extrovert].persona = Persona::Extrovert;
  out.clusters[attempter].persona = Persona::Attempter;
  out.clusters[introvert].persona = Persona::Introvert;
  for (auto& p : out.clusters) p.label = std::string(to_string(*p.persona));
  return out;
}

KSelectionReport run_protocol(const features::StudentFeatureTable& input, const ProtocolConfig& config) {
  config.validate();
  const auto raw = features::canonical_order(input);
  const auto matrix = features::standardize(raw);

  KSelectionReport report;
  report.config = config;
  report.student_count = raw.rows.size();
  report.student_ids = matrix.student_ids;
  report.feature_summary = features::summarize_features(raw, config.denominator);
  report.candidates = filter_candidates(sweep_k(matrix, config), config);

  parallel_for(report.candidates.size(), std::max<std::size_t>(1, config.threads), [&](std::size_t i) {
    auto& c = report.candidates[i];
    if (!c.discarded_reason && c.clustering) c.validation = validate_candidate(raw, *c.clustering, config);
  });

  auto selection = select_k(report.candidates, config);
  report.chosen_k = selection.chosen_k;
  report.decision_trace = std::move(selection.decision_trace);

  if (report.chosen_k && config.profile) {
    for (const auto& c : report.candidates) {
      if (c.k == *report.chosen_k) report.profiles = profile_clusters(raw, *c.clustering);
    }
  }
  std::vector<cluster::ElbowPoint> points;
  for (const auto& c : report.candidates) {
    if (c.clustering) points.push_back({c.k, c.clustering->wcss});
  }
  report.elbow = cluster::elbow_from_points(std::move(points));
  return report;
}

}  // namespace socl::protocol
