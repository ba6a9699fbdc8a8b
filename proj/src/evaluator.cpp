#include "evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace protoforge {

template <typename T>
EvalReport evaluate(const Model<T>& model, const IndexedDataset& ds, const LabelLexicon& lex,
                    const EvalConfig& ec, const std::string& name) {
  ec.validate();
  if (ds.relation_count() < ec.n_way)
    throw ConfigError(strfmt("evaluate: dataset has %d relations, N = %d requested",
                             ds.relation_count(), ec.n_way));
  LossConfig no_rep;
  no_rep.variant = RepLossKind::kNone;

  EvalReport rep;
  rep.name = name.empty() ? variant_name(model.cfg.variant) : name;
  rep.n_way = ec.n_way;
  rep.k_shot = ec.k_shot;
  rep.n_query = ec.n_query;
  rep.episodes = ec.episodes;
  rep.seeds = ec.seeds;
  rep.base_seed = ec.base_seed;

  for (int s = 0; s < ec.seeds; ++s) {
    Rng rng(ec.base_seed, strfmt("eval:%d", s));
    long correct = 0, total = 0;
    for (int e = 0; e < ec.episodes; ++e) {
      Episode ep = sample_episode(ds, ec.n_way, ec.k_shot, ec.n_query, rng, ec.sampler);
      EpisodeForward<T> fwd = forward_episode(model, ep, lex, no_rep, Mode::kEval, nullptr);
      for (int q = 0; q < ep.query_count(); ++q) {
        int best = 0;
        for (int j = 1; j < fwd.dist.cols(); ++j)
          if (fwd.dist.at(q, j) < fwd.dist.at(q, best)) best = j;
        const std::string& truth = ep.relation_ids[ep.query_class[q]];
        const std::string& predicted = ep.relation_ids[best];
        ++rep.confusion[{truth, predicted}];
        if (best == ep.query_class[q]) ++correct;
        ++total;
      }
    }
    rep.per_seed_acc.push_back(total ? static_cast<double>(correct) / total : 0.0);
    rep.total_queries += total;
  }

  double sum = 0.0;
  for (double a : rep.per_seed_acc) sum += a;
  rep.mean_acc = sum / rep.per_seed_acc.size();
  if (rep.per_seed_acc.size() > 1) {
    double ss = 0.0;
    for (double a : rep.per_seed_acc) ss += (a - rep.mean_acc) * (a - rep.mean_acc);
    rep.std_acc = std::sqrt(ss / (rep.per_seed_acc.size() - 1));
  }
  return rep;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "report.name\t" << name << "\n";
  os << strfmt("report.n\t%d\n", n_way);
  os << strfmt("report.k\t%d\n", k_shot);
  os << strfmt("report.r\t%d\n", n_query);
  os << strfmt("report.episodes\t%d\n", episodes);
  os << strfmt("report.seeds\t%d\n", seeds);
  os << strfmt("report.base_seed\t%llu\n", static_cast<unsigned long long>(base_seed));
  os << strfmt("report.mean_acc\t%.6f\n", mean_acc);
  os << strfmt("report.std_acc\t%.6f\n", std_acc);
  os << strfmt("report.total_queries\t%ld\n", total_queries);
  for (size_t i = 0; i < per_seed_acc.size(); ++i)
    os << strfmt("report.seed_acc.%zu\t%.6f\n", i, per_seed_acc[i]);
  for (const auto& [key, count] : confusion)
    os << "confusion\t" << key.first << "\t" << key.second << "\t" << count << "\n";
  return os.str();
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << strfmt("%-12s %3s %3s %3s %9s %6s %10s %10s\n", "name", "N", "K", "R", "episodes",
               "seeds", "mean_acc", "std");
  os << strfmt("%-12s %3d %3d %3d %9d %6d %9.4f%% %9.4f%%\n", name.c_str(), n_way, k_shot,
               n_query, episodes, seeds, 100.0 * mean_acc, 100.0 * std_acc);
  return os.str();
}

std::string compare_reports(std::vector<EvalReport> reports) {
  if (reports.empty()) throw ConfigError("compare: no reports");
  for (const EvalReport& r : reports)
    if (r.n_way != reports[0].n_way || r.k_shot != reports[0].k_shot ||
        r.n_query != reports[0].n_query)
      throw ConfigError("compare: reports mix different (N, K, R) settings");
  std::sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
    if (a.mean_acc != b.mean_acc) return a.mean_acc > b.mean_acc;
    return a.name < b.name;
  });
  std::ostringstream os;
  os << strfmt("%d-way %d-shot, %d queries, %d episodes x %d seeds\n", reports[0].n_way,
               reports[0].k_shot, reports[0].n_query, reports[0].episodes, reports[0].seeds);
  os << strfmt("%-4s %-12s %10s %10s\n", "rank", "name", "mean_acc", "std");
  for (size_t i = 0; i < reports.size(); ++i)
    os << strfmt("%-4zu %-12s %9.4f%% %9.4f%%\n", i + 1, reports[i].name.c_str(),
                 100.0 * reports[i].mean_acc, 100.0 * reports[i].std_acc);
  return os.str();
}

template EvalReport evaluate<float>(const Model<float>&, const IndexedDataset&,
                                    const LabelLexicon&, const EvalConfig&, const std::string&);
template EvalReport evaluate<double>(const Model<double>&, const IndexedDataset&,
                                     const LabelLexicon&, const EvalConfig&,
                                     const std::string&);

}  // namespace protoforge
