#pragma once

// CSV writers for the report tables. Numbers use shortest round-trip
// formatting so identical runs produce identical bytes.

#include "modechoice/econ.hpp"
#include "modechoice/eval.hpp"
#include "modechoice/interpret.hpp"
#include "modechoice/mnl.hpp"

namespace modechoice {

inline void write_mnl_estimate_tables(const MnlSpec& spec,
                                      const MnlEstimate& est,
                                      const std::filesystem::path& dir) {
  std::string out = "slot,estimate,std_error,t_stat\n";
  const auto slots = spec.slot_names();
  for (std::size_t j = 0; j < slots.size(); ++j) {
    out += slots[j];
    out += ',';
    out += format_double(est.params[j]);
    out += ',';
    out += format_double(est.std_errors[j]);
    out += ',';
    out += format_double(est.t_stats[j]);
    out += '\n';
  }
  atomic_write_file(dir / "mnl_estimates.csv", out);

  std::string summary = "metric,value\n";
  auto add = [&summary](const char* k, double v) {
    summary += k;
    summary += ',';
    summary += format_double(v);
    summary += '\n';
  };
  add("ll_final", est.ll_final);
  add("ll_constants_only", est.ll_constants_only);
  add("rho2", est.rho2);
  add("adj_rho2", est.adj_rho2);
  add("n_obs", static_cast<double>(est.n_obs));
  add("iterations", static_cast<double>(est.iterations));
  add("converged", est.converged ? 1 : 0);
  add("quasi_separation", est.quasi_separation ? 1 : 0);
  atomic_write_file(dir / "mnl_summary.csv", summary);
}

inline std::string hyper_string(const ParamMap& p) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ' ';
    s += k;
    s += '=';
    s += format_double(v);
  }
  return s;
}

inline void write_tuning_log(const GridSearchResult& res,
                             const std::filesystem::path& path) {
  std::string out = "trial,params,mean_cv_macro_f1,failed,error,fold_scores\n";
  for (std::size_t t = 0; t < res.trials.size(); ++t) {
    const auto& trial = res.trials[t];
    out += std::to_string(t);
    out += ',';
    out += hyper_string(trial.params);
    out += ',';
    out += trial.failed ? "" : format_double(trial.mean_score);
    out += ',';
    out += trial.failed ? "1" : "0";
    out += ',';
    out += trial.error;
    out += ',';
    for (std::size_t f = 0; f < trial.fold_scores.size(); ++f) {
      if (f) out += ' ';
      out += format_double(trial.fold_scores[f]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline void write_confusion_tables(const ConfusionMatrix& cm,
                                   const std::filesystem::path& dir,
                                   const std::string& tag) {
  std::string counts = "actual";
  for (const char* t : kModeTags) {
    counts += ",";
    counts += t;
  }
  counts += '\n';
  std::string pct = counts;
  for (int a = 0; a < kNumModes; ++a) {
    counts += kModeTags[a];
    pct += kModeTags[a];
    std::int64_t row_total = 0;
    for (int p = 0; p < kNumModes; ++p) row_total += cm.m[a][p];
    for (int p = 0; p < kNumModes; ++p) {
      counts += ',';
      counts += std::to_string(cm.m[a][p]);
      pct += ',';
      pct += format_double(row_total > 0 ? 100.0 * cm.m[a][p] / row_total
                                         : 0.0);
    }
    counts += '\n';
    pct += '\n';
  }
  atomic_write_file(dir / ("confusion_" + tag + ".csv"), counts);
  atomic_write_file(dir / ("confusion_" + tag + "_pct.csv"), pct);
}

struct ScoreRow {
  std::string model;
  double train_macro_f1 = 0;
  double test_macro_f1 = 0;
  double train_accuracy = 0;
  double test_accuracy = 0;
  double cv_score = std::numeric_limits<double>::quiet_NaN();
  ParamMap hyper;
};

inline void write_score_table(const std::vector<ScoreRow>& rows,
                              const std::filesystem::path& path) {
  std::string out =
      "model,train_macro_f1,test_macro_f1,train_accuracy_pct,"
      "test_accuracy_pct,cv_macro_f1,hyperparameters\n";
  for (const auto& r : rows) {
    out += r.model;
    out += ',';
    out += format_double(r.train_macro_f1);
    out += ',';
    out += format_double(r.test_macro_f1);
    out += ',';
    out += format_double(r.train_accuracy);
    out += ',';
    out += format_double(r.test_accuracy);
    out += ',';
    out += std::isnan(r.cv_score) ? "" : format_double(r.cv_score);
    out += ',';
    out += hyper_string(r.hyper);
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline void write_modal_share_table(const ModalShareReport& rep,
                                    const std::filesystem::path& path) {
  std::string out = "mode,actual_share";
  for (const auto& m : rep.models) {
    out += ',' + m + "_share," + m + "_deviation";
  }
  out += '\n';
  for (int c = 0; c < kNumModes; ++c) {
    out += kModeTags[c];
    out += ',';
    out += format_double(rep.actual[c]);
    for (std::size_t m = 0; m < rep.models.size(); ++m) {
      out += ',';
      out += format_double(rep.shares(m, c));
      out += ',';
      out += format_double(rep.deviations(m, c));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline void write_centroid_table(const CentroidDistances& cd,
                                 const std::filesystem::path& path) {
  std::string out = "mode";
  for (const char* t : kModeTags) {
    out += ",";
    out += t;
  }
  out += '\n';
  for (int a = 0; a < kNumModes; ++a) {
    out += kModeTags[a];
    for (int b = 0; b < kNumModes; ++b) {
      out += ',';
      out += format_double(cd.distance[a][b]);
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline void write_average_ice(const AverageIce& avg,
                              const std::filesystem::path& path) {
  std::string out = "feature,grid_value,class,mean_probability\n";
  for (std::size_t g = 0; g < avg.grid.size(); ++g)
    for (int c = 0; c < kNumModes; ++c) {
      out += avg.feature;
      out += ',';
      out += format_double(avg.grid[g]);
      out += ',';
      out += kModeTags[c];
      out += ',';
      out += format_double(avg.mean_probs[g][c]);
      out += '\n';
    }
  atomic_write_file(path, out);
}

inline void write_scenario_delta_table(
    const std::vector<std::pair<std::string, std::vector<ScenarioDelta>>>&
        per_model,
    const std::filesystem::path& path) {
  std::string out = "model,scenario,class,delta_pp\n";
  for (const auto& [model, deltas] : per_model)
    for (const auto& d : deltas)
      for (int c = 0; c < kNumModes; ++c) {
        out += model;
        out += ',';
        out += d.scenario;
        out += ',';
        out += kModeTags[c];
        out += ',';
        out += format_double(d.delta_pp[c]);
        out += '\n';
      }
  atomic_write_file(path, out);
}

inline void write_elasticity_table(const std::vector<ElasticityRow>& cost,
                                   const std::vector<ElasticityRow>& time,
                                   double percent,
                                   const std::filesystem::path& path) {
  std::string out = "attribute,percent,mode,self_elasticity,cross_elasticity\n";
  auto block = [&](const char* name, const std::vector<ElasticityRow>& rows) {
    for (const auto& r : rows) {
      out += name;
      out += ',';
      out += format_double(percent);
      out += ',';
      out += r.mode.tag();
      out += ',';
      out += format_double(r.self_elasticity);
      out += ',';
      out += format_double(r.cross_elasticity);
      out += '\n';
    }
  };
  block("travel_cost", cost);
  block("travel_time", time);
  atomic_write_file(path, out);
}

inline void write_vot_table(
    const std::vector<std::pair<std::string, std::vector<SegmentVotRow>>>&
        per_dimension,
    const std::filesystem::path& path) {
  std::string out = "dimension,segment,n,beta_tt,beta_tc,vot,note\n";
  for (const auto& [dim, rows] : per_dimension)
    for (const auto& r : rows) {
      out += dim;
      out += ',';
      out += r.segment;
      out += ',';
      out += std::to_string(r.n);
      out += ',';
      out += r.skipped ? "" : format_double(r.beta_tt);
      out += ',';
      out += r.skipped ? "" : format_double(r.beta_tc);
      out += ',';
      out += r.skipped ? "" : format_double(r.vot);
      out += ',';
      out += r.note;
      out += '\n';
    }
  atomic_write_file(path, out);
}

inline void write_surplus_table(const std::string& scenario,
                                const std::vector<SegmentSurplusRow>& rows,
                                const std::filesystem::path& path) {
  std::string out = "scenario,segment,n,total_delta_cs,mean_delta_cs,empty\n";
  for (const auto& r : rows) {
    out += scenario;
    out += ',';
    out += r.segment;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += format_double(r.total);
    out += ',';
    out += format_double(r.mean);
    out += ',';
    out += r.empty ? "1" : "0";
    out += '\n';
  }
  atomic_write_file(path, out);
}

}  // namespace modechoice
