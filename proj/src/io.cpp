#include "cohortsbi/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/model.hpp"
#include "cohortsbi/version.hpp"

namespace cohortsbi {

namespace fs = std::filesystem;

namespace {

std::string join_path(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

std::vector<double> parse_double_list(const std::string& s, const std::string& ctx) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_double(cell, ctx));
  return out;
}

std::string format_double_list(std::span<const double> v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) ss << ',';
    ss << format_double(v[i]);
  }
  return ss.str();
}

int manifest_int(const Manifest& m, const std::string& key) {
  return static_cast<int>(parse_double(manifest_get(m, key), key));
}

std::uint64_t manifest_u64(const Manifest& m, const std::string& key) {
  const std::string& s = manifest_get(m, key);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw FormatError("manifest: cannot parse '" + key + "' value '" + s + "'");
  }
}

}  // namespace

double ObservedData::tfr() const {
  double t = 0.0;
  for (double r : asfr) t += r;
  return t;
}

SummaryVector ObservedData::summary(SummaryLayout layout) const {
  SummaryVector s;
  s.layout = layout;
  s.values = asfr;
  if (layout == SummaryLayout::kAsfrAndAsufr) {
    if (!asufr)
      throw ConsistencyError(
          "scenario requires unplanned rates but no asufr table was loaded");
    s.values.insert(s.values.end(), asufr->begin(), asufr->end());
  }
  return s;
}

std::vector<double> load_rate_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "age,rate");
  std::vector<double> rates(kNumAges,
                            std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : rows) {
    const double age_raw = row[0];
    const int age = static_cast<int>(age_raw);
    if (age_raw != static_cast<double>(age) || age < 10 || age > 49)
      throw FormatError(path + ": age " + format_double(age_raw) +
                        " outside the grid 10..49");
    if (!std::isnan(rates[age - 10]))
      throw FormatError(path + ": duplicate age " + std::to_string(age));
    const double rate = row[1];
    if (!std::isfinite(rate) || rate < 0.0)
      throw FormatError(path + ": rate at age " + std::to_string(age) +
                        " must be finite and non-negative");
    rates[age - 10] = rate;
  }
  for (int a = 0; a < kNumAges; ++a)
    if (std::isnan(rates[a]))
      throw FormatError(path + ": missing age " + std::to_string(a + 10));
  return rates;
}

void write_rate_csv(const std::string& path, std::span<const double> rates) {
  if (rates.size() != kNumAges) throw ContractError("write_rate_csv: need 40 rates");
  std::vector<std::vector<double>> rows;
  rows.reserve(kNumAges);
  for (int a = 0; a < kNumAges; ++a)
    rows.push_back({static_cast<double>(a + 10), rates[a]});
  write_numeric_csv(path, "age,rate", rows);
}

Histogram load_histogram_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "bin_lo,bin_hi,mass");
  if (rows.empty()) throw FormatError(path + ": no histogram rows");
  Histogram h;
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double lo = rows[i][0], hi = rows[i][1], mass = rows[i][2];
    if (!(hi > lo)) throw FormatError(path + ": bin_hi must exceed bin_lo");
    if (!std::isfinite(lo))
      throw FormatError(path + ": bin_lo must be finite");
    if (!std::isfinite(hi) && i + 1 != rows.size())
      throw FormatError(path + ": only the last bin may be unbounded");
    if (!(mass >= 0.0) || !std::isfinite(mass))
      throw FormatError(path + ": masses must be finite and non-negative");
    if (!h.edges.empty() && lo != h.edges.back())
      throw FormatError(path + ": bins must be contiguous");
    if (h.edges.empty()) h.edges.push_back(lo);
    h.edges.push_back(hi);
    h.masses.push_back(mass);
    total += mass;
  }
  if (!(total > 0.0)) throw FormatError(path + ": zero total mass");
  for (double& m : h.masses) m /= total;
  h.count = 1;  // observed histograms always describe at least one event
  h.validate();
  return h;
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  hist.validate();
  std::vector<std::vector<double>> rows;
  rows.reserve(hist.bins());
  for (std::size_t i = 0; i < hist.bins(); ++i)
    rows.push_back({hist.edges[i], hist.edges[i + 1], hist.masses[i]});
  write_numeric_csv(path, "bin_lo,bin_hi,mass", rows);
}

ObservedData load_observed(const ObservedPaths& paths) {
  if (paths.asfr.empty()) throw ConfigError("load_observed: asfr path required");
  ObservedData data;
  data.label = paths.label;
  data.asfr = load_rate_csv(paths.asfr);
  if (!paths.asufr.empty()) {
    data.asufr = load_rate_csv(paths.asufr);
    for (int a = 0; a < kNumAges; ++a) {
      if ((*data.asufr)[a] > data.asfr[a])
        throw ConsistencyError("unplanned rate exceeds total rate at age " +
                               std::to_string(a + 10));
    }
  }
  if (!paths.micro_age_first_sex.empty())
    data.micro_age_first_sex = load_histogram_csv(paths.micro_age_first_sex);
  if (!paths.micro_desired_family_size.empty())
    data.micro_desired_family_size =
        load_histogram_csv(paths.micro_desired_family_size);
  if (!paths.micro_birth_intervals.empty())
    data.micro_birth_intervals = load_histogram_csv(paths.micro_birth_intervals);
  return data;
}

void write_cohort_csvs(const std::string& dir, const CohortResult& result) {
  fs::create_directories(dir);
  {
    std::vector<std::vector<double>> rows;
    rows.reserve(result.births.size());
    for (const auto& b : result.births)
      rows.push_back({static_cast<double>(b.woman_id),
                      static_cast<double>(b.mother_age_months),
                      static_cast<double>(b.conception_month),
                      b.planned ? 1.0 : 0.0});
    write_numeric_csv(join_path(dir, "births.csv"),
                      "woman_id,mother_age_months,conception_month,planned", rows);
  }
  {
    std::vector<std::vector<double>> rows;
    rows.reserve(result.traits.size());
    for (std::size_t i = 0; i < result.traits.size(); ++i) {
      const WomanTraits& t = result.traits[i];
      rows.push_back({static_cast<double>(i), t.x_i, t.r_i,
                      static_cast<double>(t.d_i), t.b_i});
    }
    write_numeric_csv(join_path(dir, "traits.csv"), "woman_id,x_i,r_i,d_i,b_i", rows);
  }
}

void write_summary_csv(const std::string& path, const SummaryVector& summary) {
  if (summary.values.size() != summary.expected_size())
    throw ContractError("write_summary_csv: malformed summary");
  const bool both = summary.layout == SummaryLayout::kAsfrAndAsufr;
  std::vector<std::vector<double>> rows;
  rows.reserve(kNumAges);
  for (int a = 0; a < kNumAges; ++a) {
    std::vector<double> row{static_cast<double>(a + 10), summary.values[a]};
    if (both) row.push_back(summary.values[kNumAges + a]);
    rows.push_back(std::move(row));
  }
  write_numeric_csv(path, both ? "age,asfr,asufr" : "age,asfr", rows);
}

void write_ppc_csv(const std::string& path, const PpcReport& report) {
  std::vector<std::vector<double>> rows;
  rows.reserve(report.observed.size());
  for (std::size_t d = 0; d < report.observed.size(); ++d)
    rows.push_back({static_cast<double>(10 + d % kNumAges), report.observed[d],
                    report.mean[d], report.lo95[d], report.hi95[d]});
  write_numeric_csv(path, "age,observed,mean,lo95,hi95", rows);
}

void save_artifact(const std::string& dir, const PosteriorArtifact& artifact,
                   const Prior& prior, int scenario) {
  fs::create_directories(dir);
  {
    std::ofstream out(join_path(dir, "estimator.txt"));
    if (!out) throw IoError("cannot write estimator file in " + dir);
    save_estimator(out, artifact.net, artifact.theta_std, artifact.x_std);
  }
  write_prior_manifest(prior, scenario, join_path(dir, "priors.manifest"));

  Manifest config;
  const SnpeConfig& c = artifact.config;
  config.emplace_back("version", kVersion);
  config.emplace_back("scenario", std::to_string(scenario));
  config.emplace_back("rounds", std::to_string(c.rounds));
  config.emplace_back("n_sim", std::to_string(c.n_sim));
  config.emplace_back("n_women", std::to_string(c.n_women));
  config.emplace_back("seed", std::to_string(c.seed));
  config.emplace_back("n_stored_draws", std::to_string(c.n_stored_draws));
  config.emplace_back("training.batch_size", std::to_string(c.training.batch_size));
  config.emplace_back("training.atoms", std::to_string(c.training.atoms));
  config.emplace_back("training.learning_rate", format_double(c.training.learning_rate));
  config.emplace_back("training.validation_fraction",
                      format_double(c.training.validation_fraction));
  config.emplace_back("training.patience", std::to_string(c.training.patience));
  config.emplace_back("training.max_epochs", std::to_string(c.training.max_epochs));
  config.emplace_back("training.clip_norm", format_double(c.training.clip_norm));
  config.emplace_back("training.adam_beta1", format_double(c.training.adam_beta1));
  config.emplace_back("training.adam_beta2", format_double(c.training.adam_beta2));
  config.emplace_back("mdn.components", std::to_string(c.mdn.n_components));
  {
    std::ostringstream hidden;
    for (std::size_t i = 0; i < c.mdn.hidden.size(); ++i) {
      if (i) hidden << ',';
      hidden << c.mdn.hidden[i];
    }
    config.emplace_back("mdn.hidden", hidden.str());
  }
  config.emplace_back("x_o", format_double_list(artifact.x_o));
  config.emplace_back("stored_draw_leakage",
                      format_double(artifact.stored_draw_leakage));
  write_manifest(join_path(dir, "config.manifest"), config);

  {
    std::vector<std::vector<double>> rows;
    rows.reserve(artifact.rounds.size());
    for (const RoundLog& r : artifact.rounds)
      rows.push_back({static_cast<double>(r.round),
                      static_cast<double>(r.n_cumulative),
                      static_cast<double>(r.epochs), r.best_val_loss, r.leakage});
    write_numeric_csv(join_path(dir, "rounds.csv"),
                      "round,n_cumulative,epochs,best_val_loss,leakage", rows);
  }
  {
    std::ostringstream header;
    for (int p = 0; p < artifact.stored_draws.cols; ++p) {
      if (p) header << ',';
      if (artifact.stored_draws.cols == kNumParams)
        header << kParamNames[p];
      else
        header << 'p' << p;
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(artifact.stored_draws.rows);
    for (int i = 0; i < artifact.stored_draws.rows; ++i) {
      auto row = artifact.stored_draws.row(i);
      rows.emplace_back(row.begin(), row.end());
    }
    write_numeric_csv(join_path(dir, "draws.csv"), header.str(), rows);
  }
}

LoadedArtifact load_artifact(const std::string& dir) {
  const PriorManifest pm = load_prior_manifest(join_path(dir, "priors.manifest"));
  const Manifest config = read_manifest(join_path(dir, "config.manifest"));

  PosteriorArtifact artifact;
  SnpeConfig& c = artifact.config;
  c.rounds = manifest_int(config, "rounds");
  c.n_sim = manifest_int(config, "n_sim");
  c.n_women = static_cast<std::uint32_t>(manifest_int(config, "n_women"));
  c.scenario = manifest_int(config, "scenario");
  c.seed = manifest_u64(config, "seed");
  c.n_stored_draws = manifest_int(config, "n_stored_draws");
  c.training.batch_size = manifest_int(config, "training.batch_size");
  c.training.atoms = manifest_int(config, "training.atoms");
  c.training.learning_rate =
      parse_double(manifest_get(config, "training.learning_rate"), dir);
  c.training.validation_fraction =
      parse_double(manifest_get(config, "training.validation_fraction"), dir);
  c.training.patience = manifest_int(config, "training.patience");
  c.training.max_epochs = manifest_int(config, "training.max_epochs");
  c.training.clip_norm = parse_double(manifest_get(config, "training.clip_norm"), dir);
  c.training.adam_beta1 =
      parse_double(manifest_get(config, "training.adam_beta1"), dir);
  c.training.adam_beta2 =
      parse_double(manifest_get(config, "training.adam_beta2"), dir);
  c.mdn.n_components = manifest_int(config, "mdn.components");
  c.mdn.hidden.clear();
  for (double h : parse_double_list(manifest_get(config, "mdn.hidden"), dir))
    c.mdn.hidden.push_back(static_cast<int>(h));
  artifact.x_o = parse_double_list(manifest_get(config, "x_o"), dir);
  artifact.stored_draw_leakage =
      parse_double(manifest_get(config, "stored_draw_leakage"), dir);

  {
    std::ifstream in(join_path(dir, "estimator.txt"));
    if (!in) throw IoError("cannot open estimator file in " + dir);
    LoadedEstimator le = load_estimator(in);
    artifact.net = std::move(le.net);
    artifact.theta_std = std::move(le.theta_std);
    artifact.x_std = std::move(le.x_std);
  }
  {
    const auto rows = read_numeric_csv(join_path(dir, "rounds.csv"),
                                       "round,n_cumulative,epochs,best_val_loss,leakage");
    for (const auto& r : rows)
      artifact.rounds.push_back({static_cast<int>(r[0]), static_cast<int>(r[1]),
                                 r[3], static_cast<int>(r[2]), r[4]});
  }
  {
    std::ifstream in(join_path(dir, "draws.csv"));
    if (!in) throw IoError("cannot open draws.csv in " + dir);
    std::string header;
    std::getline(in, header);
    artifact.stored_draws = RowMatrix(0, artifact.net.theta_dim());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto values = parse_double_list(line, dir + "/draws.csv");
      artifact.stored_draws.push_row(values);
    }
  }
  return LoadedArtifact{std::move(artifact), std::move(pm.prior), pm.scenario};
}

}  // namespace cohortsbi
