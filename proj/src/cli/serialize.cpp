#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "rwre/cli.hpp"
#include "rwre/numeric.hpp"

namespace rwre::cli {
namespace {

// Non-finite values have no JSON spelling; they are written as null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json strings(const std::vector<std::string>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

Json verdict(const env::ConditionVerdict& v) {
  return {{"holds", v.holds}, {"exact", v.exact}, {"evidence", num(v.evidence)}, {"note", v.note}};
}

std::string escape_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json to_json(const analytics::SummaryStatistics& s) {
  Json j;
  j["lambda"] = num(s.lambda);
  j["r1"] = num(s.r1);
  j["r2"] = num(s.r2);
  j["mu"] = num(s.mu);
  j["mu_se"] = num(s.mu_se);
  j["mu_method"] = env::to_string(s.mu_method);
  j["sigma2"] = num(s.sigma2);
  j["sigma2_se"] = num(s.sigma2_se);
  j["sigma2_method"] = env::to_string(s.sigma2_method);
  j["sigma_star"] = num(s.sigma_star);
  j["sigma2_closed_form_r1_squared"] = s.sigma2_closed_form_r1_squared ? num(*s.sigma2_closed_form_r1_squared) : Json(nullptr);
  j["sigma2_closed_form"] =
      s.sigma2_closed_form ? num(*s.sigma2_closed_form) : Json(nullptr);
  j["closed_form_discrepancy"] = s.closed_form_discrepancy;
  return j;
}

Json to_json(const harness::ExperimentReport& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["replicas"] = r.samples.size();
  j["ks_distance"] = num(r.ks_distance);
  j["threshold"] = num(r.threshold);
  j["pass"] = r.pass;
  j["mu"] = num(r.mu);
  j["sigma"] = num(r.sigma);
  j["sigma_star"] = num(r.sigma_star);
  j["sigma2_window"] = num(r.sigma2_window);
  j["centering"] = num(r.centering);
  if (r.experiment == "clt-position") {
    j["explicit_b"] = num(r.explicit_b);
    j["implicit_b"] = r.implicit_b;
  }
  j["centering_bias_z"] = num(r.centering_bias_z);
  Json cdf = Json::array();
  for (const auto& pt : r.cdf) cdf.push_back({{"x", num(pt.x)}, {"ecdf", num(pt.ecdf)}, {"phi", num(pt.phi)}, {"diff", num(pt.diff)}});
  j["cdf"] = std::move(cdf);
  j["ks_by_environment"] = nums(r.ks_by_environment);
  j["env_seed"] = r.env_seed;
  j["walk_seed"] = r.walk_seed;
  j["model_summary"] = to_json(r.model_summary);
  j["notes"] = strings(r.notes);
  return j;
}

Json to_json(const harness::LlnReport& r) {
  Json j;
  j["mu"] = num(r.mu);
  j["zero_speed"] = r.zero_speed;
  auto rows = [](const std::vector<harness::LlnRow>& v) {
    Json a = Json::array();
    for (const auto& row : v) a.push_back({{"scale", row.scale}, {"value", num(row.value)}, {"available", row.available}});
    return a;
  };
  j["hitting"] = rows(r.hitting);
  j["position"] = rows(r.position);
  j["running_max"] = rows(r.running_max);
  j["environments"] = r.environments;
  j["trajectories"] = r.trajectories;
  j["hitting_rel_error"] = num(r.hitting_rel_error);
  j["position_rel_error"] = num(r.position_rel_error);
  j["position_drop"] = num(r.position_drop);
  j["pass"] = r.pass;
  j["notes"] = strings(r.notes);
  return j;
}

Json to_json(const harness::VarianceRatioReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back({{"n", row.n}, {"ratio", num(row.ratio)}, {"max_share", num(row.max_share)}});
  return {{"sigma2", num(r.sigma2)}, {"rows", rows}, {"ratio_ok", r.ratio_ok}, {"share_ok", r.share_ok}, {"pass", r.pass}};
}

Json to_json(const harness::DiagnosticReport& r) {
  Json j;
  j["mu"] = num(r.mu);
  j["sigma_star"] = num(r.sigma_star);
  j["c"] = num(r.c);
  j["env_seeds"] = r.env_seeds;
  Json rel = Json::array();
  for (const auto& row : r.rel) {
    Json rj;
    rj["t"] = row.t;
    rj["x"] = num(row.x);
    rj["median_abs_rel1"] = num(row.median_abs_rel1);
    rj["median_abs_rel2"] = num(row.median_abs_rel2);
    rj["median_abs_rel1_shifted"] = num(row.median_abs_rel1_shifted);
    rj["rel1"] = nums(row.rel1);
    rj["rel2"] = nums(row.rel2);
    rj["rel1_shifted"] = nums(row.rel1_shifted);
    if (!row.rel2_bound.empty()) rj["rel2_bound"] = nums(row.rel2_bound);
    rel.push_back(std::move(rj));
  }
  j["rel"] = std::move(rel);
  Json fl = Json::array();
  for (const auto& row : r.fluctuation) {
    fl.push_back({{"n", row.n},
                  {"median_R", num(row.median_R)},
                  {"median_H_star_over_sqrt_n", num(row.median_H_star_over_sqrt)},
                  {"median_H_star_over_n", num(row.median_H_star_over_n)},
                  {"median_H_scaled", num(row.median_H_scaled)}});
  }
  j["fluctuation"] = std::move(fl);
  j["rel1_decreasing"] = r.rel1_decreasing;
  j["rel2_decreasing"] = r.rel2_decreasing;
  j["H_star_over_n_decreasing"] = r.H_star_over_n_decreasing;
  j["H_star_over_sqrt_n_band"] = num(r.H_star_over_sqrt_band);
  j["H_star_over_sqrt_n_growth"] = num(r.H_star_over_sqrt_growth);
  j["H_star_band_ok"] = r.H_star_band_ok;
  j["rel2_bound_checks"] = r.rel2_bound_checks;
  j["rel2_bound_violations"] = r.rel2_bound_violations;
  j["pass"] = r.pass;
  return j;
}

Json to_json(const harness::ErgodicityReport& r) {
  return {{"n", r.n},
          {"epsilon", nums(r.epsilon)},
          {"mu_reference", num(r.mu_reference)},
          {"strictly_decreasing", r.strictly_decreasing},
          {"plateau", r.plateau},
          {"uniformly_ergodic", r.uniformly_ergodic}};
}

Json to_json(const harness::CouplingReport& r) {
  return {{"trajectories", r.trajectories},
          {"event_checks", r.event_checks},
          {"event_violations", r.event_violations},
          {"bound_checks", r.bound_checks},
          {"bound_violations", r.bound_violations},
          {"parity_violations", r.parity_violations},
          {"odd_tau_violations", r.odd_tau_violations},
          {"pass", r.pass}};
}

Json to_json(const env::ConditionReport& r) {
  Json j;
  j["gamma"] = num(r.gamma);
  j["c1"] = verdict(r.c1);
  j["c2"] = verdict(r.c2);
  j["c3"] = verdict(r.c3);
  j["c4"] = verdict(r.c4);
  j["r1"] = num(r.r1);
  j["r2"] = num(r.r2);
  j["regime"] = env::to_string(r.regime);
  j["clt_eligible"] = r.clt_eligible;
  j["notes"] = strings(r.notes);
  return j;
}

std::string Table::render() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += escape_cell(cells[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw DomainError("csv row width does not match the header");
    line(row);
  }
  return out;
}

Table cdf_table(const std::vector<harness::CdfPoint>& cdf) {
  Table t{cdf_header(), {}};
  for (const auto& pt : cdf) {
    t.rows.push_back({numeric::shortest(pt.x), numeric::shortest(pt.ecdf), numeric::shortest(pt.phi),
                      numeric::shortest(pt.diff)});
  }
  return t;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

}  // namespace rwre::cli
