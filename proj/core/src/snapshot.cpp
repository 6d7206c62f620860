#include "streamglm/snapshot.hpp"

#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "streamglm/errors.hpp"

namespace streamglm {

namespace {

using nlohmann::json;

std::string num(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%+.16e", value);
  return buf;
}

double parse_num(const json& j) {
  if (!j.is_string()) throw InvalidInputError("snapshot: numeric field must be a string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw InvalidInputError("snapshot: malformed numeric field \"" + s + "\"");
  }
  return value;
}

json vec_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(num(v[i]));
  return arr;
}

json mat_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(num(m(r, c)));
  }
  return arr;
}

json tensor_json(const Tensor3& t) {
  const Eigen::Index p = t.dim();
  json arr = json::array();
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      for (Eigen::Index c = 0; c < p; ++c) arr.push_back(num(t(a, b, c)));
    }
  }
  return arr;
}

Eigen::VectorXd vec_from(const json& arr, Eigen::Index size, const char* field) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != size) {
    throw InvalidInputError(std::string("snapshot: bad size for ") + field);
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = parse_num(arr[static_cast<std::size_t>(i)]);
  return v;
}

Eigen::MatrixXd mat_from(const json& arr, Eigen::Index rows, Eigen::Index cols,
                         const char* field) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
    throw InvalidInputError(std::string("snapshot: bad size for ") + field);
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_num(arr[idx++]);
  }
  return m;
}

Tensor3 tensor_from(const json& arr, Eigen::Index p, const char* field) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != p * p * p) {
    throw InvalidInputError(std::string("snapshot: bad size for ") + field);
  }
  Tensor3 t(p);
  std::size_t idx = 0;
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      for (Eigen::Index c = 0; c < p; ++c) t(a, b, c) = parse_num(arr[idx++]);
    }
  }
  return t;
}

const char* mode_name(PropensityState::Mode mode) {
  switch (mode) {
    case PropensityState::Mode::estimated: return "estimated";
    case PropensityState::Mode::frozen_alpha: return "frozen_alpha";
    default: return "known_constant";
  }
}

PropensityState::Mode mode_from(const std::string& name) {
  if (name == "estimated") return PropensityState::Mode::estimated;
  if (name == "frozen_alpha") return PropensityState::Mode::frozen_alpha;
  if (name == "known_constant") return PropensityState::Mode::known_constant;
  throw InvalidInputError("snapshot: unknown propensity mode " + name);
}

json prop_json(const PropensityState& prop) {
  json j;
  j["mode"] = mode_name(prop.mode);
  j["alpha_hat"] = vec_json(prop.alpha_hat);
  j["h_tilde"] = mat_json(prop.h_tilde);
  j["n_total"] = prop.n_total;
  j["batch_count"] = prop.batch_count;
  j["known_pi"] = num(prop.known_pi);
  return j;
}

PropensityState prop_from(const json& j, Eigen::Index p) {
  PropensityState prop;
  prop.mode = mode_from(j.at("mode").get<std::string>());
  prop.alpha_hat = vec_from(j.at("alpha_hat"), p, "prop.alpha_hat");
  prop.h_tilde = mat_from(j.at("h_tilde"), p, p, "prop.h_tilde");
  prop.n_total = j.at("n_total").get<std::int64_t>();
  prop.batch_count = j.at("batch_count").get<std::int64_t>();
  prop.known_pi = parse_num(j.at("known_pi"));
  return prop;
}

json moments_json(const ScoreMoments& m) {
  json j;
  j["n"] = m.n;
  j["sum_s"] = vec_json(m.sum_s);
  j["sum_v"] = vec_json(m.sum_v);
  j["sum_ss"] = mat_json(m.sum_ss);
  j["sum_sv"] = mat_json(m.sum_sv);
  j["sum_vv"] = mat_json(m.sum_vv);
  j["sum_bread"] = mat_json(m.sum_bread);
  return j;
}

ScoreMoments moments_from(const json& j, Eigen::Index p) {
  ScoreMoments m;
  m.n = j.at("n").get<std::int64_t>();
  m.sum_s = vec_from(j.at("sum_s"), p, "moments.sum_s");
  m.sum_v = vec_from(j.at("sum_v"), p, "moments.sum_v");
  m.sum_ss = mat_from(j.at("sum_ss"), p, p, "moments.sum_ss");
  m.sum_sv = mat_from(j.at("sum_sv"), p, p, "moments.sum_sv");
  m.sum_vv = mat_from(j.at("sum_vv"), p, p, "moments.sum_vv");
  m.sum_bread = mat_from(j.at("sum_bread"), p, p, "moments.sum_bread");
  return m;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

std::uint64_t digest_from(const std::string& hex) {
  if (hex.size() != 16) throw InvalidInputError("snapshot: bad ingest digest");
  return std::strtoull(hex.c_str(), nullptr, 16);
}

}  // namespace

std::string save_snapshot(const UipwState& state) {
  json j;
  j["schema_version"] = kSnapshotSchemaVersion;
  j["kind"] = "uipw";
  j["family"] = state.family.name();
  j["p"] = state.dim();
  j["q"] = 0;
  j["n_total"] = state.n_total;
  j["batch_count"] = state.batch_count;
  j["prop"] = prop_json(state.prop);
  j["beta_hat"] = vec_json(state.beta_hat);
  j["alpha_prev"] = vec_json(state.alpha_prev);
  j["sum_r_alpha"] = mat_json(state.sum_r_alpha);
  j["sum_r_beta"] = mat_json(state.sum_r_beta);
  j["sum_r_ab"] = tensor_json(state.sum_r_ab);
  j["sum_rab_beta"] = mat_json(state.sum_rab_beta);
  j["sum_rab_alpha"] = mat_json(state.sum_rab_alpha);
  j["moments"] = moments_json(state.moments);
  j["ingest_digest"] = digest_hex(state.ingest_digest);
  return j.dump(1) + "\n";
}

std::string save_snapshot(const HeteroState& state) {
  json j;
  j["schema_version"] = kSnapshotSchemaVersion;
  j["kind"] = "euipw";
  j["family"] = state.family.name();
  j["p"] = state.dim();
  j["q"] = state.nuisance_dim();
  j["n_total"] = state.n_total;
  j["batch_count"] = state.batch_count;
  j["prop"] = prop_json(state.prop);
  j["beta_hat"] = vec_json(state.beta_hat);
  j["alpha_prev"] = vec_json(state.alpha_prev);
  j["gamma_last"] = vec_json(state.gamma_last);
  j["sum_g_alpha"] = mat_json(state.sum_g_alpha);
  j["sum_g_beta"] = mat_json(state.sum_g_beta);
  j["sum_g_ab"] = tensor_json(state.sum_g_ab);
  j["sum_gab_beta"] = mat_json(state.sum_gab_beta);
  j["sum_gab_alpha"] = mat_json(state.sum_gab_alpha);
  j["moments"] = moments_json(state.moments);
  j["ingest_digest"] = digest_hex(state.ingest_digest);
  return j.dump(1) + "\n";
}

Snapshot load_snapshot(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("snapshot: malformed JSON: ") + e.what());
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kSnapshotSchemaVersion) {
    throw InvalidInputError("snapshot: schema_version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kSnapshotSchemaVersion) + ")");
  }
  Snapshot snap;
  snap.kind = j.at("kind").get<std::string>();
  const Family family = Family::from_name(j.at("family").get<std::string>());
  const Eigen::Index p = j.at("p").get<Eigen::Index>();
  const Eigen::Index q = j.at("q").get<Eigen::Index>();

  if (snap.kind == "uipw") {
    UipwState state = UipwState::initial(family, p);
    state.prop = prop_from(j.at("prop"), p);
    state.beta_hat = vec_from(j.at("beta_hat"), p, "beta_hat");
    state.alpha_prev = vec_from(j.at("alpha_prev"), p, "alpha_prev");
    state.sum_r_alpha = mat_from(j.at("sum_r_alpha"), p, p, "sum_r_alpha");
    state.sum_r_beta = mat_from(j.at("sum_r_beta"), p, p, "sum_r_beta");
    state.sum_r_ab = tensor_from(j.at("sum_r_ab"), p, "sum_r_ab");
    state.sum_rab_beta = mat_from(j.at("sum_rab_beta"), p, p, "sum_rab_beta");
    state.sum_rab_alpha = mat_from(j.at("sum_rab_alpha"), p, p, "sum_rab_alpha");
    state.moments = moments_from(j.at("moments"), p);
    state.n_total = j.at("n_total").get<std::int64_t>();
    state.batch_count = j.at("batch_count").get<std::int64_t>();
    state.ingest_digest = digest_from(j.at("ingest_digest").get<std::string>());
    snap.uipw = std::move(state);
  } else if (snap.kind == "euipw") {
    HeteroState state = HeteroState::initial(family, p, q);
    state.prop = prop_from(j.at("prop"), p);
    state.beta_hat = vec_from(j.at("beta_hat"), p, "beta_hat");
    state.alpha_prev = vec_from(j.at("alpha_prev"), p, "alpha_prev");
    state.gamma_last = vec_from(j.at("gamma_last"), q, "gamma_last");
    state.sum_g_alpha = mat_from(j.at("sum_g_alpha"), p, p, "sum_g_alpha");
    state.sum_g_beta = mat_from(j.at("sum_g_beta"), p, p, "sum_g_beta");
    state.sum_g_ab = tensor_from(j.at("sum_g_ab"), p, "sum_g_ab");
    state.sum_gab_beta = mat_from(j.at("sum_gab_beta"), p, p, "sum_gab_beta");
    state.sum_gab_alpha = mat_from(j.at("sum_gab_alpha"), p, p, "sum_gab_alpha");
    state.moments = moments_from(j.at("moments"), p);
    state.n_total = j.at("n_total").get<std::int64_t>();
    state.batch_count = j.at("batch_count").get<std::int64_t>();
    state.ingest_digest = digest_from(j.at("ingest_digest").get<std::string>());
    snap.euipw = std::move(state);
  } else {
    throw InvalidInputError("snapshot: unknown kind " + snap.kind);
  }
  return snap;
}

}  // namespace streamglm
