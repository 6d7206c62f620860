#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "streamglm/csv.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/euipw.hpp"
#include "streamglm/simgen.hpp"
#include "streamglm/snapshot.hpp"
#include "streamglm/updater.hpp"

using namespace streamglm;

TEST_CASE("snapshot: save/load reproduces every numeric field exactly") {
  UipwState state = UipwState::initial(Family::bernoulli_logit(), 4);
  for (int j = 0; j < 4; ++j) {
    Rng rng = make_batch_rng(14, 0, j);
    state = ingest(state, gen_logistic_batch(250, rng));
  }
  const std::string text = save_snapshot(state);
  const Snapshot snap = load_snapshot(text);
  REQUIRE(snap.kind == "uipw");
  REQUIRE(snap.uipw.has_value());
  CHECK(snap.uipw->beta_hat == state.beta_hat);
  CHECK(snap.uipw->prop.alpha_hat == state.prop.alpha_hat);
  CHECK(snap.uipw->prop.h_tilde == state.prop.h_tilde);
  CHECK(snap.uipw->sum_r_beta == state.sum_r_beta);
  CHECK(snap.uipw->moments.sum_vv == state.moments.sum_vv);
  CHECK(snap.uipw->ingest_digest == state.ingest_digest);
  CHECK(save_snapshot(*snap.uipw) == text);
}

TEST_CASE("snapshot: euipw round trip and schema rejection") {
  HeteroState state = HeteroState::initial(Family::bernoulli_logit(), 2, 2);
  for (int j = 0; j < 3; ++j) {
    Rng rng = make_batch_rng(15, 0, j);
    state = ingest_hetero(state, gen_hetero_batch(300, rng));
  }
  const std::string text = save_snapshot(state);
  const Snapshot snap = load_snapshot(text);
  REQUIRE(snap.kind == "euipw");
  CHECK(snap.euipw->beta_hat == state.beta_hat);
  CHECK(snap.euipw->gamma_last == state.gamma_last);
  CHECK(save_snapshot(*snap.euipw) == text);

  std::string tampered = text;
  const auto at = tampered.find("\"schema_version\": 1");
  REQUIRE(at != std::string::npos);
  tampered.replace(at, 19, "\"schema_version\": 2");
  CHECK_THROWS_AS(load_snapshot(tampered), InvalidInputError);
  CHECK_THROWS_AS(load_snapshot("not json at all"), InvalidInputError);
}

TEST_CASE("snapshot: resume equivalence over random split points") {
  // One straight-through run vs snapshot/restore at every split point.
  const int k_total = 6;
  std::vector<Batch> batches;
  for (int j = 0; j < k_total; ++j) {
    Rng rng = make_batch_rng(16, 0, j);
    batches.push_back(gen_logistic_batch(200, rng));
  }
  UipwState straight = UipwState::initial(Family::bernoulli_logit(), 4);
  for (const Batch& b : batches) straight = ingest(straight, b);

  for (int split = 1; split < k_total; ++split) {
    UipwState first = UipwState::initial(Family::bernoulli_logit(), 4);
    for (int j = 0; j < split; ++j) first = ingest(first, batches[j]);
    Snapshot snap = load_snapshot(save_snapshot(first));
    UipwState resumed = *snap.uipw;
    for (int j = split; j < k_total; ++j) resumed = ingest(resumed, batches[j]);
    CHECK((resumed.beta_hat - straight.beta_hat).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(resumed.ingest_digest == straight.ingest_digest);
  }
}

TEST_CASE("csv: write/read round trip preserves all fields exactly") {
  std::vector<Batch> batches;
  for (int j = 0; j < 3; ++j) {
    Rng rng = make_batch_rng(17, 0, j);
    batches.push_back(gen_hetero_batch(40, rng));
  }
  std::ostringstream out;
  write_batches_csv(out, batches, true);

  std::istringstream in(out.str());
  BatchCsvReader reader(in, 2, 2, std::nullopt);
  for (const Batch& expected : batches) {
    const std::optional<Batch> got = reader.next();
    REQUIRE(got.has_value());
    REQUIRE(got->n() == expected.n());
    for (Index i = 0; i < expected.n(); ++i) {
      CHECK(got->observed[i] == expected.observed[i]);
      if (expected.observed[i]) CHECK(got->y[i] == expected.y[i]);
      CHECK(got->x.row(i) == expected.x.row(i));
      CHECK(got->z.row(i) == expected.z.row(i));
    }
  }
  CHECK(!reader.next().has_value());
}

TEST_CASE("csv: fixed-size chunking") {
  std::vector<Batch> batches;
  Rng rng = make_batch_rng(18, 0, 0);
  batches.push_back(gen_linear_batch(25, rng));
  std::ostringstream out;
  write_batches_csv(out, batches, false);
  std::istringstream in(out.str());
  BatchCsvReader reader(in, 4, 0, Index{10});
  CHECK(reader.next()->n() == 10);
  CHECK(reader.next()->n() == 10);
  CHECK(reader.next()->n() == 5);
  CHECK(!reader.next().has_value());
}

TEST_CASE("csv: malformed input names the line") {
  const std::string header = "delta,y,x1,x2\n";
  {
    std::istringstream in(header + "1,2.0,0.1,0.2\n1,,0.3,0.4\n");
    BatchCsvReader reader(in, 2, 0, Index{10});
    try {
      reader.next();
      FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("missing y") != std::string::npos);
    }
  }
  {
    std::istringstream in(header + "1,2.0,abc,0.2\n");
    BatchCsvReader reader(in, 2, 0, Index{10});
    CHECK_THROWS_AS(reader.next(), DataFormatError);
  }
  {
    std::istringstream in(header + "2,1.0,0.1,0.2\n");
    BatchCsvReader reader(in, 2, 0, Index{10});
    CHECK_THROWS_AS(reader.next(), DataFormatError);
  }
  {
    // header mismatch is a usage-level error, not a data error
    std::istringstream in("delta,y,x1\n");
    CHECK_THROWS_AS(BatchCsvReader(in, 2, 0, Index{10}), InvalidInputError);
  }
}

TEST_CASE("csv: unobserved y tokens are ignored") {
  std::istringstream in("delta,y,x1\n0,99.9,0.5\n1,1.25,0.75\n");
  BatchCsvReader reader(in, 1, 0, Index{10});
  const std::optional<Batch> batch = reader.next();
  REQUIRE(batch.has_value());
  CHECK(batch->observed[0] == 0);
  CHECK(std::isnan(batch->y[0]));
  CHECK(batch->y[1] == 1.25);
}
