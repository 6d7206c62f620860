#ifndef STREAMGLM_SNAPSHOT_HPP
#define STREAMGLM_SNAPSHOT_HPP

#include <optional>
#include <string>

#include "streamglm/euipw.hpp"
#include "streamglm/updater.hpp"

namespace streamglm {

/// JSON persistence for estimator states. Every numeric field is written as a
/// fixed-width decimal string with 17 significant digits ("%+.16e"), which
/// round-trips IEEE doubles exactly and keeps the byte size a function of the
/// dimensions alone (counters excepted). A schema_version mismatch on load is
/// rejected.
constexpr int kSnapshotSchemaVersion = 1;

std::string save_snapshot(const UipwState& state);
std::string save_snapshot(const HeteroState& state);

struct Snapshot {
  std::string kind;  // "uipw" | "euipw"
  std::optional<UipwState> uipw;
  std::optional<HeteroState> euipw;
};

Snapshot load_snapshot(const std::string& text);

}  // namespace streamglm

#endif
