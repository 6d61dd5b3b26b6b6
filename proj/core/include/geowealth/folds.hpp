#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace geowealth {

struct Fold {
  std::vector<std::string> train_groups;
  std::string val_group;
  std::string test_group;
};

/// Survey groups and the folds that rotate over them.
struct FoldPlan {
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<Fold> folds;

  /// Each fold's train/val/test groups are disjoint, known and cover every
  /// group; no survey belongs to two groups.
  void validate() const;

  /// Group name holding `survey_id`, or empty when unassigned.
  std::string group_of(const std::string& survey_id) const;

  /// Fold k (0-based) tests on group k, validates on group k+1 and trains on
  /// the rest, over groups in name order. Five groups A..E give
  /// (CDE | B | A), (ADE | C | B), (ABE | D | C), (ABC | E | D), (BCD | A | E).
  static FoldPlan rotation(std::map<std::string, std::vector<std::string>> groups);
};

/// `group,survey_id` CSV.
FoldPlan load_fold_groups(const std::string& path);
void save_fold_groups(const std::string& path, const FoldPlan& plan);

/// Shuffles the distinct survey ids with `seed` and deals them round-robin
/// into `n_groups` groups named A, B, C, ...
FoldPlan random_fold_plan(std::span<const std::string> survey_ids, std::size_t n_groups,
                          std::uint64_t seed);

}  // namespace geowealth
