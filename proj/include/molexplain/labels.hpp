#pragma once

#include <cstdint>
#include <vector>

#include "molexplain/error.hpp"

namespace molexplain {

// Per-sample, per-task binary labels; kMissing marks masked entries.
class LabelMatrix {
 public:
  static constexpr std::int8_t kMissing = -1;

  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t tasks) : rows_(rows), tasks_(tasks), values_(rows * tasks, kMissing) {}

  std::size_t rows() const { return rows_; }
  std::size_t tasks() const { return tasks_; }
  std::int8_t at(std::size_t r, std::size_t t) const { return values_[r * tasks_ + t]; }
  void set(std::size_t r, std::size_t t, std::int8_t v) { values_[r * tasks_ + t] = v; }
  bool missing(std::size_t r, std::size_t t) const { return at(r, t) == kMissing; }

  void append_row(const std::vector<std::int8_t>& row) {
    if (rows_ == 0 && tasks_ == 0) tasks_ = row.size();
    if (row.size() != tasks_) throw UserError("label row width mismatch");
    values_.insert(values_.end(), row.begin(), row.end());
    ++rows_;
  }

  LabelMatrix select(const std::vector<std::size_t>& rows) const {
    LabelMatrix out(rows.size(), tasks_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t t = 0; t < tasks_; ++t) out.set(i, t, at(rows[i], t));
    }
    return out;
  }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t tasks_ = 0;
  std::vector<std::int8_t> values_;
};

}  // namespace molexplain
