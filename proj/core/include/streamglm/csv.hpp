#ifndef STREAMGLM_CSV_HPP
#define STREAMGLM_CSV_HPP

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamglm/batch.hpp"

namespace streamglm {

/// Data error in a CSV stream; message names the 1-based file line.
class DataFormatError : public std::runtime_error {
 public:
  DataFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

/// Writes batches in the exchange schema: header delta,y,x1..xp[,z1..zq][,batch],
/// delta in {0,1}, y empty when delta=0, numerics at 17 significant digits.
void write_batches_csv(std::ostream& out, const std::vector<Batch>& batches,
                       bool with_batch_column);

/// Streaming reader for the same schema. Chunks rows either by the optional
/// trailing `batch` column (rows with equal consecutive labels form a batch)
/// or by a fixed batch size. The y field of unobserved rows is ignored.
class BatchCsvReader {
 public:
  /// `batch_size` empty means the file must carry a batch column.
  BatchCsvReader(std::istream& in, Index p, Index q, std::optional<Index> batch_size);

  /// Next batch in file order, or nullopt at end of input.
  /// Throws DataFormatError (malformed row) or InvalidInputError (header mismatch).
  std::optional<Batch> next();

 private:
  struct Row {
    std::uint8_t delta;
    double y;
    std::vector<double> x, z;
    long long batch_label;
  };
  bool read_row(Row& row);

  std::istream& in_;
  Index p_, q_;
  std::optional<Index> batch_size_;
  bool has_batch_column_{false};
  std::size_t line_{0};
  std::optional<Row> pending_;
  bool done_{false};
};

}  // namespace streamglm

#endif
