#include "streamglm/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "streamglm/errors.hpp"

namespace streamglm {

namespace {

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end == s.c_str() || *end != '\0' || !std::isfinite(value)) {
    throw DataFormatError(line, std::string("non-numeric ") + what + " \"" + s + "\"");
  }
  return value;
}

}  // namespace

void write_batches_csv(std::ostream& out, const std::vector<Batch>& batches,
                       bool with_batch_column) {
  if (batches.empty()) throw InvalidInputError("write_batches_csv: no batches");
  const Index p = batches.front().p();
  const Index q = batches.front().q();
  out << "delta,y";
  for (Index j = 0; j < p; ++j) out << ",x" << (j + 1);
  for (Index j = 0; j < q; ++j) out << ",z" << (j + 1);
  if (with_batch_column) out << ",batch";
  out << "\n";
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    for (Index i = 0; i < batch.n(); ++i) {
      out << static_cast<int>(batch.observed[i]) << ',';
      if (batch.observed[i]) out << format_g17(batch.y[i]);
      for (Index j = 0; j < p; ++j) out << ',' << format_g17(batch.x(i, j));
      for (Index j = 0; j < q; ++j) out << ',' << format_g17(batch.z(i, j));
      if (with_batch_column) out << ',' << (b + 1);
      out << "\n";
    }
  }
}

BatchCsvReader::BatchCsvReader(std::istream& in, Index p, Index q,
                               std::optional<Index> batch_size)
    : in_(in), p_(p), q_(q), batch_size_(batch_size) {
  if (p_ < 1) throw InvalidInputError("csv reader: p must be >= 1");
  std::string header;
  if (!std::getline(in_, header)) throw InvalidInputError("csv reader: empty input");
  ++line_;
  const std::vector<std::string> fields = split_line(header);
  std::vector<std::string> expected = {"delta", "y"};
  for (Index j = 0; j < p_; ++j) expected.push_back("x" + std::to_string(j + 1));
  for (Index j = 0; j < q_; ++j) expected.push_back("z" + std::to_string(j + 1));
  if (fields.size() == expected.size() + 1 && fields.back() == "batch") {
    has_batch_column_ = true;
  } else if (fields.size() != expected.size()) {
    throw InvalidInputError("csv reader: header has " + std::to_string(fields.size()) +
                            " columns, expected delta,y,x1..x" + std::to_string(p_) +
                            (q_ > 0 ? ",z1..z" + std::to_string(q_) : "") + "[,batch]");
  }
  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (fields[j] != expected[j]) {
      throw InvalidInputError("csv reader: header column " + std::to_string(j + 1) + " is \"" +
                              fields[j] + "\", expected \"" + expected[j] + "\"");
    }
  }
  if (!batch_size_ && !has_batch_column_) {
    throw InvalidInputError("csv reader: no batch column and no batch size given");
  }
}

bool BatchCsvReader::read_row(Row& row) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    const std::size_t expected =
        2 + static_cast<std::size_t>(p_ + q_) + (has_batch_column_ ? 1 : 0);
    if (fields.size() != expected) {
      throw DataFormatError(line_, "expected " + std::to_string(expected) + " fields, found " +
                                       std::to_string(fields.size()));
    }
    const double delta = parse_double(fields[0], line_, "delta");
    if (delta != 0.0 && delta != 1.0) throw DataFormatError(line_, "delta must be 0 or 1");
    row.delta = delta == 1.0 ? 1 : 0;
    if (row.delta) {
      if (fields[1].empty()) throw DataFormatError(line_, "missing y with delta=1");
      row.y = parse_double(fields[1], line_, "y");
    } else {
      row.y = std::numeric_limits<double>::quiet_NaN();
    }
    row.x.resize(static_cast<std::size_t>(p_));
    for (Index j = 0; j < p_; ++j) {
      row.x[static_cast<std::size_t>(j)] =
          parse_double(fields[2 + static_cast<std::size_t>(j)], line_, "covariate");
    }
    row.z.resize(static_cast<std::size_t>(q_));
    for (Index j = 0; j < q_; ++j) {
      row.z[static_cast<std::size_t>(j)] =
          parse_double(fields[2 + static_cast<std::size_t>(p_ + j)], line_, "covariate");
    }
    if (has_batch_column_) {
      row.batch_label =
          static_cast<long long>(parse_double(fields.back(), line_, "batch label"));
    } else {
      row.batch_label = 0;
    }
    return true;
  }
  return false;
}

std::optional<Batch> BatchCsvReader::next() {
  if (done_) return std::nullopt;
  std::vector<Row> rows;
  if (pending_) {
    rows.push_back(std::move(*pending_));
    pending_.reset();
  }

  Row row;
  while (true) {
    if (batch_size_ && static_cast<Index>(rows.size()) == *batch_size_) break;
    if (!read_row(row)) {
      done_ = true;
      break;
    }
    if (!batch_size_ && !rows.empty() && row.batch_label != rows.front().batch_label) {
      pending_ = std::move(row);
      break;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return std::nullopt;

  Batch batch;
  const Index n = static_cast<Index>(rows.size());
  batch.observed.resize(n);
  batch.y.resize(n);
  batch.x.resize(n, p_);
  batch.z.resize(n, q_);
  for (Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    batch.observed[i] = r.delta;
    batch.y[i] = r.y;
    for (Index j = 0; j < p_; ++j) batch.x(i, j) = r.x[static_cast<std::size_t>(j)];
    for (Index j = 0; j < q_; ++j) batch.z(i, j) = r.z[static_cast<std::size_t>(j)];
  }
  return batch;
}

}  // namespace streamglm
