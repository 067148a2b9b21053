#include "civ/sampling/queue.hpp"

#include "civ/error.hpp"

namespace civ {

FifoQueue::FifoQueue(std::size_t capacity, std::size_t width) : capacity_(capacity), width_(width) {
  if (capacity == 0) throw ConfigError("queue capacity must be >= 1");
}

Matrix FifoQueue::push(std::span<const double> row) {
  if (row.size() != width_) {
    throw ShapeError("queue push: row width " + std::to_string(row.size()) + ", queue width " + std::to_string(width_));
  }
  Matrix evicted(0, width_);
  items_.emplace_back(row.begin(), row.end());
  while (items_.size() > capacity_) {
    evicted.append_row(items_.front());
    items_.pop_front();
  }
  return evicted;
}

Matrix FifoQueue::push(const Matrix& rows) {
  if (rows.cols() != width_ && rows.rows() > 0) {
    throw ShapeError("queue push: row width " + std::to_string(rows.cols()) + ", queue width " +
                     std::to_string(width_));
  }
  Matrix evicted(0, width_);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const Matrix e = push(rows.row(r));
    for (std::size_t i = 0; i < e.rows(); ++i) evicted.append_row(e.row(i));
  }
  return evicted;
}

Matrix FifoQueue::contents() const {
  Matrix out(0, width_);
  for (const auto& item : items_) out.append_row(item);
  return out;
}

Matrix queue_push(NegativeQueues& queues, const Matrix& rows, ViewKind view) { return queues.of(view).push(rows); }

}  // namespace civ
