#pragma once

#include <deque>
#include <span>
#include <vector>

#include "civ/dataio/views.hpp"
#include "civ/numcore/matrix.hpp"

namespace civ {

// Bounded FIFO of encoded feature rows.
class FifoQueue {
 public:
  FifoQueue(std::size_t capacity, std::size_t width);

  // Appends rows in order; returns the rows evicted to respect capacity, oldest first.
  Matrix push(const Matrix& rows);
  Matrix push(std::span<const double> row);

  Matrix contents() const;  // oldest first
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t width() const { return width_; }
  bool empty() const { return items_.empty(); }

 private:
  std::size_t capacity_;
  std::size_t width_;
  std::deque<std::vector<double>> items_;
};

// The semi-width and full-width queues feeding the two momentum encoders.
struct NegativeQueues {
  FifoQueue semi;
  FifoQueue full;

  NegativeQueues(std::size_t capacity, std::size_t semi_width, std::size_t full_width)
      : semi(capacity, semi_width), full(capacity, full_width) {}

  FifoQueue& of(ViewKind kind) { return kind == ViewKind::semi ? semi : full; }
  const FifoQueue& of(ViewKind kind) const { return kind == ViewKind::semi ? semi : full; }
};

Matrix queue_push(NegativeQueues& queues, const Matrix& rows, ViewKind view);

}  // namespace civ
