#pragma once

#include <cstdint>
#include <iterator>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "irds/record.hpp"

namespace irds {

struct ParseStats {
  std::uint64_t records = 0;
  /// Malformed UTF-8 sequences replaced with U+FFFD.
  std::uint64_t replaced_sequences = 0;
};

/// Single-consumer pull interface over records.
class RecordReader {
 public:
  virtual ~RecordReader() = default;
  virtual std::optional<Record> next() = 0;
  virtual ParseStats stats() const { return {}; }
};

/// Owning handle over a RecordReader, usable in range-for.
class RecordStream {
 public:
  RecordStream() = default;
  explicit RecordStream(std::unique_ptr<RecordReader> reader) : reader_(std::move(reader)) {}

  std::optional<Record> next() { return reader_ ? reader_->next() : std::nullopt; }
  ParseStats stats() const { return reader_ ? reader_->stats() : ParseStats{}; }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Record;
    using difference_type = std::ptrdiff_t;
    using pointer = const Record*;
    using reference = const Record&;

    iterator() = default;
    explicit iterator(RecordStream* owner) : owner_(owner) { advance(); }

    reference operator*() const { return *current_; }
    pointer operator->() const { return &*current_; }
    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }
    friend bool operator==(const iterator& it, std::default_sentinel_t) { return !it.current_; }

   private:
    void advance() { current_ = owner_->next(); }

    RecordStream* owner_ = nullptr;
    std::optional<Record> current_;
  };

  iterator begin() { return iterator(this); }
  std::default_sentinel_t end() { return {}; }

 private:
  std::unique_ptr<RecordReader> reader_;
};

/// Reader over an already materialized sequence.
class VectorReader : public RecordReader {
 public:
  explicit VectorReader(std::vector<Record> records) : records_(std::move(records)) {}

  std::optional<Record> next() override {
    if (pos_ >= records_.size()) return std::nullopt;
    return records_[pos_++];
  }

 private:
  std::vector<Record> records_;
  std::size_t pos_ = 0;
};

inline std::vector<Record> collect(RecordStream stream) {
  std::vector<Record> out;
  while (auto r = stream.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace irds
