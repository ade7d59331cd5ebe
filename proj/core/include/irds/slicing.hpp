#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "irds/record.hpp"
#include "irds/stream.hpp"

namespace irds {

class Docstore;

/// Exact rational endpoint in [0, 1].
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  bool operator==(const Fraction&) const = default;
};

using SliceBound = std::variant<std::int64_t, Fraction>;

struct SliceExpr {
  std::optional<SliceBound> start;
  std::optional<SliceBound> stop;
  std::int64_t step = 1;

  /// "start:stop[:step]"; each part may be empty, an integer (negatives
  /// count from the end) or a fraction "a/b". Throws Error(invalid_slice).
  static SliceExpr parse(std::string_view text);
  std::string to_string() const;

  static SliceExpr range(std::optional<std::int64_t> start, std::optional<std::int64_t> stop,
                         std::int64_t step = 1);
};

/// Absolute positions start, start+step, ... below stop.
struct ResolvedSlice {
  std::uint64_t start = 0;
  std::uint64_t stop = 0;
  std::uint64_t step = 1;

  std::uint64_t size() const noexcept {
    return start < stop ? (stop - start + step - 1) / step : 0;
  }
  bool operator==(const ResolvedSlice&) const = default;
};

ResolvedSlice resolve_bounds(const SliceExpr& expr, std::uint64_t n);

/// Documents addressable by position in iteration order.
class SeekableDocs {
 public:
  virtual ~SeekableDocs() = default;
  virtual std::uint64_t count() const = 0;
  virtual Record read(std::uint64_t position) const = 0;
};

std::shared_ptr<const SeekableDocs> docstore_source(std::shared_ptr<const Docstore> store);
std::shared_ptr<const SeekableDocs> vector_source(std::vector<Record> records);

/// A lazily evaluated selection of positions over a SeekableDocs source.
/// Single-shot: once open() is called the view can neither be sliced nor
/// opened again.
class DocsView {
 public:
  explicit DocsView(std::shared_ptr<const SeekableDocs> source);

  /// Slices relative to this view. Throws Error(invalid_slice).
  DocsView slice(const SliceExpr& expr) const;
  DocsView operator[](const SliceExpr& expr) const { return slice(expr); }
  DocsView operator[](std::string_view expr) const { return slice(SliceExpr::parse(expr)); }

  RecordStream open() const;

  const ResolvedSlice& bounds() const noexcept { return bounds_; }
  std::uint64_t size() const noexcept { return bounds_.size(); }
  bool consumed() const noexcept { return state_->started.load(); }

 private:
  struct State {
    std::atomic<bool> started{false};
  };

  DocsView(std::shared_ptr<const SeekableDocs> source, ResolvedSlice bounds);
  void ensure_fresh(const char* action) const;

  std::shared_ptr<const SeekableDocs> source_;
  ResolvedSlice bounds_;
  std::shared_ptr<State> state_;
};

/// Worker `index` of `workers` gets [floor(i*n/w), floor((i+1)*n/w)) of the view.
DocsView partition(const DocsView& view, std::uint64_t workers, std::uint64_t index);

}  // namespace irds
