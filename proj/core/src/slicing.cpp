#include "irds/slicing.hpp"

#include <algorithm>
#include <charconv>

#include "irds/docstore.hpp"
#include "irds/errors.hpp"

namespace irds {

namespace {

__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::invalid_slice, msg); }

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) {
    invalid("malformed slice '" + std::string(whole) + "'");
  }
  return v;
}

std::optional<SliceBound> parse_bound(std::string_view s, std::string_view whole) {
  if (s.empty()) return std::nullopt;
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_int(s, whole);
  Fraction f{parse_int(s.substr(0, slash), whole), parse_int(s.substr(slash + 1), whole)};
  if (f.den <= 0 || f.num < 0 || f.num > f.den) {
    invalid("fraction in slice '" + std::string(whole) + "' must lie in [0, 1]");
  }
  return f;
}

std::uint64_t resolve(const SliceBound& b, std::uint64_t n) {
  if (const auto* f = std::get_if<Fraction>(&b)) {
    const auto v = static_cast<u128>(f->num) * n / static_cast<u128>(f->den);
    return static_cast<std::uint64_t>(v);
  }
  const auto i = std::get<std::int64_t>(b);
  const auto sn = static_cast<i128>(n);
  i128 v = i < 0 ? sn + i : static_cast<i128>(i);
  v = std::clamp<i128>(v, 0, sn);
  return static_cast<std::uint64_t>(v);
}

std::string bound_text(const std::optional<SliceBound>& b) {
  if (!b) return {};
  if (const auto* f = std::get_if<Fraction>(&*b)) {
    return std::to_string(f->num) + "/" + std::to_string(f->den);
  }
  return std::to_string(std::get<std::int64_t>(*b));
}

class DocstoreSource : public SeekableDocs {
 public:
  explicit DocstoreSource(std::shared_ptr<const Docstore> store) : store_(std::move(store)) {}
  std::uint64_t count() const override { return store_->count(); }
  Record read(std::uint64_t position) const override { return store_->read_position(position); }

 private:
  std::shared_ptr<const Docstore> store_;
};

class VectorSource : public SeekableDocs {
 public:
  explicit VectorSource(std::vector<Record> records) : records_(std::move(records)) {}
  std::uint64_t count() const override { return records_.size(); }
  Record read(std::uint64_t position) const override { return records_.at(position); }

 private:
  std::vector<Record> records_;
};

class ViewReader : public RecordReader {
 public:
  ViewReader(std::shared_ptr<const SeekableDocs> source, ResolvedSlice bounds)
      : source_(std::move(source)), bounds_(bounds), pos_(bounds.start) {}

  std::optional<Record> next() override {
    if (pos_ >= bounds_.stop) return std::nullopt;
    auto record = source_->read(pos_);
    pos_ = bounds_.stop - pos_ > bounds_.step ? pos_ + bounds_.step : bounds_.stop;
    ++stats_.records;
    return record;
  }
  ParseStats stats() const override { return stats_; }

 private:
  std::shared_ptr<const SeekableDocs> source_;
  ResolvedSlice bounds_;
  std::uint64_t pos_;
  ParseStats stats_;
};

}  // namespace

SliceExpr SliceExpr::parse(std::string_view text) {
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) {
    invalid("slice '" + std::string(text) + "' must have the form start:stop[:step]");
  }
  const auto c2 = text.find(':', c1 + 1);
  SliceExpr expr;
  expr.start = parse_bound(text.substr(0, c1), text);
  if (c2 == std::string_view::npos) {
    expr.stop = parse_bound(text.substr(c1 + 1), text);
  } else {
    expr.stop = parse_bound(text.substr(c1 + 1, c2 - c1 - 1), text);
    const auto step = text.substr(c2 + 1);
    if (!step.empty()) {
      if (step.find('/') != std::string_view::npos) invalid("slice step must be an integer");
      expr.step = parse_int(step, text);
    }
  }
  if (expr.step < 1) invalid("slice step must be >= 1, got " + std::to_string(expr.step));
  return expr;
}

std::string SliceExpr::to_string() const {
  auto out = bound_text(start) + ":" + bound_text(stop);
  if (step != 1) out += ":" + std::to_string(step);
  return out;
}

SliceExpr SliceExpr::range(std::optional<std::int64_t> start, std::optional<std::int64_t> stop,
                           std::int64_t step) {
  SliceExpr expr;
  if (start) expr.start = *start;
  if (stop) expr.stop = *stop;
  expr.step = step;
  return expr;
}

ResolvedSlice resolve_bounds(const SliceExpr& expr, std::uint64_t n) {
  if (expr.step < 1) invalid("slice step must be >= 1, got " + std::to_string(expr.step));
  for (const auto* b : {&expr.start, &expr.stop}) {
    if (!*b) continue;
    if (const auto* f = std::get_if<Fraction>(&**b); f && (f->den <= 0 || f->num < 0 || f->num > f->den)) {
      invalid("slice fraction must lie in [0, 1]");
    }
  }
  ResolvedSlice r;
  r.step = static_cast<std::uint64_t>(expr.step);
  r.stop = expr.stop ? resolve(*expr.stop, n) : n;
  r.start = expr.start ? resolve(*expr.start, n) : 0;
  if (r.start > r.stop) r.stop = r.start;
  return r;
}

std::shared_ptr<const SeekableDocs> docstore_source(std::shared_ptr<const Docstore> store) {
  return std::make_shared<DocstoreSource>(std::move(store));
}

std::shared_ptr<const SeekableDocs> vector_source(std::vector<Record> records) {
  return std::make_shared<VectorSource>(std::move(records));
}

DocsView::DocsView(std::shared_ptr<const SeekableDocs> source)
    : DocsView(source, ResolvedSlice{0, source->count(), 1}) {}

DocsView::DocsView(std::shared_ptr<const SeekableDocs> source, ResolvedSlice bounds)
    : source_(std::move(source)), bounds_(bounds), state_(std::make_shared<State>()) {}

void DocsView::ensure_fresh(const char* action) const {
  if (state_->started.load()) {
    invalid(std::string("cannot ") + action + " a view after iteration has begun");
  }
}

DocsView DocsView::slice(const SliceExpr& expr) const {
  ensure_fresh("slice");
  const auto rel = resolve_bounds(expr, size());
  const auto& old = bounds_;
  const auto abs = [&](std::uint64_t i) {
    const auto v = static_cast<u128>(old.start) +
                   static_cast<u128>(i) * old.step;
    return static_cast<std::uint64_t>(std::min<u128>(v, old.stop));
  };
  ResolvedSlice next;
  next.step = old.step * rel.step;
  next.stop = abs(rel.stop);
  next.start = std::min(abs(rel.start), next.stop);
  return DocsView(source_, next);
}

RecordStream DocsView::open() const {
  if (state_->started.exchange(true)) invalid("view has already been iterated");
  return RecordStream(std::make_unique<ViewReader>(source_, bounds_));
}

DocsView partition(const DocsView& view, std::uint64_t workers, std::uint64_t index) {
  if (workers == 0 || index >= workers) {
    throw Error(ErrorKind::invalid_slice, "partition " + std::to_string(index) + " of " +
                                              std::to_string(workers) + " is out of range");
  }
  const auto n = static_cast<u128>(view.size());
  const auto lo = static_cast<std::int64_t>(n * index / workers);
  const auto hi = static_cast<std::int64_t>(n * (index + 1) / workers);
  return view.slice(SliceExpr::range(lo, hi));
}

}  // namespace irds
