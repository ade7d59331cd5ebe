#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "irds/docstore.hpp"
#include "irds/errors.hpp"
#include "irds/slicing.hpp"
#include "test_support.hpp"

namespace irds {
namespace {

using testing::Rng;
using testing::uniform;

std::vector<Record> numbered(std::size_t n) {
  std::vector<Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(Schema::generic_docs(),
                     std::vector<Value>{std::to_string(i), "doc " + std::to_string(i)});
  }
  return out;
}

std::vector<std::size_t> positions(DocsView view) {
  std::vector<std::size_t> out;
  for (const auto& r : view.open()) out.push_back(std::stoul(r.id()));
  return out;
}

// Independent slice arithmetic over a materialized list of positions.
struct ListOracle {
  static std::int64_t bound(const std::optional<SliceBound>& b, std::int64_t n, std::int64_t dflt) {
    if (!b) return dflt;
    if (const auto* f = std::get_if<Fraction>(&*b)) return f->num * n / f->den;
    auto v = std::get<std::int64_t>(*b);
    if (v < 0) v += n;
    return std::clamp<std::int64_t>(v, 0, n);
  }

  static std::vector<std::size_t> apply(const std::vector<std::size_t>& list, const SliceExpr& e) {
    const auto n = static_cast<std::int64_t>(list.size());
    const auto start = bound(e.start, n, 0);
    const auto stop = bound(e.stop, n, n);
    std::vector<std::size_t> out;
    for (auto i = start; i < stop; i += e.step) out.push_back(list[static_cast<std::size_t>(i)]);
    return out;
  }
};

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

SliceExpr random_expr(Rng& rng, std::int64_t n) {
  auto pick = [&]() -> std::optional<SliceBound> {
    switch (uniform(rng, 0, 4)) {
      case 0:
        return std::nullopt;
      case 1:
        return static_cast<std::int64_t>(uniform(rng, 0, 2 * n + 2)) - n - 1;
      case 2: {
        const auto den = static_cast<std::int64_t>(uniform(rng, 1, 12));
        return Fraction{static_cast<std::int64_t>(uniform(rng, 0, den)), den};
      }
      default:
        return static_cast<std::int64_t>(uniform(rng, 0, n + 5));
    }
  };
  SliceExpr e;
  e.start = pick();
  e.stop = pick();
  e.step = uniform(rng, 0, 2) ? 1 : static_cast<std::int64_t>(uniform(rng, 2, 17));
  return e;
}

TEST(ResolveBounds, Examples) {
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("3::5"), 12), (ResolvedSlice{3, 12, 5}));
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("3::5"), 12).size(), 2u);
  for (std::uint64_t n : {0u, 1u, 99u}) {
    EXPECT_EQ(resolve_bounds(SliceExpr::parse(":"), n), (ResolvedSlice{0, n, 1}));
  }
  EXPECT_EQ(resolve_bounds(SliceExpr::parse(":1/3"), 10), (ResolvedSlice{0, 3, 1}));
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("-10:"), 7), (ResolvedSlice{0, 7, 1}));
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("8:2"), 10).size(), 0u);
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("-3:-1"), 10), (ResolvedSlice{7, 9, 1}));
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("1/2:"), 7), (ResolvedSlice{3, 7, 1}));
  EXPECT_EQ(resolve_bounds(SliceExpr::parse("50:"), 7).size(), 0u);
}

TEST(SliceExpr, ParseAndPrint) {
  const auto e = SliceExpr::parse("1/3:-2:4");
  EXPECT_EQ(std::get<Fraction>(*e.start), (Fraction{1, 3}));
  EXPECT_EQ(std::get<std::int64_t>(*e.stop), -2);
  EXPECT_EQ(e.step, 4);
  EXPECT_EQ(SliceExpr::parse(e.to_string()).to_string(), e.to_string());
  EXPECT_FALSE(SliceExpr::parse("::").start);
  for (const auto* bad : {"5", "a:b", "1:2:0", "1:2:-1", "5/3:", "1/0:", "-1/2:", "1:2:3:4",
                          "1.5:", ""}) {
    try {
      SliceExpr::parse(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_slice) << bad;
    }
  }
  SliceExpr zero;
  zero.step = 0;
  EXPECT_THROW(resolve_bounds(zero, 10), Error);
}

TEST(DocsView, LiteralCases) {
  const DocsView view(vector_source(numbered(10000)));
  const auto r = positions(view["100:110"]);
  ASSERT_EQ(r.size(), 10u);
  EXPECT_EQ(r.front(), 100u);
  EXPECT_EQ(r.back(), 109u);
  EXPECT_EQ(positions(view[":10"]).size(), 10u);
  EXPECT_EQ(positions(view["-10:"]).front(), 9990u);
  EXPECT_EQ(positions(view[":1/3"]).size(), 3333u);
  const auto every5 = positions(view["3::5"]);
  EXPECT_EQ(every5[0], 3u);
  EXPECT_EQ(every5[1], 8u);
  EXPECT_EQ(every5.size(), 2000u);
}

TEST(DocsView, CompositionLaw) {
  const DocsView view(vector_source(numbered(300)));
  for (std::int64_t n = 0; n <= 300; n += 37) {
    for (std::int64_t k = 0; k <= 300; k += 29) {
      EXPECT_EQ(positions(view.slice(SliceExpr::range(std::nullopt, n))
                              .slice(SliceExpr::range(k, std::nullopt))),
                positions(view.slice(SliceExpr::range(k, n))))
          << n << " " << k;
    }
  }
}

TEST(DocsView, DoubleSlicesMatchListOracle) {
  Rng rng(700);
  const auto n = 1000;
  const DocsView view(vector_source(numbered(n)));
  const auto all = iota(n);
  for (int i = 0; i < 200; ++i) {
    const auto e1 = random_expr(rng, n);
    const auto first = ListOracle::apply(all, e1);
    const auto e2 = random_expr(rng, static_cast<std::int64_t>(first.size()));
    const auto expected = ListOracle::apply(first, e2);
    ASSERT_EQ(positions(view.slice(e1).slice(e2)), expected)
        << e1.to_string() << " then " << e2.to_string();
  }
}

TEST(DocsView, FractionAndIntegerAgree) {
  for (std::size_t n = 0; n <= 200; n += 2) {
    const DocsView view(vector_source(numbered(n)));
    EXPECT_EQ(positions(view[":1/2"]),
              positions(view.slice(SliceExpr::range(std::nullopt, n / 2))));
  }
}

TEST(DocsView, SingleShot) {
  const DocsView view(vector_source(numbered(10)));
  auto stream = view.open();
  EXPECT_TRUE(view.consumed());
  EXPECT_THROW(view.open(), Error);
  try {
    view["1:"];
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_slice);
  }
  const DocsView fresh(vector_source(numbered(10)));
  const auto child = fresh["2:"];
  EXPECT_FALSE(fresh.consumed());
  EXPECT_EQ(positions(child).size(), 8u);
}

// Records every position read, to check that slices seek instead of scanning.
class CountingSource : public SeekableDocs {
 public:
  explicit CountingSource(std::size_t n) : records_(numbered(n)) {}
  std::uint64_t count() const override { return records_.size(); }
  Record read(std::uint64_t position) const override {
    std::lock_guard lock(mutex_);
    reads_.insert(position);
    return records_.at(position);
  }
  std::set<std::uint64_t> reads() const {
    std::lock_guard lock(mutex_);
    return reads_;
  }

 private:
  std::vector<Record> records_;
  mutable std::mutex mutex_;
  mutable std::set<std::uint64_t> reads_;
};

TEST(DocsView, ReadsOnlySelectedPositions) {
  auto source = std::make_shared<CountingSource>(5000);
  const DocsView view(source);
  const auto got = positions(view["1000:4000:7"]["10:20"]);
  std::set<std::uint64_t> expected(got.begin(), got.end());
  EXPECT_EQ(source->reads(), expected);
  EXPECT_EQ(*expected.begin(), 1070u);
}

TEST(DocsView, DocstoreSourceDecodesOnlyYieldedRecords) {
  testing::TempDir dir;
  auto store = Docstore::build(
      RecordStream(std::make_unique<VectorReader>(numbered(1000))), dir.path());
  Rng rng(701);
  const auto all = iota(1000);
  for (int i = 0; i < 50; ++i) {
    store->clear_cache();
    store->reset_counters();
    const auto e = random_expr(rng, 1000);
    const auto got = positions(DocsView(docstore_source(store)).slice(e));
    EXPECT_EQ(got, ListOracle::apply(all, e));
    EXPECT_EQ(store->counters().decodes, got.size());
  }
}

TEST(Partition, Examples) {
  const auto source = vector_source(numbered(10));
  std::vector<std::uint64_t> sizes;
  for (std::uint64_t i = 0; i < 3; ++i) sizes.push_back(partition(DocsView(source), 3, i).size());
  EXPECT_EQ(sizes, (std::vector<std::uint64_t>{3, 3, 4}));
  EXPECT_EQ(positions(partition(DocsView(source), 1, 0)), iota(10));
  EXPECT_THROW(partition(DocsView(source), 0, 0), Error);
  EXPECT_THROW(partition(DocsView(source), 3, 3), Error);
}

TEST(Partition, CompleteAndDisjoint) {
  Rng rng(702);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = uniform(rng, 0, 10000);
    const auto workers = uniform(rng, 1, 16);
    const auto source = vector_source(numbered(n));
    std::vector<std::size_t> joined;
    for (std::uint64_t i = 0; i < workers; ++i) {
      const auto part = positions(partition(DocsView(source), workers, i));
      joined.insert(joined.end(), part.begin(), part.end());
    }
    ASSERT_EQ(joined, iota(n)) << n << " / " << workers;
  }
}

TEST(Partition, OfASlicedView) {
  const auto source = vector_source(numbered(100));
  const DocsView view(source);
  std::vector<std::size_t> joined;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto part = positions(partition(view["10:90:3"], 4, i));
    joined.insert(joined.end(), part.begin(), part.end());
  }
  EXPECT_EQ(joined, ListOracle::apply(iota(100), SliceExpr::parse("10:90:3")));
}

}  // namespace
}  // namespace irds
