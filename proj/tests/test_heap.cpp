#include <doctest.h>

#include <random>

#include "meshmem/errors.hpp"
#include "meshmem/heap.hpp"

using namespace meshmem;

namespace {
SymmetricHeap fresh() { return SymmetricHeap(16384, 32768); }
}  // namespace

TEST_CASE("bump allocation from the reserved-region end") {
  SymmetricHeap h = fresh();
  CHECK(h.alloc(8) == 16384);
  CHECK(h.alloc(16) == 16392);
  CHECK(h.brk() == 16408);
}

TEST_CASE("sizes round up to 8-byte granularity") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(1);
  std::uint32_t b = h.alloc(1);
  CHECK(b - a == 8);
}

TEST_CASE("allocation past the limit fails with the null sentinel") {
  SymmetricHeap h = fresh();
  CHECK(h.alloc(32768) == SymmetricHeap::kNull);  // only 16 KiB available
  CHECK(h.brk() == 16384);                        // untouched
  CHECK(h.alloc(16384) == 16384);                 // exactly fits
  CHECK(h.alloc(1) == SymmetricHeap::kNull);
}

TEST_CASE("free follows stack discipline") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  std::uint32_t b = h.alloc(24);
  h.free(b);
  h.free(a);
  CHECK(h.brk() == h.base());
  CHECK(h.live_blocks() == 0);
}

TEST_CASE("out-of-order free is an ordering violation") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  (void)h.alloc(8);
  CHECK_THROWS_AS(h.free(a), HeapError);
  try {
    h.free(a);
  } catch (const HeapError& e) {
    CHECK(e.kind() == HeapError::Kind::out_of_order);
  }
}

TEST_CASE("free of an unknown offset") {
  SymmetricHeap h = fresh();
  (void)h.alloc(8);
  try {
    h.free(h.base() - 1);
    FAIL("expected HeapError");
  } catch (const HeapError& e) {
    CHECK(e.kind() == HeapError::Kind::unknown_block);
  }
}

TEST_CASE("realloc grows the top block in place") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  std::uint32_t before = h.brk();
  CHECK(h.realloc(a, 24) == a);
  CHECK(h.brk() == before + 16);
}

TEST_CASE("realloc of a non-top block is an ordering violation") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  (void)h.alloc(8);
  try {
    (void)h.realloc(a, 16);
    FAIL("expected HeapError");
  } catch (const HeapError& e) {
    CHECK(e.kind() == HeapError::Kind::out_of_order);
  }
}

TEST_CASE("realloc to zero behaves as free") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  CHECK(h.realloc(a, 0) == SymmetricHeap::kNull);
  CHECK(h.brk() == h.base());
  CHECK(h.live_blocks() == 0);
}

TEST_CASE("realloc past the limit fails and leaves the block intact") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  CHECK(h.realloc(a, 32768) == SymmetricHeap::kNull);
  CHECK(h.brk() == h.base() + 8);
  h.free(a);  // still the top block
}

TEST_CASE("memalign pads up to the requested alignment") {
  SymmetricHeap h = fresh();
  (void)h.alloc(8);  // brk 16392
  CHECK(h.memalign(64, 8) == 16448);
}

TEST_CASE("memalign with minimal alignment equals alloc") {
  SymmetricHeap a = fresh(), b = fresh();
  CHECK(a.memalign(8, 8) == b.alloc(8));
}

TEST_CASE("memalign rejects non-power-of-two alignment") {
  SymmetricHeap h = fresh();
  CHECK_THROWS_AS(h.memalign(48, 8), HeapError);
  CHECK_THROWS_AS(h.memalign(4, 8), HeapError);
}

TEST_CASE("memalign padding preserves stack discipline") {
  SymmetricHeap h = fresh();
  std::uint32_t a = h.alloc(8);
  std::uint32_t b = h.memalign(128, 8);
  h.free(b);
  CHECK(h.brk() == a + 8);  // padding reclaimed with the block
  h.free(a);
  CHECK(h.brk() == h.base());
}

TEST_CASE("identical op sequences give identical offsets on every replica") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SymmetricHeap> replicas(8, fresh());
    std::vector<std::uint32_t> live;
    for (int step = 0; step < 100; ++step) {
      std::uint64_t roll = rng() % 4;
      std::uint32_t nbytes = 1 + static_cast<std::uint32_t>(rng() % 700);
      std::uint32_t align = 8u << (rng() % 5);
      bool is_alloc = roll == 0 || live.empty();
      std::uint32_t first = 0;
      for (std::size_t i = 0; i < replicas.size(); ++i) {
        std::uint32_t r = 0;
        if (is_alloc) {
          r = replicas[i].alloc(nbytes);
        } else if (roll == 1) {
          replicas[i].free(live.back());
        } else if (roll == 2) {
          r = replicas[i].realloc(live.back(), nbytes);
        } else {
          r = replicas[i].memalign(align, nbytes);
        }
        if (i == 0) {
          first = r;
        } else {
          REQUIRE(r == first);
        }
      }
      if ((is_alloc || roll == 3) && first != SymmetricHeap::kNull) {
        live.push_back(first);
      } else if (!is_alloc && roll == 1) {
        live.pop_back();
      }
    }
  }
}

TEST_CASE("live blocks never overlap and stay inside [base, brk)") {
  std::mt19937_64 rng(123);
  SymmetricHeap h = fresh();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> live;  // offset, size
  for (int step = 0; step < 500; ++step) {
    if (rng() % 3 != 0 || live.empty()) {
      std::uint32_t n = 1 + static_cast<std::uint32_t>(rng() % 200);
      std::uint32_t off = h.alloc(n);
      if (off != SymmetricHeap::kNull) live.push_back({off, (n + 7) / 8 * 8});
    } else {
      h.free(live.back().first);
      live.pop_back();
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
      CHECK(live[i].first >= h.base());
      CHECK(live[i].first + live[i].second <= h.brk());
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        bool disjoint = live[i].first + live[i].second <= live[j].first ||
                        live[j].first + live[j].second <= live[i].first;
        CHECK(disjoint);
      }
    }
  }
}
