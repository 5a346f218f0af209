#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshmem/timing.hpp"
#include "meshmem/topology.hpp"
#include "meshmem/types.hpp"

#include <boost/context/fiber.hpp>

namespace meshmem {

struct MachineConfig {
  int rows = 4;
  int cols = 4;
  Coord origin{32, 8};
  std::uint32_t mem_per_core = 32768;
  std::vector<Coord> disabled;
  // The reserved region [0, heap_base) models code/stack/private data; the
  // symmetric heap occupies [heap_base, heap_limit). heap_limit 0 means
  // mem_per_core.
  std::uint32_t heap_base = 16384;
  std::uint32_t heap_limit = 0;
  TimingParams timing;
  Mode mode = Mode::timed;
  std::uint64_t seed = 1;

  std::uint32_t effective_heap_limit() const {
    return heap_limit != 0 ? heap_limit : mem_per_core;
  }

  /// Throws ConfigError on invalid extent, a grid containing core (0,0)
  /// (reserved as the local alias window), mem_per_core that is zero, not a
  /// multiple of 8 or beyond the 20-bit offset range, or a bad heap split.
  void validate() const;
};

struct MachineReport {
  std::vector<int> exit_codes;
  std::vector<std::string> failures;  // per PE; empty string = none
  std::vector<Cycles> final_cycles;
  std::uint64_t turns = 0;
  std::uint64_t events_applied = 0;

  bool operator==(const MachineReport&) const = default;
  bool all_ok() const {
    for (const auto& f : failures) {
      if (!f.empty()) return false;
    }
    return true;
  }
};

enum class TraceKind : std::uint8_t {
  barrier_enter,
  barrier_exit,
  fence,
  quiet,
  put,
  get,
  atomic,
  dma,
};

/// One record of the optional event trace. `seq` is a global counter
/// incremented per record, so it totally orders records in scheduling
/// order; `time` is the recording PE's clock (0 in functional mode).
/// For barrier records (a, b) identify the barrier instance.
struct TraceEvent {
  TraceKind kind;
  int pe;
  Timestamp time;
  std::uint64_t seq;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

/// Cost annotation for a remote effect: how far the issuing PE's clock
/// advances at issue, and how long until the effect becomes visible at the
/// target. Both are ignored in functional mode.
struct TransferCost {
  Cycles issuer_advance = 0;
  Cycles visibility_delay = 0;
};

/// How a blocked PE's clock advances when its wake condition is satisfied
/// at timestamp ts: exactly ts, ts plus one poll quantum (waits), or ts
/// rounded up to the next poll tick (DMA status spinning).
enum class WakeRule : std::uint8_t { exact, add_poll, round_up_poll };

class Machine;

/// Per-PE handle passed to SPMD programs. Every method that touches the
/// machine is a scheduling point; all of them may only be called from
/// inside the owning PE's program.
class PeContext {
 public:
  int pe() const { return rank_; }
  int n_pes() const;
  Coord coord() const;
  Mode mode() const;
  Timestamp clock() const;
  const TimingParams& timing() const;
  const MachineConfig& config() const;

  /// Remote or local store, charged with the cpu-engine transfer model and
  /// blocking until delivered.
  void write(GlobalAddress ga, std::span<const std::uint8_t> data);
  /// Store with an explicit cost annotation (collective signal paths).
  void write(GlobalAddress ga, std::span<const std::uint8_t> data,
             TransferCost cost);
  /// Store through the DMA engine; the issuing PE spins on the status
  /// register, so its clock rounds up to the next poll tick past completion.
  void dma_write(GlobalAddress ga, std::span<const std::uint8_t> data);

  /// Samples the target memory at the issuing PE's current simulated time,
  /// then charges the cpu-engine transfer cost.
  void read(GlobalAddress ga, std::span<std::uint8_t> out);

  /// Indivisible read-modify-write; returns the pre-operation value.
  /// Target word must be width-aligned. width is 4 or 8 bytes.
  std::uint64_t atomic_rmw(GlobalAddress ga, AtomicOp op, unsigned width,
                           std::uint64_t operand, std::uint64_t compare = 0);
  /// Fire-and-forget atomic with an explicit cost annotation; the issuer
  /// does not wait for application (collective signal paths).
  void atomic_post(GlobalAddress ga, AtomicOp op, unsigned width,
                   std::uint64_t operand, TransferCost cost);

  /// Blocks until memory-at-offset cmp value holds on this PE's own memory.
  /// A blocked PE consumes no scheduler turns. `what` describes the wait
  /// for deadlock reports.
  void wait_word(std::uint32_t local_offset, ElemType type, Cmp cmp,
                 std::uint64_t value_bits, WakeRule rule,
                 std::string_view what);

  /// Full-chip hardware barrier: blocks until every live PE has arrived;
  /// in timed mode all PEs leave at max-arrival + wand_barrier_cycles.
  void wand_barrier();

  /// Charges modeled local compute.
  void advance(Cycles c);
  /// Plain scheduling point.
  void yield();

  /// Zero-cost samples/patches of this PE's own memory, for runtime
  /// internals and modeled compute sections whose cycle cost is charged
  /// separately through advance(). Not scheduling points.
  std::uint64_t peek_word(std::uint32_t offset, unsigned width) const;
  std::vector<std::uint8_t> peek_bytes(std::uint32_t offset,
                                       std::size_t len) const;
  void poke_bytes(std::uint32_t offset, std::span<const std::uint8_t> data);

  void trace_marker(TraceKind kind, std::uint64_t a = 0, std::uint64_t b = 0);

  /// Barrier-instance bookkeeping for the trace checker. Calls on one
  /// synchronization key are totally ordered by the reuse discipline, so
  /// the machine groups entries into instances of expected_k arrivals and
  /// hands out a global ordinal per instance.
  std::uint64_t barrier_enter_mark(std::uint64_t key, int expected_k);
  void barrier_exit_mark(std::uint64_t key, std::uint64_t ordinal);

 private:
  friend class Machine;
  PeContext(Machine* m, int rank) : m_(m), rank_(rank) {}

  Machine* m_;
  int rank_;
};

using PeProgram = std::function<int(PeContext&)>;

/// Discrete-event simulation of the core grid. One coordinator owns the
/// whole machine; PE programs run as fibers whose every machine interaction
/// funnels through the scheduler, so a run is single-threaded and
/// deterministic for a fixed (config, seed, program). The machine may be
/// driven from different threads over its lifetime but never from two
/// concurrently.
///
/// Functional mode applies effects immediately in a seed-randomized
/// schedule and keeps no clocks. Timed mode runs lowest-clock-first with a
/// timestamped event queue; ties break on (timestamp, issuing PE rank,
/// per-PE sequence number), and a remote store becomes visible at its
/// completion timestamp.
class Machine {
 public:
  explicit Machine(MachineConfig cfg);
  ~Machine();

  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  const MachineConfig& config() const { return cfg_; }
  const Workgroup& grid() const { return grid_; }
  Mode mode() const { return cfg_.mode; }
  int n_pes() const { return grid_.n_pes(); }

  /// Runs the program on every live PE. Throws DeadlockError when all
  /// unfinished PEs are blocked with no pending events. A PE program that
  /// throws is recorded in the report (exit code -1, failure message).
  MachineReport run_spmd(const PeProgram& program);

  /// Re-zeroes all core memories and clocks; the machine is then as
  /// freshly built.
  void reset();

  /// (rank, offset) a global address resolves to when issued by
  /// issuing_pe, applying the local-alias rule for a zero core-id field.
  /// Throws AddressError for coordinates outside the live grid or offsets
  /// past the end of core memory.
  std::pair<int, std::uint32_t> resolve(GlobalAddress ga,
                                        int issuing_pe) const;

  // Zero-cost host-side memory access for harnesses, oracles and tests.
  void debug_write(int pe, std::uint32_t offset,
                   std::span<const std::uint8_t> data);
  std::vector<std::uint8_t> debug_read(int pe, std::uint32_t offset,
                                       std::size_t len) const;
  /// All live cores' memories concatenated in rank order.
  std::vector<std::uint8_t> memory_image() const;

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  const std::vector<TraceEvent>& trace() const { return trace_; }

 private:
  friend class PeContext;

  struct Event {
    Timestamp ts = 0;
    int issuer = -1;
    std::uint64_t seq = 0;
    enum class Kind : std::uint8_t { store, atomic } kind = Kind::store;
    int target = -1;
    std::uint32_t offset = 0;
    std::vector<std::uint8_t> data;
    AtomicOp op = AtomicOp::add;
    unsigned width = 0;
    std::uint64_t operand = 0;
    std::uint64_t compare = 0;
    int result_waiter = -1;      // PE blocked on the old value
    int completion_waiter = -1;  // PE spinning on DMA completion
  };
  // Heap comparator: min (ts, issuer, seq) at the front.
  struct EventAfter {
    bool operator()(const std::unique_ptr<Event>& a,
                    const std::unique_ptr<Event>& b) const;
  };
  void push_event(std::unique_ptr<Event> ev);
  std::unique_ptr<Event> pop_event();

  struct Wait {
    enum class Kind : std::uint8_t {
      none,
      word,
      atomic_result,
      dma_done,
      rendezvous,
    } kind = Kind::none;
    std::uint32_t offset = 0;
    std::uint32_t len = 0;
    ElemType type = ElemType::i64;
    Cmp cmp = Cmp::eq;
    std::uint64_t value_bits = 0;
    WakeRule rule = WakeRule::exact;
    std::string what;
  };

  struct Pe {
    enum class State : std::uint8_t {
      runnable,
      blocked,
      finished,
      failed,
    } state = State::runnable;
    boost::context::fiber fiber;
    boost::context::fiber sched;
    Timestamp clock = 0;
    std::uint64_t next_seq = 0;
    int exit_code = 0;
    std::string failure;
    bool abort = false;
    std::uint64_t atomic_result = 0;
    Wait wait;
  };

  struct PeAbort {};

  // Scheduler internals.
  void start_fibers(const PeProgram& program);
  void unwind_fibers();
  int pick_runnable();
  void resume_pe(int rank);
  void yield_current();
  void block_current(Wait w);
  void apply_event(const Event& ev);
  void apply_store(int target, std::uint32_t offset,
                   std::span<const std::uint8_t> data, Timestamp ts);
  std::uint64_t apply_atomic(const Event& ev);
  void check_word_waiter(int target, std::uint32_t offset, std::uint32_t len,
                         Timestamp ts);
  void wake_pe(int rank, Timestamp ts, WakeRule rule);
  [[noreturn]] void report_deadlock();

  // Issue-side helpers running inside PE fibers.
  std::pair<int, std::uint32_t> resolve_checked(GlobalAddress ga, int issuer,
                                                std::uint64_t len) const;
  void issue_store(int rank, GlobalAddress ga,
                   std::span<const std::uint8_t> data, TransferCost cost,
                   CopyEngine engine, bool block_for_completion);
  std::uint64_t load_word(int rank, std::uint32_t offset,
                          unsigned width) const;
  void store_word(int rank, std::uint32_t offset, unsigned width,
                  std::uint64_t value);
  bool eval_wait(const Pe& pe, int rank) const;
  void record(TraceKind kind, int pe, std::uint64_t a, std::uint64_t b);

  MachineConfig cfg_;
  Workgroup grid_;
  std::vector<std::vector<std::uint8_t>> mem_;
  std::vector<Pe> pes_;
  std::vector<std::unique_ptr<Event>> events_;  // binary heap via EventAfter
  std::mt19937_64 rng_;
  bool running_ = false;
  int current_pe_ = -1;
  std::uint64_t turns_ = 0;
  std::uint64_t events_applied_ = 0;

  // Hardware wait-on-AND rendezvous state.
  std::uint64_t wand_epoch_ = 0;
  int wand_arrived_ = 0;
  Timestamp wand_max_entry_ = 0;

  struct BarrierGroup {
    std::uint64_t next_ordinal = 0;
    int entered = 0;
    int expected = 0;
  };
  std::map<std::uint64_t, BarrierGroup> barrier_groups_;

  bool trace_enabled_ = false;
  std::uint64_t trace_seq_ = 0;
  std::vector<TraceEvent> trace_;
};

}  // namespace meshmem
