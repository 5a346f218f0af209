#include "meshmem/collectives.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>
#include <string>
#include <type_traits>

#include "meshmem/errors.hpp"
#include "meshmem/shmem.hpp"

namespace meshmem {

namespace {

// Integer sum/prod wrap modulo 2^width, matching the machine's word
// arithmetic; going through unsigned keeps the wraparound well-defined.
template <typename T>
T combine_one(ReduceKind op, T a, T b) {
  if constexpr (std::is_integral_v<T>) {
    using U = std::make_unsigned_t<T>;
    switch (op) {
      case ReduceKind::sum:
        return static_cast<T>(static_cast<U>(a) + static_cast<U>(b));
      case ReduceKind::prod:
        return static_cast<T>(static_cast<U>(a) * static_cast<U>(b));
      case ReduceKind::min: return std::min(a, b);
      case ReduceKind::max: return std::max(a, b);
      case ReduceKind::band: return static_cast<T>(a & b);
      case ReduceKind::bor: return static_cast<T>(a | b);
      case ReduceKind::bxor: return static_cast<T>(a ^ b);
    }
  } else {
    switch (op) {
      case ReduceKind::sum: return a + b;
      case ReduceKind::prod: return a * b;
      case ReduceKind::min: return std::min(a, b);
      case ReduceKind::max: return std::max(a, b);
      default: break;  // bitwise kinds rejected for floats up front
    }
  }
  return a;
}

template <typename T>
void combine_typed(ReduceKind op, T* acc, const T* in, std::uint32_t n) {
  for (std::uint32_t i = 0; i < n; ++i) {
    acc[i] = combine_one(op, acc[i], in[i]);
  }
}

void combine_bytes(ReduceKind op, ElemType t, std::uint8_t* acc,
                   const std::uint8_t* in, std::uint32_t nelems) {
  switch (t) {
    case ElemType::i8:
      combine_typed(op, reinterpret_cast<std::int8_t*>(acc),
                    reinterpret_cast<const std::int8_t*>(in), nelems);
      return;
    case ElemType::i16:
      combine_typed(op, reinterpret_cast<std::int16_t*>(acc),
                    reinterpret_cast<const std::int16_t*>(in), nelems);
      return;
    case ElemType::i32:
      combine_typed(op, reinterpret_cast<std::int32_t*>(acc),
                    reinterpret_cast<const std::int32_t*>(in), nelems);
      return;
    case ElemType::i64:
      combine_typed(op, reinterpret_cast<std::int64_t*>(acc),
                    reinterpret_cast<const std::int64_t*>(in), nelems);
      return;
    case ElemType::f32:
      combine_typed(op, reinterpret_cast<float*>(acc),
                    reinterpret_cast<const float*>(in), nelems);
      return;
    case ElemType::f64:
      combine_typed(op, reinterpret_cast<double*>(acc),
                    reinterpret_cast<const double*>(in), nelems);
      return;
  }
}

}  // namespace

/// Shared plumbing of one collective call: member addressing, additive
/// pSync signaling, and the calibrated per-round cost model. Signals and
/// collective data puts advance the sender's clock by nothing and become
/// visible dissemination_round_cycles later; waits wake exactly at the
/// satisfying signal's timestamp. The per-operation micro-costs are
/// absorbed into the round constant.
struct CollectiveCall {
  ShmemCtx& ctx;
  PeContext& pe;
  const ActiveSet& aset;
  const SyncWork& sync;
  int k;
  int idx;  // my index within the active set

  Cycles round_latency() const {
    return ctx.timing().dissemination_round_cycles;
  }

  GlobalAddress member_addr(int index, std::uint32_t offset) const {
    int world = aset.world_rank(index);
    return encode_address(ctx.workgroup().coord_of_pe(world), offset);
  }

  std::uint32_t slot_offset(std::uint32_t slot) const {
    return sync.psync_offset + slot * 8;
  }

  void signal(int index, std::uint32_t slot, std::int64_t amount,
              Cycles latency) {
    pe.atomic_post(member_addr(index, slot_offset(slot)), AtomicOp::add, 8,
                   static_cast<std::uint64_t>(amount),
                   TransferCost{0, latency});
  }

  /// Consumes `amount` from my own slot.
  void consume(std::uint32_t slot, std::int64_t amount) {
    pe.atomic_post(member_addr(idx, slot_offset(slot)), AtomicOp::add, 8,
                   static_cast<std::uint64_t>(-amount), TransferCost{0, 0});
  }

  std::int64_t peek_slot(std::uint32_t slot) const {
    return static_cast<std::int64_t>(pe.peek_word(slot_offset(slot), 8));
  }

  /// Blocks until my slot holds at least min_value; returns the observed
  /// value. Values outside what legal signaling can produce raise
  /// SyncError.
  std::int64_t wait_slot_ge(std::uint32_t slot, std::int64_t min_value,
                            std::string_view what) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &min_value, 8);
    pe.wait_word(slot_offset(slot), ElemType::i64, Cmp::ge, bits,
                 WakeRule::exact, what);
    return peek_slot(slot);
  }

  /// Blocks until my slot is nonzero (one pending signal suffices).
  std::int64_t wait_slot_signal(std::uint32_t slot, std::string_view what) {
    pe.wait_word(slot_offset(slot), ElemType::i64, Cmp::ne, 0,
                 WakeRule::exact, what);
    std::int64_t val = peek_slot(slot);
    if (val < kBarrierSignal) {
      throw SyncError("corrupted pSync word: slot " + std::to_string(slot) +
                      " holds " + std::to_string(val) +
                      " instead of the sentinel or pending signals");
    }
    return val;
  }

  void put_data(int index, std::uint32_t dest_offset,
                std::span<const std::uint8_t> bytes, Cycles latency) {
    pe.write(member_addr(index, dest_offset), bytes,
             TransferCost{0, latency});
  }
};

namespace {

/// Validates the active set against the workgroup and returns the caller's
/// index in it. Collectives must be called by exactly the members.
int active_index(const ShmemCtx& ctx, const ActiveSet& aset) {
  if (aset.pe_size < 1 || aset.log_pe_stride < 0 || aset.pe_start < 0 ||
      aset.log_pe_stride > 12) {
    throw InvalidArgument("malformed active set");
  }
  int last = aset.pe_start + (aset.pe_size - 1) * aset.stride();
  if (last >= ctx.n_pes()) {
    throw InvalidArgument(
        "active set extends past the workgroup: last member rank " +
        std::to_string(last) + " >= n_pes " + std::to_string(ctx.n_pes()));
  }
  int delta = ctx.my_pe() - aset.pe_start;
  if (delta < 0 || delta % aset.stride() != 0 ||
      delta / aset.stride() >= aset.pe_size) {
    throw InvalidArgument("PE " + std::to_string(ctx.my_pe()) +
                          " is not a member of the active set");
  }
  return delta / aset.stride();
}

void check_psync(const ShmemCtx& ctx, const SyncWork& sync,
                 std::uint32_t words_needed) {
  if (sync.psync_words < words_needed) {
    throw SyncError("SyncWork pSync too small: need " +
                    std::to_string(words_needed) + " words, have " +
                    std::to_string(sync.psync_words));
  }
  std::uint64_t end =
      sync.psync_offset + static_cast<std::uint64_t>(sync.psync_words) * 8;
  if (sync.psync_offset % 8 != 0 || end > ctx.machine_pe().config().mem_per_core) {
    throw SyncError("SyncWork pSync range is misaligned or out of memory");
  }
}

}  // namespace

void ShmemCtx::barrier(const ActiveSet& aset, const SyncWork& sync) {
  int idx = active_index(*this, aset);
  const int k = aset.pe_size;
  const std::uint64_t instance = pe_->barrier_enter_mark(sync.psync_offset, k);
  if (k > 1) {
    check_psync(*this, sync, barrier_sync_words(k));
    CollectiveCall cc{*this, *pe_, aset, sync, k, idx};
    const int rounds = ceil_log2(k);
    for (int r = 0; r < rounds; ++r) {
      int to = (idx + (1 << r)) % k;
      cc.signal(to, r, kBarrierSignal, cc.round_latency());
      cc.wait_slot_signal(
          r, "barrier round " + std::to_string(r) + " of " +
                 std::to_string(rounds) + " (pSync slot " + std::to_string(r) +
                 ")");
      cc.consume(r, kBarrierSignal);
    }
  }
  pe_->barrier_exit_mark(sync.psync_offset, instance);
}

void ShmemCtx::barrier_all() {
  const MachineConfig& cfg = pe_->config();
  bool full_chip = wg_->origin() == cfg.origin && wg_->rows() == cfg.rows &&
                   wg_->cols() == cfg.cols && wg_->disabled().empty() &&
                   cfg.disabled.empty();
  if (n_pes() == 1) {
    const std::uint64_t instance =
        pe_->barrier_enter_mark(internal_.barrier_psync, 1);
    pe_->barrier_exit_mark(internal_.barrier_psync, instance);
    return;
  }
  if (full_chip) {
    // The hardware wait-on-AND event covers the whole chip only.
    pe_->wand_barrier();
    return;
  }
  SyncWork sync;
  sync.psync_offset = internal_.barrier_psync;
  sync.psync_words = InternalLayout::kMaxLogPes;
  barrier(ActiveSet{0, 0, n_pes()}, sync);
}

void ShmemCtx::linear_barrier_reference() {
  const int k = n_pes();
  const Cycles total =
      static_cast<Cycles>(timing().linear_barrier_cycles_per_pe) *
      static_cast<Cycles>(k);
  const std::uint64_t instance =
      pe_->barrier_enter_mark(internal_.linear_count, k);
  if (k == 1) {
    pe_->advance(total);
    pe_->barrier_exit_mark(internal_.linear_count, instance);
    return;
  }
  SyncWork sync;  // the two internal linear words, viewed as slots 0 and 1
  sync.psync_offset = internal_.linear_count;
  sync.psync_words = 2;
  ActiveSet all{0, 0, k};
  CollectiveCall cc{*this, *pe_, all, sync, k, rank_};
  constexpr std::uint32_t kCountSlot = 0;
  constexpr std::uint32_t kReleaseSlot = 1;
  if (rank_ == 0) {
    // Collect k-1 arrival signals, then release everyone. The release
    // carries the calibrated whole-barrier cost.
    cc.wait_slot_ge(kCountSlot, k - 1, "linear barrier root collect");
    cc.consume(kCountSlot, k - 1);
    for (int r = 1; r < k; ++r) {
      cc.signal(r, kReleaseSlot, kBarrierSignal, total);
    }
    pe_->advance(total);
  } else {
    cc.signal(0, kCountSlot, kBarrierSignal, 0);
    cc.wait_slot_signal(kReleaseSlot, "linear barrier release");
    cc.consume(kReleaseSlot, kBarrierSignal);
  }
  pe_->barrier_exit_mark(internal_.linear_count, instance);
}

namespace {

/// Geometry of one reduction call: recursive doubling over the largest
/// power of two m <= k, with the k-m extras folded into their base partner
/// before the rounds and receiving the result after.
///
/// pSync slots: [bank * rounds + r] for the exchange rounds in two
/// call-parity banks, plus one unbanked fold slot at 2*rounds.
/// pWrk chunk slots: ((bank * rounds + r) * 2 + half) for the rounds,
/// then two fold halves; ping-pong halves let chunk c+1 fly while chunk c
/// is consumed, and the parity banks keep a next-call put from landing in
/// a slot whose current-call data is still unread.
struct ReducePlan {
  int m = 1;
  int rounds = 0;
  int extras = 0;
  std::uint32_t chunk = 0;     // elements per pWrk half-slot
  std::uint32_t nchunks = 0;
  std::uint32_t elem_sz = 0;
  std::int64_t tag = 0;
  int bank = 0;

  std::uint32_t fold_slot() const {
    return static_cast<std::uint32_t>(2 * rounds);
  }
  std::uint32_t round_slot(int r) const {
    return static_cast<std::uint32_t>(bank * rounds + r);
  }
  std::uint32_t round_wrk_elem(int r, int half) const {
    return ((static_cast<std::uint32_t>(bank * rounds + r)) * 2 +
            static_cast<std::uint32_t>(half)) *
           chunk;
  }
  std::uint32_t fold_wrk_elem(int half) const {
    return (static_cast<std::uint32_t>(4 * rounds) +
            static_cast<std::uint32_t>(half)) *
           chunk;
  }
};

ReducePlan make_reduce_plan(const ShmemCtx& ctx, const SyncWork& sync, int k,
                            std::uint32_t nreduce, ElemType type,
                            std::uint64_t call_no) {
  ReducePlan p;
  p.elem_sz = static_cast<std::uint32_t>(elem_size(type));
  p.m = static_cast<int>(std::bit_floor(static_cast<unsigned>(k)));
  p.rounds = ceil_log2(p.m);
  p.extras = k - p.m;
  p.tag = kReduceTagBase + nreduce;
  p.bank = static_cast<int>(call_no % 2);
  std::uint32_t slots = reduce_wrk_slots(k);
  std::uint32_t pwrk_elems = sync.pwrk_bytes / p.elem_sz;
  if (pwrk_elems < slots) {
    throw SyncError("SyncWork pWrk too small: reductions over " +
                    std::to_string(k) + " members need at least " +
                    std::to_string(slots) + " elements, have " +
                    std::to_string(pwrk_elems));
  }
  std::uint64_t end = sync.pwrk_offset + static_cast<std::uint64_t>(sync.pwrk_bytes);
  if (end > ctx.machine_pe().config().mem_per_core) {
    throw SyncError("SyncWork pWrk range is out of memory");
  }
  p.chunk = pwrk_elems / slots;
  p.nchunks = (nreduce + p.chunk - 1) / p.chunk;
  return p;
}

}  // namespace

void ShmemCtx::reduce_to_all(ReduceKind op, ElemType type, std::uint32_t dest,
                             std::uint32_t src, std::uint32_t nreduce,
                             const ActiveSet& aset, const SyncWork& sync) {
  const int idx = active_index(*this, aset);
  const int k = aset.pe_size;
  if (nreduce == 0) {
    throw InvalidArgument("reduce_to_all needs nreduce >= 1");
  }
  if (!reduce_applicable(op, type)) {
    throw InvalidArgument(std::string("bitwise reduction op ") +
                          reduce_name(op) + " requires an integer type, got " +
                          elem_name(type));
  }
  const std::uint32_t sz = static_cast<std::uint32_t>(elem_size(type));
  const std::uint64_t nbytes = static_cast<std::uint64_t>(nreduce) * sz;
  const std::uint32_t mem = pe_->config().mem_per_core;
  if (dest + nbytes > mem || src + nbytes > mem) {
    throw AddressError("reduce_to_all source or dest crosses core memory");
  }
  if (dest < src + nbytes && src < dest + nbytes) {
    throw InvalidArgument("reduce_to_all dest and source overlap");
  }

  // Accumulate in dest, starting from my contribution. Charged as the
  // optimized local copy loop.
  {
    auto bytes = pe_->peek_bytes(src, nbytes);
    pe_->poke_bytes(dest, bytes);
    Cycles c = cpu_copy_cycles(timing(), nbytes);
    pe_->advance(c);
  }
  if (k == 1) {
    return;
  }

  const std::uint64_t call_no = next_collective_call(sync.psync_offset);
  ReducePlan p = make_reduce_plan(*this, sync, k, nreduce, type, call_no);
  check_psync(*this, sync, reduce_sync_words(k));
  CollectiveCall cc{*this, *pe_, aset, sync, k, idx};
  const Cycles lat = cc.round_latency();
  const std::uint32_t fpc = timing().flops_per_cycle_per_core;

  auto chunk_len = [&](std::uint32_t c) {
    return std::min(p.chunk, nreduce - c * p.chunk);
  };
  auto combine_into_dest = [&](std::uint32_t c, std::uint32_t wrk_elem) {
    const std::uint32_t nel = chunk_len(c);
    auto acc = pe_->peek_bytes(dest + c * p.chunk * sz, nel * sz);
    auto in = pe_->peek_bytes(sync.pwrk_offset + wrk_elem * sz, nel * sz);
    combine_bytes(op, type, acc.data(), in.data(), nel);
    pe_->poke_bytes(dest + c * p.chunk * sz, acc);
    pe_->advance((nel + fpc - 1) / fpc);
  };
  auto my_chunk = [&](std::uint32_t c) {
    return pe_->peek_bytes(dest + c * p.chunk * sz, chunk_len(c) * sz);
  };

  if (idx >= p.m) {
    // Extra member: fold my contribution into the base partner, then wait
    // for it to push back the final result.
    const int peer = idx - p.m;
    for (std::uint32_t c = 0; c < p.nchunks; ++c) {
      if (c >= 2) {
        // Window of one chunk in flight per ping-pong half: the peer must
        // have consumed chunk c-2 before its half is overwritten.
        cc.wait_slot_ge(p.fold_slot(), p.tag * static_cast<std::int64_t>(c - 1),
                        "reduce fold ack");
      }
      cc.put_data(peer, sync.pwrk_offset + p.fold_wrk_elem(c % 2) * sz,
                  my_chunk(c), lat);
      cc.signal(peer, p.fold_slot(), p.tag, lat);
    }
    std::int64_t acks =
        cc.wait_slot_ge(p.fold_slot(),
                        p.tag * static_cast<std::int64_t>(p.nchunks),
                        "reduce fold acks");
    if (acks % p.tag != 0) {
      throw SyncError("inconsistent reduce_to_all arguments across members: "
                      "mismatched nreduce tagging");
    }
    cc.consume(p.fold_slot(), p.tag * static_cast<std::int64_t>(p.nchunks));
    // Result arrives as one put into dest plus a fold-slot signal.
    cc.wait_slot_ge(p.fold_slot(), p.tag, "reduce result");
    cc.consume(p.fold_slot(), p.tag);
    return;
  }

  if (idx + p.m < k) {
    // Base with an extra: fold the extra's chunks into my accumulator.
    const int peer = idx + p.m;
    for (std::uint32_t c = 0; c < p.nchunks; ++c) {
      std::int64_t val = cc.wait_slot_ge(
          p.fold_slot(), p.tag * static_cast<std::int64_t>(c + 1),
          "reduce fold data");
      if (val % p.tag != 0) {
        throw SyncError("inconsistent reduce_to_all arguments across "
                        "members: mismatched nreduce tagging");
      }
      combine_into_dest(c, p.fold_wrk_elem(c % 2));
      cc.signal(peer, p.fold_slot(), p.tag, lat);  // ack
    }
    cc.consume(p.fold_slot(), p.tag * static_cast<std::int64_t>(p.nchunks));
  }

  // Recursive-doubling exchange rounds over the power-of-two set.
  for (int r = 0; r < p.rounds; ++r) {
    const int partner = idx ^ (1 << r);
    const std::uint32_t slot = p.round_slot(r);
    for (std::uint32_t c = 0; c < p.nchunks; ++c) {
      cc.put_data(partner,
                  sync.pwrk_offset + p.round_wrk_elem(r, c % 2) * sz,
                  my_chunk(c), lat);
      cc.signal(partner, slot, p.tag, lat);
      std::int64_t val = cc.wait_slot_ge(
          slot, p.tag * static_cast<std::int64_t>(c + 1),
          "reduce round " + std::to_string(r) + " chunk " + std::to_string(c));
      if (val % p.tag != 0) {
        throw SyncError("inconsistent reduce_to_all arguments across "
                        "members: mismatched nreduce tagging");
      }
      combine_into_dest(c, p.round_wrk_elem(r, c % 2));
    }
    cc.consume(slot, p.tag * static_cast<std::int64_t>(p.nchunks));
  }

  if (idx + p.m < k) {
    // Push the finished result back to my extra.
    const int peer = idx + p.m;
    cc.put_data(peer, dest, pe_->peek_bytes(dest, nbytes), lat);
    cc.signal(peer, p.fold_slot(), p.tag, lat);
  }
}

std::vector<std::string> check_barrier_trace(
    const std::vector<TraceEvent>& trace, Mode mode) {
  struct Instance {
    std::uint64_t max_entry = 0;
    std::uint64_t min_exit = ~std::uint64_t{0};
    int entries = 0;
    int exits = 0;
  };
  std::map<std::pair<std::uint64_t, std::uint64_t>, Instance> instances;
  for (const TraceEvent& ev : trace) {
    if (ev.kind != TraceKind::barrier_enter &&
        ev.kind != TraceKind::barrier_exit) {
      continue;
    }
    Instance& inst = instances[{ev.a, ev.b}];
    std::uint64_t order = mode == Mode::timed ? ev.time : ev.seq;
    if (ev.kind == TraceKind::barrier_enter) {
      inst.max_entry = std::max(inst.max_entry, order);
      ++inst.entries;
    } else {
      inst.min_exit = std::min(inst.min_exit, order);
      ++inst.exits;
    }
  }
  std::vector<std::string> violations;
  for (const auto& [id, inst] : instances) {
    if (inst.entries != inst.exits) {
      violations.push_back("barrier instance (" + std::to_string(id.first) +
                           "," + std::to_string(id.second) + ") has " +
                           std::to_string(inst.entries) + " entries but " +
                           std::to_string(inst.exits) + " exits");
    }
    if (inst.min_exit < inst.max_entry) {
      violations.push_back(
          "barrier instance (" + std::to_string(id.first) + "," +
          std::to_string(id.second) + "): exit at " +
          std::to_string(inst.min_exit) + " precedes an entry at " +
          std::to_string(inst.max_entry));
    }
  }
  return violations;
}

}  // namespace meshmem
