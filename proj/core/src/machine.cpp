#include "meshmem/machine.hpp"

#include <algorithm>
#include <cstring>

#include <boost/context/fixedsize_stack.hpp>

#include "meshmem/errors.hpp"

namespace meshmem {

namespace ctx = boost::context;

namespace {
constexpr std::size_t kFiberStackBytes = 256 * 1024;

template <typename T>
bool cmp_as(Cmp cmp, std::uint64_t mem_bits, std::uint64_t val_bits) {
  T a, b;
  std::memcpy(&a, &mem_bits, sizeof(T));
  std::memcpy(&b, &val_bits, sizeof(T));
  switch (cmp) {
    case Cmp::eq: return a == b;
    case Cmp::ne: return a != b;
    case Cmp::gt: return a > b;
    case Cmp::ge: return a >= b;
    case Cmp::lt: return a < b;
    case Cmp::le: return a <= b;
  }
  return false;
}

bool eval_cmp(ElemType type, Cmp cmp, std::uint64_t mem_bits,
              std::uint64_t val_bits) {
  switch (type) {
    case ElemType::i8: return cmp_as<std::int8_t>(cmp, mem_bits, val_bits);
    case ElemType::i16: return cmp_as<std::int16_t>(cmp, mem_bits, val_bits);
    case ElemType::i32: return cmp_as<std::int32_t>(cmp, mem_bits, val_bits);
    case ElemType::i64: return cmp_as<std::int64_t>(cmp, mem_bits, val_bits);
    case ElemType::f32: return cmp_as<float>(cmp, mem_bits, val_bits);
    case ElemType::f64: return cmp_as<double>(cmp, mem_bits, val_bits);
  }
  return false;
}

std::uint64_t width_mask(unsigned width) {
  return width >= 8 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (width * 8)) - 1);
}
}  // namespace

bool Machine::EventAfter::operator()(const std::unique_ptr<Event>& a,
                                     const std::unique_ptr<Event>& b) const {
  return std::tie(a->ts, a->issuer, a->seq) >
         std::tie(b->ts, b->issuer, b->seq);
}

void Machine::push_event(std::unique_ptr<Event> ev) {
  events_.push_back(std::move(ev));
  std::push_heap(events_.begin(), events_.end(), EventAfter{});
}

std::unique_ptr<Machine::Event> Machine::pop_event() {
  std::pop_heap(events_.begin(), events_.end(), EventAfter{});
  std::unique_ptr<Event> ev = std::move(events_.back());
  events_.pop_back();
  return ev;
}

void MachineConfig::validate() const {
  if (rows < 1 || cols < 1 || origin.row < 0 || origin.col < 0 ||
      origin.row + rows - 1 > kMaxCoord || origin.col + cols - 1 > kMaxCoord) {
    throw ConfigError("invalid grid extent: " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " at " + to_string(origin) +
                      " must fit the 6-bit coordinate range");
  }
  if (origin.row == 0 && origin.col == 0) {
    throw ConfigError(
        "invalid grid extent: the grid may not contain core (0,0), which is "
        "the local alias window");
  }
  if (mem_per_core == 0 || mem_per_core % 8 != 0) {
    throw ConfigError("mem_per_core must be a nonzero multiple of 8");
  }
  if (mem_per_core > kMaxOffset + 1) {
    throw ConfigError("mem_per_core exceeds the 20-bit offset range");
  }
  const std::uint32_t limit = effective_heap_limit();
  if (heap_base % 8 != 0 || heap_base == 0 || heap_base > limit ||
      limit > mem_per_core) {
    throw ConfigError("heap range [" + std::to_string(heap_base) + "," +
                      std::to_string(limit) +
                      ") must be 8-aligned and inside core memory");
  }
  timing.validate();
}

Machine::Machine(MachineConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      grid_(cfg_.origin, cfg_.rows, cfg_.cols, cfg_.disabled),
      rng_(cfg_.seed) {
  mem_.assign(static_cast<std::size_t>(grid_.n_pes()),
              std::vector<std::uint8_t>(cfg_.mem_per_core, 0));
  pes_.resize(static_cast<std::size_t>(grid_.n_pes()));
}

Machine::~Machine() { unwind_fibers(); }

void Machine::reset() {
  unwind_fibers();
  for (auto& m : mem_) {
    std::fill(m.begin(), m.end(), std::uint8_t{0});
  }
  for (auto& pe : pes_) {
    pe = Pe{};
  }
  events_.clear();
  rng_.seed(cfg_.seed);
  turns_ = 0;
  events_applied_ = 0;
  wand_epoch_ = 0;
  wand_arrived_ = 0;
  wand_max_entry_ = 0;
  barrier_groups_.clear();
  trace_seq_ = 0;
  trace_.clear();
}

std::pair<int, std::uint32_t> Machine::resolve(GlobalAddress ga,
                                               int issuing_pe) const {
  int target;
  if (ga.is_local_alias()) {
    target = issuing_pe;
  } else {
    Coord c = ga.coord();
    if (!grid_.is_live(c)) {
      throw AddressError("inaccessible address 0x" +
                         [&] {
                           char buf[16];
                           std::snprintf(buf, sizeof buf, "%08x", ga.raw());
                           return std::string(buf);
                         }() +
                         ": core " + to_string(c) +
                         " is outside the live grid");
    }
    target = grid_.pe_of_coord(c);
  }
  if (ga.offset() >= cfg_.mem_per_core) {
    throw AddressError("inaccessible address: offset " +
                       std::to_string(ga.offset()) +
                       " is past the end of core memory");
  }
  return {target, ga.offset()};
}

std::pair<int, std::uint32_t> Machine::resolve_checked(
    GlobalAddress ga, int issuer, std::uint64_t len) const {
  auto [target, offset] = resolve(ga, issuer);
  if (offset + len > cfg_.mem_per_core) {
    throw AddressError("access of " + std::to_string(len) + " bytes at offset " +
                       std::to_string(offset) +
                       " crosses the end of core memory");
  }
  return {target, offset};
}

void Machine::debug_write(int pe, std::uint32_t offset,
                          std::span<const std::uint8_t> data) {
  if (pe < 0 || pe >= n_pes() || offset + data.size() > cfg_.mem_per_core) {
    throw AddressError("debug_write outside core memory");
  }
  std::memcpy(mem_[pe].data() + offset, data.data(), data.size());
}

std::vector<std::uint8_t> Machine::debug_read(int pe, std::uint32_t offset,
                                              std::size_t len) const {
  if (pe < 0 || pe >= n_pes() || offset + len > cfg_.mem_per_core) {
    throw AddressError("debug_read outside core memory");
  }
  return {mem_[pe].begin() + offset, mem_[pe].begin() + offset + len};
}

std::vector<std::uint8_t> Machine::memory_image() const {
  std::vector<std::uint8_t> image;
  image.reserve(mem_.size() * cfg_.mem_per_core);
  for (const auto& m : mem_) {
    image.insert(image.end(), m.begin(), m.end());
  }
  return image;
}

void Machine::record(TraceKind kind, int pe, std::uint64_t a,
                     std::uint64_t b) {
  if (!trace_enabled_) return;
  trace_.push_back(TraceEvent{kind, pe, pes_[pe].clock, trace_seq_++, a, b});
}

// ---------------------------------------------------------------------------
// Fiber plumbing

void Machine::start_fibers(const PeProgram& program) {
  for (int rank = 0; rank < n_pes(); ++rank) {
    Pe& pe = pes_[rank];
    pe = Pe{};
    pe.fiber = ctx::fiber(
        std::allocator_arg, ctx::fixedsize_stack(kFiberStackBytes),
        [this, rank, &program](ctx::fiber&& sched) {
          Pe& self = pes_[rank];
          self.sched = std::move(sched);
          try {
            PeContext pc(this, rank);
            self.exit_code = program(pc);
            self.state = Pe::State::finished;
          } catch (const PeAbort&) {
            self.state = Pe::State::finished;
          } catch (const std::exception& e) {
            self.exit_code = -1;
            self.failure = e.what();
            self.state = Pe::State::failed;
          } catch (...) {
            self.exit_code = -1;
            self.failure = "unknown exception";
            self.state = Pe::State::failed;
          }
          return std::move(self.sched);
        });
  }
}

void Machine::resume_pe(int rank) {
  current_pe_ = rank;
  Pe& pe = pes_[rank];
  pe.fiber = std::move(pe.fiber).resume();
  current_pe_ = -1;
}

void Machine::yield_current() {
  Pe& pe = pes_[current_pe_];
  pe.sched = std::move(pe.sched).resume();
  if (pe.abort) {
    throw PeAbort{};
  }
}

void Machine::block_current(Wait w) {
  Pe& pe = pes_[current_pe_];
  pe.state = Pe::State::blocked;
  pe.wait = std::move(w);
  yield_current();
}

void Machine::unwind_fibers() {
  for (auto& pe : pes_) {
    if (pe.fiber) {
      pe.abort = true;
      pe.state = Pe::State::runnable;
      pe.fiber = std::move(pe.fiber).resume();
    }
  }
}

// ---------------------------------------------------------------------------
// Scheduler

int Machine::pick_runnable() {
  if (cfg_.mode == Mode::functional) {
    int count = 0;
    for (const Pe& pe : pes_) {
      count += pe.state == Pe::State::runnable;
    }
    if (count == 0) return -1;
    auto skip = static_cast<int>(rng_() % static_cast<std::uint64_t>(count));
    for (int rank = 0; rank < n_pes(); ++rank) {
      if (pes_[rank].state == Pe::State::runnable && skip-- == 0) {
        return rank;
      }
    }
    return -1;
  }
  int best = -1;
  for (int rank = 0; rank < n_pes(); ++rank) {
    if (pes_[rank].state != Pe::State::runnable) continue;
    if (best < 0 || pes_[rank].clock < pes_[best].clock) {
      best = rank;
    }
  }
  return best;
}

MachineReport Machine::run_spmd(const PeProgram& program) {
  if (running_) {
    throw Error("run_spmd is not reentrant");
  }
  running_ = true;
  rng_.seed(cfg_.seed);
  turns_ = 0;
  events_applied_ = 0;
  barrier_groups_.clear();
  start_fibers(program);

  try {
    for (;;) {
      int next = pick_runnable();
      if (cfg_.mode == Mode::timed) {
        // A PE may only run once every event at or before its clock has
        // been applied.
        while (!events_.empty() &&
               (next < 0 || events_.front()->ts <= pes_[next].clock)) {
          std::unique_ptr<Event> ev = pop_event();
          apply_event(*ev);
          next = pick_runnable();
        }
      }
      if (next < 0) {
        bool any_blocked = false;
        for (const Pe& pe : pes_) {
          any_blocked = any_blocked || pe.state == Pe::State::blocked;
        }
        if (!any_blocked) break;  // every PE finished or failed
        report_deadlock();
      }
      ++turns_;
      resume_pe(next);
    }
  } catch (...) {
    unwind_fibers();
    running_ = false;
    throw;
  }
  running_ = false;

  MachineReport report;
  report.exit_codes.reserve(pes_.size());
  report.failures.reserve(pes_.size());
  report.final_cycles.reserve(pes_.size());
  for (const Pe& pe : pes_) {
    report.exit_codes.push_back(pe.exit_code);
    report.failures.push_back(pe.failure);
    report.final_cycles.push_back(pe.clock);
  }
  report.turns = turns_;
  report.events_applied = events_applied_;
  return report;
}

void Machine::report_deadlock() {
  std::vector<BlockedPe> blocked;
  for (int rank = 0; rank < n_pes(); ++rank) {
    const Pe& pe = pes_[rank];
    if (pe.state == Pe::State::blocked) {
      blocked.push_back(BlockedPe{rank, pe.wait.what});
    } else if (pe.state == Pe::State::failed) {
      blocked.push_back(BlockedPe{rank, "failed: " + pe.failure});
    }
  }
  throw DeadlockError(std::move(blocked));
}

// ---------------------------------------------------------------------------
// Effect application

void Machine::apply_event(const Event& ev) {
  ++events_applied_;
  if (ev.kind == Event::Kind::store) {
    apply_store(ev.target, ev.offset, ev.data, ev.ts);
    if (ev.completion_waiter >= 0) {
      wake_pe(ev.completion_waiter, ev.ts, WakeRule::round_up_poll);
    }
  } else {
    std::uint64_t old = apply_atomic(ev);
    if (ev.result_waiter >= 0) {
      pes_[ev.result_waiter].atomic_result = old;
      wake_pe(ev.result_waiter, ev.ts, WakeRule::exact);
    }
  }
}

void Machine::apply_store(int target, std::uint32_t offset,
                          std::span<const std::uint8_t> data, Timestamp ts) {
  std::memcpy(mem_[target].data() + offset, data.data(), data.size());
  check_word_waiter(target, offset, static_cast<std::uint32_t>(data.size()), ts);
}

std::uint64_t Machine::apply_atomic(const Event& ev) {
  const std::uint64_t mask = width_mask(ev.width);
  std::uint64_t old = load_word(ev.target, ev.offset, ev.width);
  std::uint64_t next = old;
  switch (ev.op) {
    case AtomicOp::test_and_set:
      if (old == 0) next = ev.operand & mask;
      break;
    case AtomicOp::add:
      next = (old + ev.operand) & mask;
      break;
    case AtomicOp::swap:
      next = ev.operand & mask;
      break;
    case AtomicOp::compare_swap:
      if (old == (ev.compare & mask)) next = ev.operand & mask;
      break;
  }
  store_word(ev.target, ev.offset, ev.width, next);
  check_word_waiter(ev.target, ev.offset, ev.width, ev.ts);
  return old;
}

void Machine::check_word_waiter(int target, std::uint32_t offset,
                                std::uint32_t len, Timestamp ts) {
  // wait_word only ever watches the waiter's own memory, so the only
  // candidate is the target PE itself.
  Pe& pe = pes_[target];
  if (pe.state != Pe::State::blocked || pe.wait.kind != Wait::Kind::word) {
    return;
  }
  if (offset + len <= pe.wait.offset || pe.wait.offset + pe.wait.len <= offset) {
    return;
  }
  if (eval_wait(pe, target)) {
    wake_pe(target, ts, pe.wait.rule);
  }
}

bool Machine::eval_wait(const Pe& pe, int rank) const {
  std::uint64_t bits = load_word(rank, pe.wait.offset, pe.wait.len);
  return eval_cmp(pe.wait.type, pe.wait.cmp, bits, pe.wait.value_bits);
}

void Machine::wake_pe(int rank, Timestamp ts, WakeRule rule) {
  Pe& pe = pes_[rank];
  if (cfg_.mode == Mode::timed) {
    Timestamp wake = ts;
    switch (rule) {
      case WakeRule::exact: break;
      case WakeRule::add_poll: wake = ts + cfg_.timing.poll_quantum_cycles; break;
      case WakeRule::round_up_poll: wake = round_up_to_poll(cfg_.timing, ts); break;
    }
    pe.clock = std::max(pe.clock, wake);
  }
  pe.state = Pe::State::runnable;
  pe.wait = Wait{};
}

std::uint64_t Machine::load_word(int rank, std::uint32_t offset,
                                 unsigned width) const {
  std::uint64_t bits = 0;
  std::memcpy(&bits, mem_[rank].data() + offset, width);
  return bits;
}

void Machine::store_word(int rank, std::uint32_t offset, unsigned width,
                         std::uint64_t value) {
  std::memcpy(mem_[rank].data() + offset, &value, width);
}

// ---------------------------------------------------------------------------
// Issue-side operations (run inside PE fibers)

void Machine::issue_store(int rank, GlobalAddress ga,
                          std::span<const std::uint8_t> data,
                          TransferCost cost, CopyEngine engine,
                          bool block_for_completion) {
  auto [target, offset] = resolve_checked(ga, rank, data.size());
  record(engine == CopyEngine::dma ? TraceKind::dma : TraceKind::put, rank,
         target, data.size());
  Pe& pe = pes_[rank];
  if (cfg_.mode == Mode::functional) {
    apply_store(target, offset, data, 0);
    yield_current();
    return;
  }
  Timestamp visible = pe.clock + cost.visibility_delay;
  auto ev = std::make_unique<Event>();
  ev->ts = visible;
  ev->issuer = rank;
  ev->seq = pe.next_seq++;
  ev->kind = Event::Kind::store;
  ev->target = target;
  ev->offset = offset;
  ev->data.assign(data.begin(), data.end());
  if (block_for_completion) {
    ev->completion_waiter = rank;
    push_event(std::move(ev));
    Wait w;
    w.kind = Wait::Kind::dma_done;
    w.what = "dma completion";
    block_current(std::move(w));
    return;
  }
  pe.clock += cost.issuer_advance;
  push_event(std::move(ev));
  yield_current();
}

// ---------------------------------------------------------------------------
// PeContext

int PeContext::n_pes() const { return m_->n_pes(); }
Coord PeContext::coord() const { return m_->grid().coord_of_pe(rank_); }
Mode PeContext::mode() const { return m_->mode(); }
Timestamp PeContext::clock() const { return m_->pes_[rank_].clock; }
const TimingParams& PeContext::timing() const { return m_->cfg_.timing; }
const MachineConfig& PeContext::config() const { return m_->cfg_; }

void PeContext::write(GlobalAddress ga, std::span<const std::uint8_t> data) {
  auto [target, offset] = m_->resolve(ga, rank_);
  (void)offset;
  Cycles c = remote_transfer_cycles(m_->cfg_.timing, coord(),
                                    m_->grid().coord_of_pe(target),
                                    data.size(), CopyEngine::cpu);
  m_->issue_store(rank_, ga, data, TransferCost{c, c}, CopyEngine::cpu, false);
}

void PeContext::write(GlobalAddress ga, std::span<const std::uint8_t> data,
                      TransferCost cost) {
  m_->issue_store(rank_, ga, data, cost, CopyEngine::cpu, false);
}

void PeContext::dma_write(GlobalAddress ga,
                          std::span<const std::uint8_t> data) {
  auto [target, offset] = m_->resolve(ga, rank_);
  (void)offset;
  Cycles c = remote_transfer_cycles(m_->cfg_.timing, coord(),
                                    m_->grid().coord_of_pe(target),
                                    data.size(), CopyEngine::dma);
  m_->issue_store(rank_, ga, data, TransferCost{0, c}, CopyEngine::dma, true);
}

void PeContext::read(GlobalAddress ga, std::span<std::uint8_t> out) {
  auto [target, offset] = m_->resolve_checked(ga, rank_, out.size());
  m_->record(TraceKind::get, rank_, target, out.size());
  std::memcpy(out.data(), m_->mem_[target].data() + offset, out.size());
  if (m_->cfg_.mode == Mode::timed) {
    m_->pes_[rank_].clock += remote_transfer_cycles(
        m_->cfg_.timing, coord(), m_->grid().coord_of_pe(target), out.size(),
        CopyEngine::cpu);
  }
  m_->yield_current();
}

std::uint64_t PeContext::atomic_rmw(GlobalAddress ga, AtomicOp op,
                                    unsigned width, std::uint64_t operand,
                                    std::uint64_t compare) {
  auto [target, offset] = m_->resolve_checked(ga, rank_, width);
  if (offset % width != 0) {
    throw AddressError("atomic target offset " + std::to_string(offset) +
                       " is not aligned to its " + std::to_string(width) +
                       "-byte width");
  }
  m_->record(TraceKind::atomic, rank_, target, static_cast<std::uint64_t>(op));
  Machine::Pe& self = m_->pes_[rank_];
  Machine::Event ev;
  ev.kind = Machine::Event::Kind::atomic;
  ev.issuer = rank_;
  ev.target = target;
  ev.offset = offset;
  ev.op = op;
  ev.width = width;
  ev.operand = operand;
  ev.compare = compare;
  if (m_->cfg_.mode == Mode::functional) {
    std::uint64_t old = m_->apply_atomic(ev);
    m_->yield_current();
    return old;
  }
  Cycles c = remote_transfer_cycles(m_->cfg_.timing, coord(),
                                    m_->grid().coord_of_pe(target), width,
                                    CopyEngine::cpu);
  auto heap_ev = std::make_unique<Machine::Event>(std::move(ev));
  heap_ev->ts = self.clock + c;
  heap_ev->seq = self.next_seq++;
  heap_ev->result_waiter = rank_;
  m_->push_event(std::move(heap_ev));
  Machine::Wait w;
  w.kind = Machine::Wait::Kind::atomic_result;
  w.what = "atomic result";
  m_->block_current(std::move(w));
  return self.atomic_result;
}

void PeContext::atomic_post(GlobalAddress ga, AtomicOp op, unsigned width,
                            std::uint64_t operand, TransferCost cost) {
  auto [target, offset] = m_->resolve_checked(ga, rank_, width);
  if (offset % width != 0) {
    throw AddressError("atomic target offset " + std::to_string(offset) +
                       " is not aligned to its " + std::to_string(width) +
                       "-byte width");
  }
  m_->record(TraceKind::atomic, rank_, target, static_cast<std::uint64_t>(op));
  Machine::Pe& self = m_->pes_[rank_];
  Machine::Event ev;
  ev.kind = Machine::Event::Kind::atomic;
  ev.issuer = rank_;
  ev.target = target;
  ev.offset = offset;
  ev.op = op;
  ev.width = width;
  ev.operand = operand;
  if (m_->cfg_.mode == Mode::functional) {
    m_->apply_atomic(ev);
    m_->yield_current();
    return;
  }
  auto heap_ev = std::make_unique<Machine::Event>(std::move(ev));
  heap_ev->ts = self.clock + cost.visibility_delay;
  heap_ev->seq = self.next_seq++;
  m_->push_event(std::move(heap_ev));
  self.clock += cost.issuer_advance;
  m_->yield_current();
}

void PeContext::wait_word(std::uint32_t local_offset, ElemType type, Cmp cmp,
                          std::uint64_t value_bits, WakeRule rule,
                          std::string_view what) {
  const auto width = static_cast<std::uint32_t>(elem_size(type));
  if (local_offset + width > m_->cfg_.mem_per_core) {
    throw AddressError("wait target crosses the end of core memory");
  }
  Machine::Wait w;
  w.kind = Machine::Wait::Kind::word;
  w.offset = local_offset;
  w.len = width;
  w.type = type;
  w.cmp = cmp;
  w.value_bits = value_bits;
  w.rule = rule;
  Machine::Pe& self = m_->pes_[rank_];
  self.wait = w;  // eval_wait reads the wait fields
  if (m_->eval_wait(self, rank_)) {
    self.wait = Machine::Wait{};
    m_->yield_current();
    return;
  }
  w.what = what;
  m_->block_current(std::move(w));
}

void PeContext::wand_barrier() {
  Machine& m = *m_;
  Machine::Pe& self = m.pes_[rank_];
  const std::uint64_t epoch = m.wand_epoch_;
  m.record(TraceKind::barrier_enter, rank_, ~std::uint64_t{0}, epoch);
  m.wand_max_entry_ = std::max(m.wand_max_entry_, self.clock);
  if (++m.wand_arrived_ < m.n_pes()) {
    Machine::Wait w;
    w.kind = Machine::Wait::Kind::rendezvous;
    w.what = "wand barrier (waiting for " +
             std::to_string(m.n_pes() - m.wand_arrived_) + " more of " +
             std::to_string(m.n_pes()) + " PEs)";
    m.block_current(std::move(w));
  } else {
    // Last arrival releases everyone at max entry + calibrated cost.
    Timestamp exit_ts = m.wand_max_entry_ + m.cfg_.timing.wand_barrier_cycles;
    m.wand_arrived_ = 0;
    m.wand_max_entry_ = 0;
    ++m.wand_epoch_;
    for (int r = 0; r < m.n_pes(); ++r) {
      if (r == rank_) continue;
      m.wake_pe(r, exit_ts, WakeRule::exact);
    }
    if (m.cfg_.mode == Mode::timed) {
      self.clock = std::max(self.clock, exit_ts);
    }
    m.yield_current();
  }
  m.record(TraceKind::barrier_exit, rank_, ~std::uint64_t{0}, epoch);
}

void PeContext::advance(Cycles c) {
  if (m_->cfg_.mode == Mode::timed) {
    m_->pes_[rank_].clock += c;
  }
  m_->yield_current();
}

void PeContext::yield() { m_->yield_current(); }

std::uint64_t PeContext::peek_word(std::uint32_t offset,
                                   unsigned width) const {
  if (offset + width > m_->cfg_.mem_per_core) {
    throw AddressError("peek outside core memory");
  }
  return m_->load_word(rank_, offset, width);
}

std::vector<std::uint8_t> PeContext::peek_bytes(std::uint32_t offset,
                                                std::size_t len) const {
  return m_->debug_read(rank_, offset, len);
}

void PeContext::poke_bytes(std::uint32_t offset,
                           std::span<const std::uint8_t> data) {
  m_->debug_write(rank_, offset, data);
}

void PeContext::trace_marker(TraceKind kind, std::uint64_t a,
                             std::uint64_t b) {
  m_->record(kind, rank_, a, b);
}

std::uint64_t PeContext::barrier_enter_mark(std::uint64_t key,
                                            int expected_k) {
  auto& group = m_->barrier_groups_[key];
  if (group.entered == 0) {
    group.expected = expected_k;
  }
  std::uint64_t ordinal = group.next_ordinal;
  if (++group.entered >= group.expected) {
    group.entered = 0;
    ++group.next_ordinal;
  }
  m_->record(TraceKind::barrier_enter, rank_, key, ordinal);
  return ordinal;
}

void PeContext::barrier_exit_mark(std::uint64_t key, std::uint64_t ordinal) {
  m_->record(TraceKind::barrier_exit, rank_, key, ordinal);
}

}  // namespace meshmem
