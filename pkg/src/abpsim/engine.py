"""Deterministic tick-stepped simulation: scheduling, elections, metrics.

One run binds a seeded world to one protocol variant for a fixed simulated
duration. Time advances in ticks of 0.1 * bp_min. Per tick, in this order:
period-boundary processing (inbox consumption, elections, period control),
due Hello broadcasts, optional heading redraws, motion, battery drain and
metric sampling. All node iteration is in ascending id and all randomness
comes from the single per-run generator, so identical (config, seed) pairs
give identical results.

Baseline variants (LID, HD, VC) broadcast on a fixed global period and
recompute their assignment from the current radio graph at each period end.
The adaptive variant runs the full per-node state machine: two-cycle
formation, penalty-guarded re-election, size-capped admission, neighbor
history and per-cluster broadcast periods.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .codec import (
    NO_CLUSTER,
    DecodingError,
    HelloPacket,
    ProtocolVariant,
    Quantizer,
    decode_hello,
    encode_hello,
    packet_size_bits,
)
from .config import (
    SimConfig,
    config_for_point,
    election_params,
    resolved_dt,
    validate_config,
)
from .mobility import TopologyHistory, adapt_bp, bp_code_for, bp_from_code, mobility_rate
from .protocols import (
    OPTION_MAX,
    Candidate,
    classify_roles,
    competence,
    hd_assign,
    lid_assign,
    rank_candidates,
    resolve_memberships,
    vc_assign,
)
from .world import TWO_PI, World, adjacency, drain_energy, init_world, step_motion

__all__ = [
    "MetricsRecord",
    "RunTrace",
    "BatchResult",
    "SweepRow",
    "run",
    "run_batch",
    "sweep",
    "count_ch_change",
]


@dataclass
class MetricsRecord:
    """Per-run counters plus a once-per-second cumulative time series.

    Series rows are (time, control_msgs, control_bits, ch_changes,
    energy_variance). Counters are ints for single runs and float means for
    batch averages.
    """

    control_msgs: float = 0
    control_bits: float = 0
    ch_changes: float = 0
    energy_variance: float = 0.0
    series: list[tuple] = field(default_factory=list)


@dataclass
class RunTrace:
    """Optional per-run diagnostics, collected when ``collect_trace`` is set."""

    sends: list[tuple] = field(default_factory=list)  # (time, node)
    events: list[tuple] = field(default_factory=list)  # (time, node, old, new)
    bp_changes: list[tuple] = field(default_factory=list)  # (time, node, bp)
    dropped: int = 0
    max_ch_members: int = 0
    final_ch_of: dict[int, int] = field(default_factory=dict)
    final_bp: dict[int, float] = field(default_factory=dict)


def count_ch_change(prev, cur) -> int:
    """Nodes reassigned between two snapshots; first-time acquisition is free."""
    prev_map = getattr(prev, "ch_of", prev)
    cur_map = getattr(cur, "ch_of", cur)
    changed = 0
    for node, head in cur_map.items():
        before = prev_map.get(node, NO_CLUSTER)
        if before != NO_CLUSTER and before != head:
            changed += 1
    return changed


def _population_variance(values: list[float]) -> float:
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


class _AbpNode:
    __slots__ = (
        "id",
        "ch",
        "degree",
        "bp",
        "members_heard",
        "heard_head_at",
        "ghost",
        "tht",
        "boundary",
        "send_at",
        "periods",
        "full_window",
        "inbox",
        "heard_log",
    )

    def __init__(self, node_id: int, bp: float, depth: int):
        self.id = node_id
        self.ch = NO_CLUSTER
        self.degree = 0
        self.bp = bp
        self.members_heard = 0
        self.heard_head_at = 0  # tick of the last Hello from our current head
        self.ghost: tuple[float, int] | None = None  # last (chc, option) of our head
        self.tht = TopologyHistory(depth)
        self.boundary = 0
        self.send_at = -1
        self.periods = 0
        self.full_window = True
        self.inbox: list[tuple[int, int, str]] = []
        self.heard_log: dict[int, tuple[int, int]] = {}  # sender -> (tick, its ch_id)


class _Run:
    """Common scaffolding: clock, metrics, energy, traces."""

    def __init__(self, config: SimConfig, seed: int, collect_trace: bool,
                 on_send: Callable | None, world_trace, metrics_trace):
        self.config = config
        self.dt = resolved_dt(config)
        self.total_ticks = int(round(config.duration / self.dt))
        self.world: World = init_world(config, seed)
        self.node_of = {n.id: n for n in self.world.nodes}
        self.rng = self.world.rng
        self.on_send = on_send
        self.trace = RunTrace() if collect_trace else None
        self.world_trace = world_trace
        self.metrics_trace = metrics_trace
        self.msgs = 0
        self.bits = 0
        self.changes = 0
        self.series: list[tuple] = []
        self.sample_every = max(1, int(round(1.0 / self.dt)))
        self.packet_bits = packet_size_bits(config.variant)
        self.redraw_ticks = (
            int(round(config.heading_redraw_interval / self.dt))
            if config.heading_redraw_interval > 0
            else 0
        )
        # Live assignment over alive nodes; dead nodes drop out.
        self.ch_of: dict[int, int] = {}

    # -- hooks implemented per variant --
    def process_boundaries(self, tick: int, final: bool = False) -> None:
        raise NotImplementedError

    def process_sends(self, tick: int) -> None:
        raise NotImplementedError

    def execute(self) -> MetricsRecord:
        for tick in range(self.total_ticks):
            self.process_boundaries(tick)
            self.process_sends(tick)
            if self.redraw_ticks and tick > 0 and tick % self.redraw_ticks == 0:
                self._redraw_headings()
            step_motion(self.world, self.dt)
            self._drain()
            if (tick + 1) % self.sample_every == 0:
                self._sample((tick + 1) * self.dt)
            if self.world_trace is not None:
                self._write_world_rows(tick + 1)
        # Let periods ending exactly at the horizon complete their bookkeeping.
        self.process_boundaries(self.total_ticks, final=True)
        if self.total_ticks % self.sample_every != 0:
            self._sample(self.total_ticks * self.dt)
        record = MetricsRecord(
            control_msgs=self.msgs,
            control_bits=self.bits,
            ch_changes=self.changes,
            energy_variance=self._energy_variance(),
            series=self.series,
        )
        if self.trace is not None:
            self.trace.final_ch_of = dict(self.ch_of)
        return record

    def _redraw_headings(self) -> None:
        for node in self.world.nodes:
            node.heading = self.rng.uniform(0.0, TWO_PI)

    def _drain(self) -> None:
        drain_energy(self.world, self.ch_of, self.dt, self.config.energy)
        for n in self.world.nodes:
            if not n.alive and n.id in self.ch_of:
                self._on_death(n.id)

    def _on_death(self, node_id: int) -> None:
        self.ch_of.pop(node_id, None)

    def _energy_variance(self) -> float:
        return _population_variance(
            [n.battery for n in self.world.nodes if n.alive]
        )

    def _sample(self, time: float) -> None:
        row = (time, self.msgs, self.bits, self.changes, self._energy_variance())
        self.series.append(row)
        if self.metrics_trace is not None:
            self.metrics_trace.write(
                f"{time},{self.config.variant.value},{row[1]},{row[2]},{row[3]},{row[4]!r}\n"
            )

    def _role_label(self, node_id: int, alive: bool) -> str:
        if not alive:
            return "DEAD"
        head = self.ch_of.get(node_id, NO_CLUSTER)
        if head == node_id:
            return "CH"
        return "NONE" if head == NO_CLUSTER else "MEMBER"

    def _write_world_rows(self, tick: int) -> None:
        for n in self.world.nodes:
            self.world_trace.write(
                f"{tick},{n.id},{n.x!r},{n.y!r},{n.battery!r},"
                f"{self._role_label(n.id, n.alive)}\n"
            )

    def _count_send(self, tick: int, node_id: int) -> None:
        self.msgs += 1
        self.bits += self.packet_bits
        if self.on_send is not None:
            self.on_send(tick * self.dt, node_id)
        if self.trace is not None:
            self.trace.sends.append((tick * self.dt, node_id))

    def _record_change(self, tick: int, node_id: int, old: int, new: int) -> None:
        if old != NO_CLUSTER and old != new:
            self.changes += 1
        if self.trace is not None and old != new:
            self.trace.events.append((tick * self.dt, node_id, old, new))


class _BaselineRun(_Run):
    """Fixed-period broadcasting; assignment recomputed from the graph each period."""

    def __init__(self, *args):
        super().__init__(*args)
        self.period_ticks = int(round(self.config.baseline_bp / self.dt))
        self.send_at: dict[int, int] = {}

    def _assign(self) -> dict[int, int]:
        graph = adjacency(self.world)
        variant = self.config.variant
        if variant is ProtocolVariant.LID:
            return lid_assign(graph).ch_of
        if variant is ProtocolVariant.HD:
            return hd_assign(graph).ch_of
        batteries = {n.id: n.battery for n in self.world.nodes if n.alive}
        return vc_assign(
            graph,
            batteries,
            self.config.degree_weight,
            self.config.battery_weight,
        ).ch_of

    def process_boundaries(self, tick: int, final: bool = False) -> None:
        if tick % self.period_ticks != 0:
            return
        if tick > 0:
            new = self._assign()
            for node in sorted(new):
                self._record_change(tick, node, self.ch_of.get(node, NO_CLUSTER), new[node])
            self.ch_of = new
            if self.trace is not None and new:
                heads = {v for v, h in new.items() if h == v}
                for h in heads:
                    size = sum(1 for v, c in new.items() if c == h and v != h)
                    if size > self.trace.max_ch_members:
                        self.trace.max_ch_members = size
        if not final:
            for node in self.world.nodes:
                if node.alive:
                    self.send_at[node.id] = tick + self.rng.randrange(self.period_ticks)

    def process_sends(self, tick: int) -> None:
        alive = {n.id for n in self.world.nodes if n.alive}
        for node_id in sorted(self.send_at):
            if self.send_at[node_id] == tick and node_id in alive:
                self._count_send(tick, node_id)


class _AdaptiveRun(_Run):
    """The adaptive protocol: per-node timers, elections and period control."""

    def __init__(self, *args):
        super().__init__(*args)
        cfg = self.config
        self.params = election_params(cfg)
        self.quant = Quantizer(cfg.competence_scale)
        self.bp_min_ticks = int(round(cfg.bp_min / self.dt))
        self.horizon_ticks = int(round(cfg.bp_max / self.dt))
        self.tally: dict[int, int] = {}
        self.states: dict[int, _AbpNode] = {}
        for node in self.world.nodes:
            st = _AbpNode(node.id, cfg.bp_min, cfg.history_depth)
            st.boundary = self.bp_min_ticks
            self.states[node.id] = st
        # Startup schedule: everyone broadcasts once within the first period.
        for node in self.world.nodes:
            self.states[node.id].send_at = self.rng.randrange(self.bp_min_ticks)

    def _alive(self, node_id: int) -> bool:
        return self.node_of[node_id].alive

    def _decode_inbox(self, st: _AbpNode) -> dict[int, HelloPacket]:
        latest: dict[int, HelloPacket] = {}
        for at, sender, bits in st.inbox:
            try:
                pkt = decode_hello(bits, ProtocolVariant.ABP)
            except DecodingError:
                if self.trace is not None:
                    self.trace.dropped += 1
                continue
            latest[sender] = pkt
            st.heard_log[sender] = (at, pkt.ch_id)
        st.inbox.clear()
        return latest

    def _release(self, node_id: int, head: int) -> None:
        if head != NO_CLUSTER and head != node_id:
            self.tally[head] = self.tally.get(head, 1) - 1

    def _on_death(self, node_id: int) -> None:
        self._release(node_id, self.ch_of.get(node_id, NO_CLUSTER))
        super()._on_death(node_id)

    def _set_bp(self, st: _AbpNode, bp: float, tick: int) -> None:
        if bp != st.bp:
            st.bp = bp
            if self.trace is not None:
                self.trace.bp_changes.append((tick * self.dt, st.id, bp))

    def process_boundaries(self, tick: int, final: bool = False) -> None:
        due = [
            i
            for i in sorted(self.states)
            if self.states[i].boundary == tick and self._alive(i)
        ]
        if not due:
            return
        cfg = self.config
        ch_before: dict[int, int] = {}
        packets: dict[int, dict[int, HelloPacket]] = {}
        preferences: dict[int, list[int]] = {}
        for i in due:
            st = self.states[i]
            ch_before[i] = st.ch
            pkts = self._decode_inbox(st)
            packets[i] = pkts
            # Degree and member count are taken over a trailing window of
            # bp_max, the slowest any neighbor may legally broadcast; a
            # node's own shorter period would undersample neighbors that
            # already stretched their periods.
            cutoff = tick - self.horizon_ticks
            st.heard_log = {
                s: rec for s, rec in st.heard_log.items() if rec[0] >= cutoff
            }
            st.degree = len(st.heard_log)
            st.members_heard = sum(
                1 for rec in st.heard_log.values() if rec[1] == i
            )
            if st.periods == 0:
                continue  # discovery period: learn the degree, elect next time
            was_head = st.ch == i
            if was_head:
                if st.full_window:
                    # One history row per period; adapt once two rows exist.
                    st.tht.record(pkts.keys())
                    rate = mobility_rate(st.tht)
                    if rate is not None:
                        self._set_bp(
                            st, adapt_bp(rate, cfg.bp_min, cfg.bp_max, cfg.mr_ref), tick
                        )
            elif st.ch != NO_CLUSTER:
                if st.ch in pkts:
                    st.heard_head_at = tick
                    heard = pkts[st.ch]
                    st.ghost = (self.quant.dequantize(heard.chc_q), heard.option)
                elif (tick - st.heard_head_at) * self.dt >= 2.0 * cfg.bp_max:
                    # Silent for two of the slowest legal broadcast periods:
                    # the head is gone. Forget it and fall back to the floor
                    # period (a live head, however stretched, is always heard
                    # within this window).
                    self._release(i, st.ch)
                    st.ch = NO_CLUSTER
                    self.ch_of[i] = NO_CLUSTER
                    st.ghost = None
                    self._set_bp(st, cfg.bp_min, tick)
            heard_cands = {
                sender: Candidate(sender, self.quant.dequantize(p.chc_q), p.option)
                for sender, p in pkts.items()
            }
            if (
                st.ch != NO_CLUSTER
                and st.ch != i
                and st.ch not in heard_cands
                and st.ghost is not None
            ):
                heard_cands[st.ch] = Candidate(st.ch, st.ghost[0], st.ghost[1])
            own = self.quant.roundtrip(
                competence(st.degree, self.node_of[i].battery, st.ch == i, self.params)
            )
            preferences[i] = rank_candidates(
                i, own, list(heard_cands.values()), self.params.max_members, st.ch
            )
        if preferences:
            picks = resolve_memberships(
                preferences, self.ch_of, self.tally, self.params.max_members
            )
            for i in sorted(picks):
                st = self.states[i]
                new = picks[i]
                old = ch_before[i]
                becomes_head = new == i and st.ch != i
                st.ch = new
                self.ch_of[i] = new
                if new != st.id and new in packets[i]:
                    # Joining (or staying with) an audible head: adopt its
                    # period and remember its advertisement for the periods
                    # where its Hello falls outside our window.
                    heard = packets[i][new]
                    self._set_bp(
                        st,
                        bp_from_code(heard.bp_code, cfg.bp_min, cfg.bp_max),
                        tick,
                    )
                    st.ghost = (self.quant.dequantize(heard.chc_q), heard.option)
                    st.heard_head_at = tick
                if becomes_head:
                    st.tht = TopologyHistory(cfg.history_depth)
                    st.ghost = None
                self._record_change(tick, i, old, new)
            if self.trace is not None:
                for head, size in self.tally.items():
                    if self.ch_of.get(head) == head and size > self.trace.max_ch_members:
                        self.trace.max_ch_members = size
        if final:
            return
        for i in due:
            st = self.states[i]
            st.periods += 1
            period = int(round(st.bp / self.dt))
            # Cycles share the global grid of their period length, so nodes
            # on equal periods observe aligned windows and hear each other
            # exactly once per cycle; a period change yields one short
            # transition window. Heads beacon at the cycle start so members
            # adopt BP changes within a period; others send at a uniform
            # random instant in the window.
            st.boundary = (tick // period + 1) * period
            window = st.boundary - tick
            st.full_window = window == period
            st.send_at = tick if st.ch == i else tick + self.rng.randrange(window)

    def process_sends(self, tick: int) -> None:
        senders = [
            i
            for i in sorted(self.states)
            if self.states[i].send_at == tick and self._alive(i)
        ]
        if not senders:
            return
        graph = adjacency(self.world)
        cfg = self.config
        for i in senders:
            st = self.states[i]
            node = self.node_of[i]
            is_head = st.ch == i
            pkt = HelloPacket(
                mh_id=i,
                ch_id=st.ch,
                chc_q=self.quant.quantize(
                    competence(st.degree, node.battery, is_head, self.params)
                ),
                option=min(st.members_heard, OPTION_MAX) if is_head else 0,
                bp_code=bp_code_for(st.bp, cfg.bp_min),
            )
            bits = encode_hello(pkt, ProtocolVariant.ABP)
            self._count_send(tick, i)
            for neighbor in graph.get(i, ()):
                self.states[neighbor].inbox.append((tick, i, bits))

    def execute(self) -> MetricsRecord:
        record = super().execute()
        if self.trace is not None:
            self.trace.final_bp = {i: st.bp for i, st in self.states.items()}
        return record


def run(
    config: SimConfig,
    seed: int,
    *,
    collect_trace: bool = False,
    on_send: Callable | None = None,
    world_trace=None,
    metrics_trace=None,
) -> MetricsRecord | tuple[MetricsRecord, RunTrace]:
    """Execute one simulation run; deterministic in (config, seed).

    With ``collect_trace`` the return value is (record, trace).
    """
    validate_config(config)
    if config.duration == 0 or config.node_count == 0:
        empty = MetricsRecord()
        return (empty, RunTrace()) if collect_trace else empty
    cls = _AdaptiveRun if config.variant is ProtocolVariant.ABP else _BaselineRun
    runner = cls(config, seed, collect_trace, on_send, world_trace, metrics_trace)
    record = runner.execute()
    if collect_trace:
        return record, runner.trace
    return record


@dataclass
class BatchResult:
    average: MetricsRecord
    per_seed: list[MetricsRecord]


def _mean_records(records: list[MetricsRecord]) -> MetricsRecord:
    n = len(records)
    series = []
    if records[0].series:
        for rows in zip(*(r.series for r in records)):
            time = rows[0][0]
            series.append(
                (
                    time,
                    sum(r[1] for r in rows) / n,
                    sum(r[2] for r in rows) / n,
                    sum(r[3] for r in rows) / n,
                    sum(r[4] for r in rows) / n,
                )
            )
    return MetricsRecord(
        control_msgs=sum(r.control_msgs for r in records) / n,
        control_bits=sum(r.control_bits for r in records) / n,
        ch_changes=sum(r.ch_changes for r in records) / n,
        energy_variance=sum(r.energy_variance for r in records) / n,
        series=series,
    )


def _run_job(job: tuple[SimConfig, int]) -> MetricsRecord:
    cfg, seed = job
    return run(cfg, seed)


def run_batch(config: SimConfig, seeds: Iterable[int]) -> BatchResult:
    """Run one config over several seeds and average the metrics."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("run_batch needs at least one seed")
    records = [run(config, s) for s in seeds]
    return BatchResult(average=_mean_records(records), per_seed=records)


@dataclass
class SweepRow:
    variant: ProtocolVariant
    axis: str
    value: float
    batch: BatchResult


def sweep(
    base: SimConfig,
    axis: str,
    values: Iterable[float],
    variants: Iterable[ProtocolVariant],
    seeds: Iterable[int],
    map_fn: Callable = map,
) -> list[SweepRow]:
    """Cross-product of (variant, axis value) batches, each averaged over seeds.

    ``map_fn`` lets callers parallelize the individual runs; results are
    identical for any map implementation because rows are assembled in
    declaration order.
    """
    values = list(values)
    variants = list(variants)
    seeds = list(seeds)
    if not values or not variants:
        raise ValueError("sweep needs at least one value and one variant")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    jobs = []
    for variant in variants:
        for value in values:
            cfg = replace(config_for_point(base, axis, value), variant=variant)
            for seed in seeds:
                jobs.append((cfg, seed))
    records = list(map_fn(_run_job, jobs))
    rows = []
    idx = 0
    for variant in variants:
        for value in values:
            chunk = records[idx : idx + len(seeds)]
            idx += len(seeds)
            rows.append(
                SweepRow(
                    variant=variant,
                    axis=axis,
                    value=value,
                    batch=BatchResult(average=_mean_records(chunk), per_seed=chunk),
                )
            )
    return rows
