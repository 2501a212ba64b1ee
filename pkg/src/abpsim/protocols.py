"""The four clustering protocols: adaptive election plus LID, HD and VC baselines.

Everything here is a pure function of graphs, batteries and prior state.
The adaptive protocol elects the neighbor (or self) with the highest
advertised competence, where competence is a weighted sum of degree and
battery minus a handover penalty for non-head nodes. Cluster size is capped
by an admission threshold carried in the Option field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

from .codec import NO_CLUSTER, Quantizer

__all__ = [
    "Role",
    "ElectionParams",
    "Candidate",
    "ClusterAssignment",
    "competence",
    "admission_filter",
    "rank_candidates",
    "resolve_memberships",
    "classify_roles",
    "abp_form_clusters",
    "lid_assign",
    "hd_assign",
    "vc_assign",
]

OPTION_MAX = 15  # the Option field is 4 bits wide


class Role(Enum):
    CH = "CH"
    GATEWAY = "GATEWAY"
    ORDINARY = "ORDINARY"
    UNCLUSTERED = "UNCLUSTERED"


@dataclass(frozen=True)
class ElectionParams:
    """Election weights, handover penalty and cluster size cap."""

    degree_weight: float = 0.5
    battery_weight: float = 0.5
    handover_penalty: float = 2.0
    max_members: int = 10

    def __post_init__(self) -> None:
        if not (0.0 <= self.degree_weight <= 1.0 and 0.0 <= self.battery_weight <= 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if abs(self.degree_weight + self.battery_weight - 1.0) > 1e-9:
            raise ValueError("degree_weight and battery_weight must sum to 1")
        if self.handover_penalty < 0:
            raise ValueError("handover_penalty must be non-negative")
        if not 1 <= self.max_members <= OPTION_MAX:
            raise ValueError(f"max_members must lie in 1..{OPTION_MAX}")


class Candidate(NamedTuple):
    """A head candidate as advertised in a Hello: id, competence, member count."""

    id: int
    chc: float
    option: int


def competence(degree: int, battery: float, is_head: bool, params: ElectionParams) -> float:
    """Weighted degree/battery score; non-heads pay the handover penalty."""
    score = params.degree_weight * degree + params.battery_weight * battery
    if not is_head:
        score -= params.handover_penalty
    return score


def admission_filter(
    candidates: Iterable[Candidate],
    max_members: int | None,
    current_head: int | None = None,
) -> list[Candidate]:
    """Drop candidates whose advertised member count has reached the cap.

    The node's current head is never dropped: the cap restricts new
    memberships only.
    """
    if max_members is None:
        return list(candidates)
    return [c for c in candidates if c.option < max_members or c.id == current_head]


def rank_candidates(
    self_id: int,
    self_chc: float,
    heard: Iterable[Candidate],
    max_members: int | None,
    current_head: int | None = None,
) -> list[int]:
    """Preference-ordered head choices: heard senders plus self.

    Ordering is by competence, ties broken by lowest id. Self is always
    admissible, so it acts as the fallback when every better cluster is
    full -- the node then elects itself a singleton head.
    """
    pool = admission_filter(heard, max_members, current_head)
    pool.append(Candidate(self_id, self_chc, 0))
    pool.sort(key=lambda c: (-c.chc, c.id))
    return [c.id for c in pool]


def resolve_memberships(
    preferences: dict[int, list[int]],
    prev_head: dict[int, int],
    member_tally: dict[int, int],
    max_members: int | None,
) -> dict[int, int]:
    """Admission pass: grant head choices in ascending node id, honoring the cap.

    ``member_tally`` maps a node id to how many nodes currently point at it;
    it is updated in place as joins and departures are granted, so the size
    cap holds at every instant, not just at advertisement time. Staying with
    the current head never requires capacity; a node whose admissible
    choices are all full becomes its own head.
    """
    chosen: dict[int, int] = {}
    for node in sorted(preferences):
        prev = prev_head.get(node, NO_CLUSTER)
        pick = node
        for cand in preferences[node]:
            if cand == node or cand == prev:
                pick = cand
                break
            if max_members is None or member_tally.get(cand, 0) < max_members:
                pick = cand
                break
        if pick != prev:
            if prev != NO_CLUSTER and prev != node:
                member_tally[prev] = member_tally.get(prev, 1) - 1
            if pick != node:
                member_tally[pick] = member_tally.get(pick, 0) + 1
        chosen[node] = pick
    return chosen


@dataclass
class ClusterAssignment:
    """Snapshot of who belongs to whom, with derived roles."""

    ch_of: dict[int, int] = field(default_factory=dict)
    role_of: dict[int, Role] = field(default_factory=dict)

    @property
    def heads(self) -> set[int]:
        return {v for v, h in self.ch_of.items() if h == v}

    def members_of(self, head: int) -> set[int]:
        return {v for v, h in self.ch_of.items() if h == head and v != head}


def classify_roles(ch_of: dict[int, int], graph: dict[int, set[int]]) -> ClusterAssignment:
    """Label nodes CH / GATEWAY / ORDINARY / UNCLUSTERED.

    A gateway is a non-head node with two or more heads in radio range.
    Head status takes precedence: a head adjacent to other heads stays CH.
    """
    heads = {v for v, h in ch_of.items() if h == v}
    roles: dict[int, Role] = {}
    for v, h in ch_of.items():
        if h == NO_CLUSTER:
            roles[v] = Role.UNCLUSTERED
        elif h == v:
            roles[v] = Role.CH
        elif len(heads & graph.get(v, set())) >= 2:
            roles[v] = Role.GATEWAY
        else:
            roles[v] = Role.ORDINARY
    return ClusterAssignment(ch_of=dict(ch_of), role_of=roles)


def abp_form_clusters(
    graph: dict[int, set[int]],
    batteries: dict[int, float],
    params: ElectionParams,
    quantizer: Quantizer | None = None,
    cycles: int = 2,
) -> ClusterAssignment:
    """Synchronous cluster formation on a static graph.

    Cycle 1 is discovery: every node broadcasts and learns its degree from
    the distinct senders heard. From cycle 2 on, nodes broadcast their
    competence and, at each cycle end, elect the highest-competence sender
    (or themselves) whose cluster is not full. Formation completes at the
    end of cycle 2; extra cycles exercise steady-state re-election.

    When a quantizer is given, advertised competence goes through the 8-bit
    wire representation, exactly as in the full simulator.
    """
    if cycles < 2:
        raise ValueError("formation needs at least two cycles")
    nodes = sorted(graph)
    degree = {v: len(graph[v]) for v in nodes}
    ch_of = {v: NO_CLUSTER for v in nodes}
    tally: dict[int, int] = {}
    heard_members = {v: 0 for v in nodes}
    for _ in range(cycles - 1):
        adverts = {}
        for v in nodes:
            is_head = ch_of[v] == v
            score = competence(degree[v], batteries[v], is_head, params)
            if quantizer is not None:
                score = quantizer.roundtrip(score)
            option = min(heard_members[v], OPTION_MAX) if is_head else 0
            adverts[v] = Candidate(v, score, option)
        preferences = {
            v: rank_candidates(
                v,
                adverts[v].chc,
                [adverts[u] for u in sorted(graph[v])],
                params.max_members,
                ch_of[v],
            )
            for v in nodes
        }
        ch_of = resolve_memberships(preferences, ch_of, tally, params.max_members)
        # What each head will have heard next cycle: neighbors naming it.
        heard_members = {
            v: sum(1 for u in graph[v] if ch_of[u] == v) for v in nodes
        }
    return classify_roles(ch_of, graph)


def lid_assign(graph: dict[int, set[int]]) -> ClusterAssignment:
    """Lowest-id clustering: the smallest id in a closed neighborhood leads.

    Non-heads join the lowest-id head they can hear; a node that hears no
    head at all becomes its own singleton head.
    """
    nodes = sorted(graph)
    heads = {v for v in nodes if v == min(graph[v] | {v})}
    ch_of = {}
    for v in nodes:
        if v in heads:
            ch_of[v] = v
        else:
            audible = heads & graph[v]
            ch_of[v] = min(audible) if audible else v
    return classify_roles(ch_of, graph)


def hd_assign(graph: dict[int, set[int]]) -> ClusterAssignment:
    """Highest-degree clustering, ties broken by lowest id.

    A node leads iff it has the maximum degree in its closed neighborhood.
    Non-heads join the highest-degree audible head; a node that hears no
    head stays unclustered (unlike lowest-id clustering, electing it would
    add heads that the degree rule itself never produces).
    """
    nodes = sorted(graph)
    degree = {v: len(graph[v]) for v in nodes}
    key = lambda u: (degree[u], -u)
    heads = {v for v in nodes if v == max(graph[v] | {v}, key=key)}
    ch_of = {}
    for v in nodes:
        if v in heads:
            ch_of[v] = v
        else:
            audible = heads & graph[v]
            ch_of[v] = max(audible, key=key) if audible else NO_CLUSTER
    return classify_roles(ch_of, graph)


def vc_assign(
    graph: dict[int, set[int]],
    batteries: dict[int, float],
    degree_weight: float = 0.5,
    battery_weight: float = 0.5,
) -> ClusterAssignment:
    """Vote-based clustering: the adaptive election with no penalty and no cap.

    Every node points at the highest-vote node of its closed neighborhood,
    where vote = degree_weight*degree + battery_weight*battery. Ties go to
    the lowest id. With no incumbent protection the assignment is memoryless.
    """
    nodes = sorted(graph)
    vote = {
        v: degree_weight * len(graph[v]) + battery_weight * batteries[v] for v in nodes
    }
    key = lambda u: (vote[u], -u)
    ch_of = {v: max(graph[v] | {v}, key=key) for v in nodes}
    return classify_roles(ch_of, graph)
