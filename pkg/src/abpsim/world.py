"""Physical model: terrain, node placement, bounce mobility, radio adjacency, batteries.

Nodes live on a rectangular terrain, move in straight lines at a constant
per-run speed and reflect specularly off the boundary. Two alive nodes are
linked iff their distance is at most the radio range (closed disk). Battery
drain is linear; cluster heads drain faster per attached member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import TYPE_CHECKING

from .codec import MAX_NODE_ID, NO_CLUSTER

if TYPE_CHECKING:
    from .config import SimConfig

TWO_PI = 2.0 * math.pi


@dataclass
class NodeState:
    id: int
    x: float
    y: float
    speed: float
    heading: float  # radians
    battery: float
    alive: bool = True


@dataclass(frozen=True)
class EnergyModel:
    """Linear drain rates in battery units per second."""

    e_ordinary: float = 0.05
    e_ch_base: float = 0.05
    e_ch_per_member: float = 0.02

    def __post_init__(self) -> None:
        if min(self.e_ordinary, self.e_ch_base, self.e_ch_per_member) < 0:
            raise ValueError("energy drain rates must be non-negative")
        if self.e_ch_base < self.e_ordinary:
            raise ValueError("e_ch_base must be at least e_ordinary")


@dataclass
class World:
    width: float
    height: float
    radio_range: float
    nodes: list[NodeState] = field(default_factory=list)
    clock: float = 0.0
    rng: Random = field(default_factory=Random)


def init_world(config: "SimConfig", seed: int) -> World:
    """Build a fresh world from a config and seed.

    Draw order per node, ascending id: x, y, speed, heading, battery. The
    world keeps the seeded generator so later draws (send offsets, heading
    redraws) continue the same stream, which makes runs reproducible.
    """
    if config.node_count > MAX_NODE_ID:
        raise ValueError(
            f"node_count {config.node_count} exceeds the 8-bit id space "
            f"(max {MAX_NODE_ID} nodes)"
        )
    rng = Random(seed)
    nodes = []
    for i in range(config.node_count):
        nodes.append(
            NodeState(
                id=i,
                x=rng.uniform(0.0, config.terrain_width),
                y=rng.uniform(0.0, config.terrain_height),
                speed=rng.uniform(config.speed_min, config.speed_max),
                heading=rng.uniform(0.0, TWO_PI),
                battery=rng.uniform(config.battery_min, config.battery_max),
            )
        )
    return World(
        width=config.terrain_width,
        height=config.terrain_height,
        radio_range=config.radio_range,
        nodes=nodes,
        rng=rng,
    )


def _fold(pos: float, span: float) -> tuple[float, float]:
    """Reflect a coordinate back into [0, span]; returns (position, sign).

    sign is -1 when the net number of wall reflections is odd, i.e. the
    velocity component along this axis must be negated.
    """
    period = 2.0 * span
    q = pos % period
    if q > span:
        return period - q, -1.0
    return q, 1.0


def step_motion(world: World, dt: float) -> None:
    """Advance every node speed*dt along its heading, bouncing off walls."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    for node in world.nodes:
        if node.speed == 0.0:
            continue
        vx = node.speed * math.cos(node.heading)
        vy = node.speed * math.sin(node.heading)
        nx, sx = _fold(node.x + vx * dt, world.width)
        ny, sy = _fold(node.y + vy * dt, world.height)
        node.x = nx
        node.y = ny
        if sx < 0 or sy < 0:
            node.heading = math.atan2(sy * vy, sx * vx) % TWO_PI
    world.clock += dt


def adjacency(world: World) -> dict[int, set[int]]:
    """Unit-disk neighbor sets over alive nodes (edge iff distance <= range)."""
    alive = [n for n in world.nodes if n.alive]
    graph: dict[int, set[int]] = {n.id: set() for n in alive}
    limit = world.radio_range * world.radio_range
    for i, a in enumerate(alive):
        for b in alive[i + 1 :]:
            dx = a.x - b.x
            dy = a.y - b.y
            if dx * dx + dy * dy <= limit:
                graph[a.id].add(b.id)
                graph[b.id].add(a.id)
    return graph


def drain_energy(world, assignment, dt: float, model: EnergyModel) -> None:
    """Drain batteries for dt seconds given the current cluster assignment.

    Ordinary nodes and gateways lose e_ordinary*dt; a cluster head with m
    attached members loses (e_ch_base + e_ch_per_member*m)*dt. Batteries
    clamp at zero, at which point the node is marked dead.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    ch_of = getattr(assignment, "ch_of", assignment)
    members: dict[int, int] = {}
    for node_id, head in ch_of.items():
        if head != NO_CLUSTER and head != node_id:
            members[head] = members.get(head, 0) + 1
    for node in world.nodes:
        if not node.alive:
            continue
        if ch_of.get(node.id) == node.id:
            rate = model.e_ch_base + model.e_ch_per_member * members.get(node.id, 0)
        else:
            rate = model.e_ordinary
        node.battery = max(0.0, node.battery - rate * dt)
        if node.battery == 0.0:
            node.alive = False
