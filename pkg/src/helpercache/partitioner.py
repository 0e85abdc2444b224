"""Partition same-profile users into a minimum number of jointly servable sets.

A set of users sharing a cache profile can decode one joint zero-forcing
transmission iff the users can be paired with pairwise-distinct helpers
through nonzero links: the channel submatrix restricted to such a matching
has full rank almost surely.  Minimizing the number of sets is therefore an
assignment problem: route every multi-homed user to one of its helpers so
that the largest per-helper load (single-homed stack plus routed users) is
as small as possible; that bottleneck load equals the minimum number of
partitions.

Three independent solvers are provided: a least-cost branch and bound
(`bb_assign`, exact), exhaustive enumeration (`brute_force_min_partitions`),
and a capacity-bounded bipartite matching oracle (`flow_oracle`).  The
helper-scan of `greedy_assign` is the fast baseline the exact methods are
measured against.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from itertools import count, islice, product
from typing import IO, Iterable

import numpy as np

from .cache_placement import ProfileAssignment
from .topology import Connectivity


class InstanceTooLargeError(ValueError):
    """Exhaustive enumeration would exceed the size guard."""


@dataclass(frozen=True)
class ProfileSubnetwork:
    """One profile's users and, per user, the helpers with a nonzero link."""

    profile: int
    users: tuple[int, ...]
    candidates: tuple[tuple[int, ...], ...]  # parallel to users, ascending helper indices
    num_helpers: int

    def __post_init__(self) -> None:
        if self.num_helpers < 1:
            raise ValueError(f"subnetwork needs at least one helper, got {self.num_helpers}")
        if len(self.users) != len(self.candidates):
            raise ValueError("one candidate set per user is required")
        if len(set(self.users)) != len(self.users):
            raise ValueError("user ids must be distinct")
        for user, cand in zip(self.users, self.candidates):
            if not cand:
                raise ValueError(f"user {user} has no eligible helper")
            if list(cand) != sorted(set(cand)):
                raise ValueError(f"candidates of user {user} must be sorted and distinct")
            if cand[0] < 0 or cand[-1] >= self.num_helpers:
                raise ValueError(f"candidates of user {user} out of range")

    @property
    def num_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class DegreeTables:
    """Users split by helper degree: fixed single-homed stacks vs. free choices."""

    single: tuple[tuple[int, ...], ...]  # per helper, degree-1 users in user order
    multi: tuple[tuple[int, tuple[int, ...]], ...]  # (user, candidates) in user order
    num_helpers: int

    @property
    def base_loads(self) -> tuple[int, ...]:
        return tuple(len(col) for col in self.single)


@dataclass(frozen=True)
class Assignment:
    """Helper choice per multi-homed user plus the resulting per-helper loads."""

    choices: tuple[int, ...]
    loads: tuple[int, ...]
    bound: int  # max load == number of partitions


@dataclass(frozen=True)
class PartitionSet:
    """Cover of a subnetwork's users by matchings of (helper, user) links."""

    partitions: tuple[tuple[tuple[int, int], ...], ...]
    num_helpers: int

    @property
    def count(self) -> int:
        return len(self.partitions)


def subnetworks_from_connectivity(
    conn: Connectivity, assignment: ProfileAssignment
) -> dict[int, ProfileSubnetwork]:
    """Split the network by cache profile; users keep their connectivity column ids."""
    subnets = {}
    for profile in range(1, assignment.num_profiles + 1):
        members = assignment.users_of(profile)
        cands = tuple(
            tuple(int(h) for h in np.flatnonzero(conn.adjacency[:, k])) for k in members
        )
        subnets[profile] = ProfileSubnetwork(
            profile=profile,
            users=tuple(int(k) for k in members),
            candidates=cands,
            num_helpers=conn.num_helpers,
        )
    return subnets


def build_tables(subnet: ProfileSubnetwork) -> DegreeTables:
    """Stack degree-1 users under their only helper; list the rest in user order."""
    single: list[list[int]] = [[] for _ in range(subnet.num_helpers)]
    multi: list[tuple[int, tuple[int, ...]]] = []
    for user, cand in zip(subnet.users, subnet.candidates):
        if len(cand) == 1:
            single[cand[0]].append(user)
        else:
            multi.append((user, cand))
    return DegreeTables(
        single=tuple(tuple(col) for col in single),
        multi=tuple(multi),
        num_helpers=subnet.num_helpers,
    )


def greedy_assign(subnet: ProfileSubnetwork) -> PartitionSet:
    """Baseline: repeatedly scan helpers in index order, each taking the first free user."""
    num = subnet.num_users
    per_helper: list[list[int]] = [[] for _ in range(subnet.num_helpers)]
    for pos, cand in enumerate(subnet.candidates):
        for h in cand:
            per_helper[h].append(pos)
    placed = [False] * num
    cursor = [0] * subnet.num_helpers
    remaining = num
    partitions = []
    while remaining:
        part = []
        for h in range(subnet.num_helpers):
            queue = per_helper[h]
            i = cursor[h]
            while i < len(queue) and placed[queue[i]]:
                i += 1
            cursor[h] = i
            if i < len(queue):
                pos = queue[i]
                placed[pos] = True
                remaining -= 1
                part.append((h, subnet.users[pos]))
        partitions.append(tuple(part))
    return PartitionSet(partitions=tuple(partitions), num_helpers=subnet.num_helpers)


def _bump(loads: tuple[int, ...], helper: int) -> tuple[int, ...]:
    return loads[:helper] + (loads[helper] + 1,) + loads[helper + 1 :]


def bb_assign(tables: DegreeTables) -> Assignment:
    """Optimal helper choice for the multi-homed users by least-cost search.

    Best-first branch and bound over partial choice vectors, expanded in
    table order.  A state's cost is its largest per-helper load, which never
    decreases along a path, so a completed vector whose cost matches the
    global minimum over open states is optimal.  The search extends the
    cheapest child (ties: lowest helper index) and jumps to the cheapest
    open state only when every child is strictly worse, preferring deeper
    states and then earlier-generated ones.

    Two optimum-preserving prunes keep the frontier small: completed vectors
    discard open states with an equal or larger cost, and states that repeat
    an already-seen (depth, loads) pair are dropped, since the reachable
    completions depend on nothing else.
    """
    loads = tables.base_loads
    bound = max(loads)
    users = tables.multi
    if not users:
        return Assignment(choices=(), loads=loads, bound=bound)

    total = len(users)
    heap: list[tuple[int, int, int, tuple[int, ...], tuple[int, ...]]] = []
    births = count()
    seen: set[tuple[int, tuple[int, ...]]] = set()
    best_done: Assignment | None = None
    cutoff = math.inf  # cost of the best completed vector so far
    choices: tuple[int, ...] = ()
    while True:
        if len(choices) == total:
            return Assignment(choices=choices, loads=loads, bound=bound)
        depth = len(choices) + 1
        cand = users[len(choices)][1]
        kids = []
        cheapest = math.inf
        for helper in cand:
            lifted = loads[helper] + 1
            cost = lifted if lifted > bound else bound
            kids.append((helper, cost))
            if cost < cheapest:
                cheapest = cost
        if depth == total:
            for helper, cost in kids:
                if cost < cutoff:
                    cutoff = cost
                    best_done = Assignment(
                        choices=choices + (helper,), loads=_bump(loads, helper), bound=cost
                    )
        # Lazily drop open states dominated by a completed vector.
        while heap and heap[0][0] >= cutoff:
            heapq.heappop(heap)
        open_cost = heap[0][0] if heap else math.inf
        if cheapest > min(open_cost, cutoff):
            if depth < total:
                for helper, cost in kids:
                    if cost < cutoff:
                        grown = _bump(loads, helper)
                        if (depth, grown) not in seen:
                            seen.add((depth, grown))
                            heapq.heappush(
                                heap, (cost, -depth, next(births), choices + (helper,), grown)
                            )
            if cutoff <= open_cost:
                # The best completed vector is the cheapest state left; it is
                # also the deepest, which is how equal costs are resolved.
                assert best_done is not None
                return best_done
            bound, _, _, choices, loads = heapq.heappop(heap)
            continue
        extend = next(h for h, cost in kids if cost == cheapest)
        if depth < total:
            for helper, cost in kids:
                if helper != extend and cost < cutoff:
                    grown = _bump(loads, helper)
                    if (depth, grown) not in seen:
                        seen.add((depth, grown))
                        heapq.heappush(
                            heap, (cost, -depth, next(births), choices + (helper,), grown)
                        )
        choices += (extend,)
        loads = _bump(loads, extend)
        seen.add((depth, loads))
        bound = cheapest


def partitions_from_assignment(tables: DegreeTables, assignment: Assignment) -> PartitionSet:
    """Materialize partitions: helper h serves its stack, then its routed users.

    Partition g pairs every helper with the g-th user of its queue, so the
    number of partitions equals the bottleneck load.
    """
    if len(assignment.choices) != len(tables.multi):
        raise ValueError("assignment length does not match the multi-homed user count")
    queues = [list(col) for col in tables.single]
    for (user, cand), helper in zip(tables.multi, assignment.choices):
        if helper not in cand:
            raise ValueError(f"user {user} assigned to ineligible helper {helper}")
        queues[helper].append(user)
    loads = tuple(len(q) for q in queues)
    if loads != assignment.loads or max(loads) != assignment.bound:
        raise ValueError("assignment loads are inconsistent with the tables")
    partitions = tuple(
        tuple((h, queues[h][g]) for h in range(tables.num_helpers) if len(queues[h]) > g)
        for g in range(assignment.bound)
    )
    return PartitionSet(partitions=partitions, num_helpers=tables.num_helpers)


def brute_force_min_partitions(subnet: ProfileSubnetwork, guard: int = 10**7) -> int:
    """Exhaustive oracle: try every helper choice for the multi-homed users."""
    tables = build_tables(subnet)
    base = np.array(tables.base_loads, dtype=np.int64)
    if not tables.multi:
        return int(base.max())
    sizes = [len(cand) for _, cand in tables.multi]
    total = math.prod(sizes)
    if total > guard:
        raise InstanceTooLargeError(f"{total} assignments exceed the guard of {guard}")
    cand_lists = [cand for _, cand in tables.multi]
    best = np.iinfo(np.int64).max
    assignments = product(*cand_lists)
    while True:
        chunk = list(islice(assignments, 65536))
        if not chunk:
            break
        arr = np.array(chunk, dtype=np.int64)
        loads = np.empty((arr.shape[0], tables.num_helpers), dtype=np.int64)
        for h in range(tables.num_helpers):
            loads[:, h] = base[h] + (arr == h).sum(axis=1)
        best = min(best, int(loads.max(axis=1).min()))
    return int(best)


def _all_served(subnet: ProfileSubnetwork, cap: int) -> bool:
    """Can every user get a helper with no helper taking more than `cap` users?"""
    holders: list[list[int]] = [[] for _ in range(subnet.num_helpers)]

    def place(pos: int, banned: set[int]) -> bool:
        for h in subnet.candidates[pos]:
            if h in banned:
                continue
            banned.add(h)
            if len(holders[h]) < cap:
                holders[h].append(pos)
                return True
            for other in holders[h]:
                if place(other, banned):
                    holders[h].remove(other)
                    holders[h].append(pos)
                    return True
        return False

    return all(place(pos, set()) for pos in range(subnet.num_users))


def flow_oracle(subnet: ProfileSubnetwork) -> int:
    """Independent polynomial-time oracle for the minimum partition count.

    Binary-search the smallest helper capacity q for which a matching serves
    every user with each helper used at most q times (feasibility checked by
    augmenting paths); q matchings then cover all users and none fewer can.
    """
    if subnet.num_users == 0:
        return 0
    lo, hi = 1, subnet.num_users
    while lo < hi:
        mid = (lo + hi) // 2
        if _all_served(subnet, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def lower_bound(subnet: ProfileSubnetwork) -> int:
    """Pigeonhole floor: ceil(users / helpers) partitions are always needed."""
    return -(-subnet.num_users // subnet.num_helpers)


def partition_rows(pset: PartitionSet) -> list[list[int | None]]:
    """Helper-slot view of the partitions; None marks an unassigned helper."""
    rows: list[list[int | None]] = []
    for part in pset.partitions:
        row: list[int | None] = [None] * pset.num_helpers
        for helper, user in part:
            row[helper] = user
        rows.append(row)
    return rows


def format_partition_set(pset: PartitionSet) -> str:
    """Hyphen-joined slot rows, one partition per line, 0 for an empty slot."""
    return "\n".join(
        "-".join("0" if user is None else str(user) for user in row)
        for row in partition_rows(pset)
    )


def dump_instance(subnet: ProfileSubnetwork, stream: IO[str]) -> None:
    """Write `user_id: h_i,h_j,...` lines (helper labels 1-based) after a header."""
    print(f"helpers: {subnet.num_helpers}", file=stream)
    for user, cand in zip(subnet.users, subnet.candidates):
        print(f"{user}: {','.join(str(h + 1) for h in cand)}", file=stream)


def load_instance(lines: Iterable[str], profile: int = 1) -> ProfileSubnetwork:
    """Parse the dump format; the `helpers:` header is optional."""
    users: list[int] = []
    cands: list[tuple[int, ...]] = []
    num_helpers = 0
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, tail = line.partition(":")
        if head.strip() == "helpers":
            num_helpers = int(tail)
            continue
        user = int(head)
        helpers = tuple(sorted(int(tok) - 1 for tok in tail.split(",") if tok.strip()))
        if not helpers:
            raise ValueError(f"user {user} has no helpers listed")
        users.append(user)
        cands.append(helpers)
        num_helpers = max(num_helpers, helpers[-1] + 1)
    return ProfileSubnetwork(
        profile=profile, users=tuple(users), candidates=tuple(cands), num_helpers=num_helpers
    )
