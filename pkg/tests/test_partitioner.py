import io

import numpy as np
import pytest

from helpercache.cache_placement import assign_profiles
from helpercache.partitioner import (
    Assignment,
    InstanceTooLargeError,
    ProfileSubnetwork,
    bb_assign,
    brute_force_min_partitions,
    build_tables,
    dump_instance,
    flow_oracle,
    format_partition_set,
    greedy_assign,
    load_instance,
    lower_bound,
    partition_rows,
    partitions_from_assignment,
    subnetworks_from_connectivity,
)
from helpercache.topology import Connectivity, connect, hex_layout, sample_users


def _fully_connected(num_users: int, num_helpers: int = 4) -> ProfileSubnetwork:
    return ProfileSubnetwork(
        profile=1,
        users=tuple(range(1, num_users + 1)),
        candidates=tuple(tuple(range(num_helpers)) for _ in range(num_users)),
        num_helpers=num_helpers,
    )


def test_tables_split_by_degree(reference_subnet):
    tables = build_tables(reference_subnet)
    assert tables.single == ((1,), (4, 5), (7, 8), (11, 12))
    assert tables.multi == (
        (2, (0, 1)),
        (3, (0, 1)),
        (6, (0, 1, 2)),
        (9, (1, 3)),
        (10, (1, 3)),
    )
    assert tables.base_loads == (1, 2, 2, 2)


def test_tables_degenerate_splits():
    pinned = ProfileSubnetwork(1, (1, 2), ((0,), (1,)), 2)
    assert build_tables(pinned).multi == ()
    roaming = _fully_connected(3)
    assert build_tables(roaming).single == ((), (), (), ())


def test_greedy_matches_reference_scan(reference_subnet):
    pset = greedy_assign(reference_subnet)
    assert pset.count == 4
    assert format_partition_set(pset) == "1-2-6-9\n3-4-7-10\n0-5-8-11\n0-0-0-12"


def test_greedy_single_user():
    pset = greedy_assign(ProfileSubnetwork(1, (7,), ((2,),), 4))
    assert pset.count == 1
    assert pset.partitions == (((2, 7),),)


def test_greedy_fully_connected_divisible():
    for per_round in (1, 2, 3):
        pset = greedy_assign(_fully_connected(4 * per_round))
        assert pset.count == per_round
        assert all(len(part) == 4 for part in pset.partitions)


def test_bb_beats_greedy_on_reference(reference_subnet):
    tables = build_tables(reference_subnet)
    best = bb_assign(tables)
    assert best.bound == 3
    assert best.loads == (3, 3, 3, 3)
    pset = partitions_from_assignment(tables, best)
    assert format_partition_set(pset) == "1-4-7-11\n2-5-8-12\n3-9-6-10"


def test_bb_with_no_multihomed_users():
    tables = build_tables(ProfileSubnetwork(1, (1, 2, 3, 4, 5, 6, 7), ((0,),) + ((1,),) * 2 + ((2,),) * 2 + ((3,),) * 2, 4))
    best = bb_assign(tables)
    assert best.choices == ()
    assert best.bound == 2


def test_bb_is_deterministic(reference_subnet):
    tables = build_tables(reference_subnet)
    assert bb_assign(tables) == bb_assign(tables)


def test_bb_against_exhaustive_oracles(make_random_subnet):
    rng = np.random.default_rng(42)
    for _ in range(300):
        subnet = make_random_subnet(rng)
        tables = build_tables(subnet)
        best = bb_assign(tables)
        exhaustive = brute_force_min_partitions(subnet)
        matching = flow_oracle(subnet)
        greedy = greedy_assign(subnet).count
        assert best.bound == exhaustive == matching
        assert lower_bound(subnet) <= best.bound <= greedy <= subnet.num_users
        pset = partitions_from_assignment(tables, best)
        assert pset.count == best.bound
        _check_partition_set(subnet, pset)
        _check_partition_set(subnet, greedy_assign(subnet))


def _check_partition_set(subnet: ProfileSubnetwork, pset) -> None:
    eligible = dict(zip(subnet.users, subnet.candidates))
    served = []
    for part in pset.partitions:
        helpers = [h for h, _ in part]
        users = [u for _, u in part]
        assert len(set(helpers)) == len(helpers)
        assert len(set(users)) == len(users)
        assert len(part) <= pset.num_helpers
        for helper, user in part:
            assert helper in eligible[user]
        served.extend(users)
    assert sorted(served) == sorted(subnet.users)


def test_partitions_reject_inconsistent_assignment(reference_subnet):
    tables = build_tables(reference_subnet)
    with pytest.raises(ValueError):
        partitions_from_assignment(tables, Assignment(choices=(0,), loads=(2, 2, 2, 2), bound=2))
    bad_helper = Assignment(choices=(2, 0, 2, 1, 3), loads=(2, 3, 4, 3), bound=4)
    with pytest.raises(ValueError):
        partitions_from_assignment(tables, bad_helper)


def test_empty_subnetwork_gives_empty_cover():
    empty = ProfileSubnetwork(1, (), (), 4)
    assert greedy_assign(empty).count == 0
    tables = build_tables(empty)
    assert partitions_from_assignment(tables, bb_assign(tables)).count == 0


def test_brute_force_respects_guard():
    subnet = _fully_connected(12)
    with pytest.raises(InstanceTooLargeError):
        brute_force_min_partitions(subnet, guard=10**6)


def test_flow_oracle_serial_bottleneck():
    subnet = ProfileSubnetwork(1, (1, 2, 3), ((0,), (0,), (0,)), 2)
    assert flow_oracle(subnet) == 3


def test_lower_bound_values(reference_subnet):
    assert lower_bound(reference_subnet) == 3
    assert lower_bound(ProfileSubnetwork(1, (), (), 4)) == 0
    assert lower_bound(_fully_connected(5)) == 2


def test_matched_submatrices_stay_invertible(reference_subnet):
    tables = build_tables(reference_subnet)
    pset = partitions_from_assignment(tables, bb_assign(tables))
    rng = np.random.default_rng(3)
    user_row = {user: i for i, user in enumerate(reference_subnet.users)}
    for _ in range(1000):
        gains = (rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))) / np.sqrt(2)
        support = np.zeros((12, 4), dtype=bool)
        for user, cand in zip(reference_subnet.users, reference_subnet.candidates):
            support[user_row[user], list(cand)] = True
        channel = np.where(support, gains, 0)
        for part in pset.partitions:
            rows = [user_row[u] for _, u in part]
            cols = [h for h, _ in part]
            det = np.linalg.det(channel[np.ix_(rows, cols)])
            assert abs(det) > 1e-12


def test_subnetworks_from_connectivity_partition_users():
    layout = hex_layout(4)
    users = sample_users(2.653, 2.7, np.random.default_rng(5))
    conn = connect(layout, users, 1.2)
    assignment = assign_profiles(conn.num_users, 5, np.random.default_rng(6))
    subnets = subnetworks_from_connectivity(conn, assignment)
    seen = []
    for profile, subnet in subnets.items():
        assert subnet.profile == profile
        for user, cand in zip(subnet.users, subnet.candidates):
            assert list(cand) == list(np.flatnonzero(conn.adjacency[:, user]))
        seen.extend(subnet.users)
    assert sorted(seen) == list(range(conn.num_users))


def test_instance_dump_load_round_trip(reference_subnet):
    out = io.StringIO()
    dump_instance(reference_subnet, out)
    text = out.getvalue()
    assert text.splitlines()[0] == "helpers: 4"
    assert "2: 1,2" in text
    loaded = load_instance(io.StringIO(text))
    assert loaded.users == reference_subnet.users
    assert loaded.candidates == reference_subnet.candidates
    assert loaded.num_helpers == 4


def test_load_instance_requires_helpers():
    with pytest.raises(ValueError):
        load_instance(io.StringIO("5:\n"))


def test_partition_rows_views(reference_subnet):
    rows = partition_rows(greedy_assign(reference_subnet))
    assert rows[0] == [1, 2, 6, 9]
    assert rows[3] == [None, None, None, 12]
