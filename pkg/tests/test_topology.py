import pytest

from app.core.exceptions import MalformedAddressError
from app.use_cases.services import topology


def test_root_neighbors():
    assert topology.neighbors("") == ("0", "1", "2")


def test_neighbors_are_parent_then_children():
    assert topology.neighbors("21") == ("2", "210", "211")
    assert topology.neighbors("0") == ("", "00", "01")


@pytest.mark.parametrize("u, v, expected", [
    ("", "", 0),
    ("", "0", 1),
    ("0", "1", 2),
    ("010", "011", 2),
    ("010", "2", 4),
    ("0101", "01", 2),
])
def test_distance(u, v, expected):
    assert topology.distance(u, v) == expected
    assert topology.distance(v, u) == expected


def test_path_between_is_self_avoiding():
    path = topology.path_between("010", "21")
    assert path == ["010", "01", "0", "", "2", "21"]
    assert len(set(path)) == len(path)
    assert all(topology.distance(a, b) == 1 for a, b in zip(path, path[1:]))


@pytest.mark.parametrize("address", ["3", "02", "x", "0 1"])
def test_malformed_addresses(address):
    with pytest.raises(MalformedAddressError):
        topology.neighbors(address)


def test_malformed_address_is_a_value_error():
    with pytest.raises(ValueError):
        topology.distance("", "12")


@pytest.mark.parametrize("radius", [0, 1, 2, 5, 8])
def test_ball_size(radius):
    ball = topology.ball(topology.ROOT, radius)
    assert ball.size == topology.ball_size(radius) == 3 * 2 ** radius - 2
    assert int(ball.distance.max()) == radius


def test_root_ball_numbering_matches_codes():
    ball = topology.ball(topology.ROOT, 5)
    assert [topology.encode(a) for a in ball.addresses] == list(range(ball.size))
    assert topology.decode(0) == ""
    assert topology.decode(4) == "00"


def test_ball_around_inner_vertex():
    ball = topology.ball("01", 2)
    assert ball.size == topology.ball_size(2)
    assert all(topology.distance("01", a) <= 2 for a in ball.addresses)
    assert "" in ball and "2" not in ball


def test_neighbor_table_is_symmetric():
    ball = topology.ball(topology.ROOT, 4)
    for i in range(ball.size):
        for j in ball.neighbors[i]:
            if j >= 0:
                assert i in ball.neighbors[j]
    boundary = set(ball.boundary.tolist())
    assert all((ball.neighbors[i] < 0).sum() == (2 if i in boundary else 0) for i in range(ball.size))


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        topology.ball(topology.ROOT, -1)


def test_distance_matches_path_length():
    ball = topology.ball(topology.ROOT, 6)
    for u in ball.addresses:
        for v in ball.addresses:
            assert topology.distance(u, v) == len(topology.path_between(u, v)) - 1


@pytest.mark.parametrize("u, v, path", [
    ("", "", [""]),
    ("0", "", ["0", ""]),
    ("00", "01", ["00", "0", "01"]),
])
def test_short_paths(u, v, path):
    assert topology.path_between(u, v) == path


def test_ball_size_closed_form_up_to_twelve():
    assert topology.ball(topology.ROOT, 0).size == 1
    for radius in range(1, 13):
        assert topology.ball(topology.ROOT, radius).size == 3 * 2 ** radius - 2
