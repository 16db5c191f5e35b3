import pytest

from bimqa.corpus import build_corpus, synthetic_corpus
from bimqa.model import Beam, BimModel, Block, Point3, Slab, Wall

API_KEY_ENV = "BIMQA_TEST_KEY"
API_KEY = "test-secret-token-7f3a"


def ref_wall(**overrides) -> Wall:
    fields = dict(
        id=342693,
        start=Point3(-1897, -5891, 0),
        end=Point3(-1897, -3191, 0),
        thickness_mm=200,
        height_mm=2900,
        length_mm=2700,
        construction_number="Q23",
    )
    fields.update(overrides)
    return Wall(**fields)


def wall(id, x0, y0, x1, y1, z=0, thickness=200, number="Q1", **kw) -> Wall:
    start, end = Point3(x0, y0, z), Point3(x1, y1, kw.pop("z_end", z))
    length = round(((x1 - x0) ** 2 + (y1 - y0) ** 2) ** 0.5)
    kw.setdefault("fire_resistance_hours", 2)
    return Wall(id, start, end, thickness, kw.pop("height", 2900), kw.pop("length", length),
                construction_number=number, **kw)


def rect_slab(id, x0, y0, x1, y1, z=2900, thickness=120, number="B1") -> Slab:
    pts = (Point3(x0, y0, z), Point3(x1, y0, z), Point3(x1, y1, z), Point3(x0, y1, z))
    return Slab(id, pts, thickness, construction_number=number, fire_resistance_hours=2)


def beam(id, x0, y0, x1, y1, z=2900, hours=2, number="L1") -> Beam:
    return Beam(id, Point3(x0, y0, z), Point3(x1, y1, z), 200, 500, construction_number=number,
                fire_resistance_hours=hours)


@pytest.fixture
def ref_block() -> Block:
    return Block("ref", "ref-model", 8000, [ref_wall()])


@pytest.fixture
def room_block() -> Block:
    """A 6000 x 4000 room: four walls, two beams and one slab."""
    comps = [
        wall(101, 0, 0, 6000, 0, number="Q1"),
        wall(102, 6000, 0, 6000, 4000, number="Q2"),
        wall(103, 6000, 4000, 0, 4000, number="Q3"),
        wall(104, 0, 4000, 0, 0, number="Q4"),
        beam(201, 0, 2000, 6000, 2000, number="L1"),
        beam(202, 3000, 0, 3000, 4000, number="L2"),
        rect_slab(301, 0, 0, 6000, 4000),
    ]
    return Block("room", "room-model", 8000, comps)


@pytest.fixture
def ref_model() -> BimModel:
    return BimModel("ref-model", [ref_wall()])


@pytest.fixture(scope="session")
def corpus():
    """The bundled synthetic corpus: 150 answered blocks."""
    return build_corpus(synthetic_corpus(0), seed=0)


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, API_KEY)
    return API_KEY


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
