import numpy as np
import pytest

from ctxrec.data import Dataset


def make_dataset(checkins, coords=None, social=(), categories=None, user_ids=None):
    """Tiny dataset from ``(user, poi, t)`` index triples.

    ``coords`` maps poi index -> (lat, lon); missing POIs sit on a line
    0.01 degrees apart.
    """
    checkins = list(checkins)
    n_users = max(u for u, _, _ in checkins) + 1 if checkins else 0
    n_pois = max([l for _, l, _ in checkins] + list((coords or {}).keys()) + [-1]) + 1
    coords = coords or {}
    lat = [coords.get(i, (40.0 + 0.01 * i, -74.0))[0] for i in range(n_pois)]
    lon = [coords.get(i, (40.0 + 0.01 * i, -74.0))[1] for i in range(n_pois)]
    cat_ids = None
    if categories is not None:
        cat_ids = [f"c{i}" for i in range(max(categories) + 1)]
    return Dataset.build(
        user_ids=user_ids or [f"u{i}" for i in range(n_users)],
        poi_ids=[f"p{i}" for i in range(n_pois)],
        poi_lat=lat, poi_lon=lon,
        users=[c[0] for c in checkins], pois=[c[1] for c in checkins],
        timestamps=[c[2] for c in checkins], social_pairs=list(social),
        poi_category=categories, category_ids=cat_ids,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synthetic():
    from ctxrec.synthetic import SyntheticConfig, generate_synthetic
    cfg = SyntheticConfig(n_users=60, n_pois=200, n_checkins=3000, min_checkins=20)
    return generate_synthetic(cfg, 7)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS"
        elif issubclass(exc_type, pytest.skip.Exception):
            status = "SKIP"
            self.detail = self.detail or str(exc)
        else:
            status = "FAIL"
            self.detail = self.detail or f"{exc_type.__name__}: {exc}"
        ACCEPTANCE[self.number] = (status, self.title, self.detail)
        print(f"\ncriterion {self.number:>2} {status}: {self.title} {self.detail}".rstrip())
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one pass/fail line per acceptance criterion."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {status}: {title}" + (f" ({detail})" if detail else ""))
