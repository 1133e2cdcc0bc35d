"""A pytest plugin exposing the workbench's building blocks as fixtures.

Tests can depend on ``tw_lattice`` and ``tw_rng`` for small reproducible inputs,
on ``tw_registry`` for the default decoder registry, and on ``tw_store`` for a
result store backed by an in-memory database. Override ``tw_engine`` to point the
store at another database.
"""
from sqlalchemy import create_engine
from sqlalchemy.orm.session import sessionmaker

from toric_workbench import decoders  # noqa: F401
from toric_workbench.lattice import Lattice
from toric_workbench.noise import stream
from toric_workbench.registry import registry
from toric_workbench.store import ResultStore

try:
    import pytest
except ImportError:

    class pytest:  # type:ignore
        """Guard against pytest not being installed.

        The below function will simply act as a normal function if pytest is not installed.
        """

        def fixture(fn):
            return fn


@pytest.fixture
def tw_lattice():
    """The smallest lattice every decoder accepts."""
    return Lattice(3)


@pytest.fixture
def tw_rng():
    return stream(0)


@pytest.fixture
def tw_registry():
    return registry


@pytest.fixture
def tw_engine():
    return create_engine("sqlite:///")


@pytest.fixture
def tw_session(tw_engine):
    Session = sessionmaker(tw_engine)
    session = Session()
    try:
        yield session
    finally:
        session.close()


@pytest.fixture
def tw_store(tw_session):
    return ResultStore(tw_session)
