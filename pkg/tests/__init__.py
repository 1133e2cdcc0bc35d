import numpy as np
from sqlalchemy import create_engine
from sqlalchemy.orm.session import sessionmaker

from toric_workbench.lattice import Lattice, Syndrome
from toric_workbench.noise import DepolarizingNoise, sample_batch


def get_session(Base, *, session=None):
    if session is None:
        engine = create_engine("sqlite:///")
        Session = sessionmaker(engine)
        session = Session()

    Base.metadata.create_all(session.connection())
    return session


def random_errors(L, n, *, p=0.2, seed=0, worker=0):
    return sample_batch(DepolarizingNoise(p, seed=seed), Lattice(L), n, worker=worker, keep_errors=True)


def random_syndromes(L, n, *, p=0.2, seed=0, worker=0):
    batch = random_errors(L, n, p=p, seed=seed, worker=worker)
    return [Syndrome(sx, sz) for sx, sz in zip(batch.sx, batch.sz)]


def single_edge(L, orientation, r, c, *, pauli="x"):
    grid = np.zeros((2, L, L), dtype=np.uint8)
    grid[orientation, r, c] = 1
    empty = np.zeros((2, L, L), dtype=np.uint8)
    return (grid, empty) if pauli == "x" else (empty, grid)
