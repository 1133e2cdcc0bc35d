from tests import get_session
from toric_workbench.harness import EvalReport, evaluate
from toric_workbench.store import Base, EvalRecord, ResultStore


def report(**kwargs):
    values = dict(decoder="mwpm", L=5, p=0.1, n_samples=100, p_acc=0.9, std_err=0.03, wall_time=1.5, seed=0)
    values.update(kwargs)
    return EvalReport(**values)


class TestResultStore:
    def test_add_and_find(self, tw_store):
        tw_store.add(report())
        found = tw_store.find("mwpm", 5, 0.1, 100, 0)
        assert found == report()

    def test_find_respects_every_key(self, tw_store):
        tw_store.add(report())
        assert tw_store.find("mld", 5, 0.1, 100, 0) is None
        assert tw_store.find("mwpm", 7, 0.1, 100, 0) is None
        assert tw_store.find("mwpm", 5, 0.11, 100, 0) is None
        assert tw_store.find("mwpm", 5, 0.1, 200, 0) is None
        assert tw_store.find("mwpm", 5, 0.1, 100, 1) is None

    def test_reports_are_ordered(self, tw_store):
        tw_store.add(report(L=7, p=0.12))
        tw_store.add(report(L=5, p=0.15))
        tw_store.add(report(L=5, p=0.12, decoder="mld"))
        assert [(r.L, r.p) for r in tw_store.reports()] == [(5, 0.12), (5, 0.15), (7, 0.12)]
        assert [r.decoder for r in tw_store.reports("mld")] == ["mld"]

    def test_rows(self, tw_store, tw_session):
        tw_store.add(report())
        record = tw_session.query(EvalRecord).one()
        assert record.decoder == "mwpm"
        assert record.created_at is not None

    def test_from_url(self):
        store = ResultStore.from_url("sqlite:///")
        store.add(report())
        assert len(store.reports()) == 1
        store.close()


class TestResume:
    def test_evaluate_reuses_stored_cells(self, tw_store):
        first = evaluate("mwpm", 3, 0.1, 50, seed=3, store=tw_store)
        assert len(tw_store.reports()) == 1

        second = evaluate("mwpm", 3, 0.1, 50, seed=3, store=tw_store)
        assert second == first
        assert len(tw_store.reports()) == 1

    def test_stored_values_win(self, tw_store):
        tw_store.add(report(L=3, p=0.1, n_samples=50, seed=3, p_acc=0.123))
        assert evaluate("mwpm", 3, 0.1, 50, seed=3, store=tw_store).p_acc == 0.123


def test_record_mapping():
    session = get_session(Base)
    session.add(EvalRecord.from_report(report(decoder="end", L=9)))
    session.commit()

    record = session.query(EvalRecord).one()
    assert record.to_report() == report(decoder="end", L=9)
    session.close()
