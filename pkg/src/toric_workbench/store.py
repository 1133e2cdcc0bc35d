"""Persist evaluation results in a SQL database.

Sweeps look cells up by ``(decoder, L, p, n_samples, seed)`` before sampling,
so re-running an interrupted threshold sweep only evaluates the missing cells.
"""
import datetime
import logging
from typing import List, Optional, Union

from sqlalchemy import Column, Index, create_engine, types
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base
from sqlalchemy.orm.session import Session, sessionmaker

from toric_workbench.harness import EvalReport

logger = logging.getLogger(__name__)

Base = declarative_base()


class EvalRecord(Base):
    __tablename__ = "eval_report"
    __table_args__ = (Index("ix_eval_report_cell", "decoder", "L", "p", "n_samples", "seed"),)

    id = Column(types.Integer(), autoincrement=True, primary_key=True)
    decoder = Column(types.String(64), nullable=False)
    L = Column(types.Integer(), nullable=False)
    p = Column(types.Float(), nullable=False)
    n_samples = Column(types.Integer(), nullable=False)
    seed = Column(types.Integer(), nullable=False)
    p_acc = Column(types.Float(), nullable=False)
    std_err = Column(types.Float(), nullable=False)
    wall_time = Column(types.Float(), nullable=False)
    created_at = Column(types.DateTime(), nullable=False, default=datetime.datetime.utcnow)

    @classmethod
    def from_report(cls, report: EvalReport) -> "EvalRecord":
        return cls(
            decoder=report.decoder,
            L=report.L,
            p=report.p,
            n_samples=report.n_samples,
            seed=report.seed,
            p_acc=report.p_acc,
            std_err=report.std_err,
            wall_time=report.wall_time,
        )

    def to_report(self) -> EvalReport:
        return EvalReport(
            decoder=self.decoder,
            L=self.L,
            p=self.p,
            n_samples=self.n_samples,
            seed=self.seed,
            p_acc=self.p_acc,
            std_err=self.std_err,
            wall_time=self.wall_time,
        )


class ResultStore:
    """Evaluation reports kept in the database behind ``session``."""

    def __init__(self, session: Session):
        self.session = session
        Base.metadata.create_all(session.connection())
        session.commit()

    @classmethod
    def from_url(cls, url: Union[str, Engine]) -> "ResultStore":
        engine = create_engine(url) if isinstance(url, str) else url
        Session = sessionmaker(engine)
        return cls(Session())

    def add(self, report: EvalReport) -> EvalReport:
        # The state of the session is unknown at this point. Ensure it's empty.
        self.session.rollback()

        record = EvalRecord.from_report(report)
        self.session.add(record)
        self.session.flush()
        self.session.commit()
        logger.debug("Stored %s L=%d p=%s as row %d.", report.decoder, report.L, report.p, record.id)
        return report

    def find(self, decoder: str, L: int, p: float, n_samples: int, seed: int) -> Optional[EvalReport]:
        record = (
            self.session.query(EvalRecord)
            .filter_by(decoder=decoder, L=L, n_samples=n_samples, seed=seed)
            .filter(EvalRecord.p.between(p - 1e-12, p + 1e-12))
            .order_by(EvalRecord.id.desc())
            .first()
        )
        if record is None:
            return None
        return record.to_report()

    def reports(self, decoder: Optional[str] = None) -> List[EvalReport]:
        query = self.session.query(EvalRecord)
        if decoder is not None:
            query = query.filter_by(decoder=decoder)
        return [record.to_report() for record in query.order_by(EvalRecord.L, EvalRecord.p, EvalRecord.id)]

    def close(self):
        self.session.close()
