"""Estimator-style wrapper around hierarchical retrieval."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..agents.decompose import AgentConfig
from ..corpus.database import MotionDatabase
from ..errors import InvalidArgumentError
from .retrieve import Query, hierarchical_retrieve
from .scoring import RetrievalConfig


class HierarchicalRetriever(BaseEstimator):
    """``fit`` binds a database; ``predict`` maps (prompt, length) queries to plans.

    There is nothing to learn: fitting only validates and stores the index.
    """

    def __init__(self, llm=None, embedder=None, lam=0.05, tau_full=0.96, tau_half=0.96, k=5,
                 score_rule="max", temperature=0.7, max_retries=2, max_in_flight=4, seed=0):
        self.llm = llm
        self.embedder = embedder
        self.lam = lam
        self.tau_full = tau_full
        self.tau_half = tau_half
        self.k = k
        self.score_rule = score_rule
        self.temperature = temperature
        self.max_retries = max_retries
        self.max_in_flight = max_in_flight
        self.seed = seed

    def fit(self, db: MotionDatabase, y=None):
        if not isinstance(db, MotionDatabase):
            raise InvalidArgumentError("HierarchicalRetriever.fit expects a MotionDatabase")
        if len(db) == 0 or not db.is_embedded:
            raise InvalidArgumentError("database must be non-empty and fully embedded")
        if self.llm is None or self.embedder is None:
            raise InvalidArgumentError("HierarchicalRetriever needs llm and embedder providers")
        self.config_ = RetrievalConfig(self.lam, self.tau_full, self.tau_half, self.k, self.score_rule)
        self.agent_config_ = AgentConfig(self.k, self.temperature, self.max_retries, self.max_in_flight)
        self.db_ = db
        return self

    def predict(self, queries):
        """``queries``: iterable of Query objects or (prompt, length) pairs."""
        check_is_fitted(self, "db_")
        out = []
        for q in queries:
            q = q if isinstance(q, Query) else Query(*q)
            out.append(hierarchical_retrieve(self.db_, q, self.config_, self.llm, self.embedder,
                                             self.agent_config_, seed=self.seed))
        return out
