from typing import Optional

from pydantic import BaseModel, Field

from services.graph_core import ScopedGraphDocument
from services.scm_engine import ScmDocument


class SynthesizeRequest(BaseModel):
    graph: ScopedGraphDocument
    decision: str
    context: str
    k_override: Optional[int] = Field(None, ge=1, le=8, description="Replace the derived k (voids the guarantees)")


class MEURequest(BaseModel):
    scm: ScmDocument
    scope_edits: str = Field("", description='Edits like "X0-Z0,X1+C"')
    budget: Optional[int] = Field(None, ge=1, description="Maximum enumerated policies")


class VoIRequest(BaseModel):
    scm: ScmDocument
    decision: str
    context: str
    budget: Optional[int] = Field(None, ge=1)


class FixtureSummary(BaseModel):
    name: str
    description: str
    has_graph: bool
    has_scm: bool


class FixtureList(BaseModel):
    fixtures: list[FixtureSummary]
