import json
import logging
import sys
from contextlib import asynccontextmanager, contextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

_project_root = str(Path(__file__).resolve().parents[2])
sys.path.insert(0, _project_root)

from dotenv import load_dotenv
load_dotenv(Path(_project_root) / ".env")

from services.criteria import check_graph
from services.errors import INPUT_ERRORS, BudgetExceeded, LemmaHypothesisFailed, UnknownFixture
from services.fixtures import GRAPH_FIXTURES, SCM_FIXTURES, fixture_names, graph_fixture, reproduce, scm_fixture
from services.graph_core import ScopedGraph, ScopedGraphDocument
from services.materiality_builder import synthesize
from services.policy_search import apply_scope_edits, meu, voi_detail
from services.reports import (
    CheckResult, MEUModel, Rational, ReproductionResult, SynthesisResult, VoIModel,
    check_result, meu_model, voi_model,
)
from services.scm_engine import FiniteSCM, expected_utility, reference_policy
from services.settings import get_settings

from .models import FixtureList, FixtureSummary, MEURequest, SynthesizeRequest, VoIRequest

# Configure logging
logging.basicConfig(level=getattr(logging, get_settings().log_level.upper(), logging.INFO))
logger = logging.getLogger(__name__)

VERSION = "1.0.0"


@asynccontextmanager
async def lifespan(app: FastAPI):
    settings = get_settings()
    logger.info(f"Materiality API started (policy budget {settings.policy_budget}, threads {settings.threads})")
    yield
    logger.info("Materiality API stopped")


app = FastAPI(
    title="Materiality API",
    description="Graphical materiality criteria, materiality SCM synthesis and exact MEU search",
    version=VERSION,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


@contextmanager
def service_errors(action: str):
    """Map library failures onto HTTP status codes."""
    try:
        yield
    except UnknownFixture as e:
        raise HTTPException(status_code=404, detail=f"Fixture not found: {e.name}")
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except BudgetExceeded as e:
        logger.warning(f"{action}: {e}")
        raise HTTPException(status_code=413, detail=str(e))
    except LemmaHypothesisFailed as e:
        logger.exception(f"{action} failed internally")
        raise HTTPException(status_code=500, detail=f"Internal construction failure: {e}")


@app.get("/")
async def root():
    return {"message": "Materiality API", "version": VERSION}


@app.get("/health")
async def health_check():
    return {"status": "healthy"}


@app.get("/fixtures", response_model=FixtureList)
async def list_fixtures():
    """Named decision problems with stored expected values."""
    out = []
    for name in fixture_names():
        source = graph_fixture(name) if name in GRAPH_FIXTURES else scm_fixture(name)
        out.append(FixtureSummary(
            name=name,
            description=source.description,
            has_graph=name in GRAPH_FIXTURES,
            has_scm=name in SCM_FIXTURES,
        ))
    return FixtureList(fixtures=out)


@app.get("/reproduce/{name}", response_model=ReproductionResult)
def reproduce_fixture(name: str, k_override: int = Query(1, ge=1, le=4)):
    with service_errors(f"reproduce {name}"):
        return reproduce(name, k_override, threads=get_settings().threads)


@app.post("/check", response_model=CheckResult)
def check(graph: ScopedGraphDocument):
    """Run every graphical criterion on each context edge of the graph."""
    with service_errors("check"):
        g = ScopedGraph.from_document(graph)
        return check_result(check_graph(g))


@app.post("/synthesize", response_model=SynthesisResult, response_model_exclude_none=True)
def synthesize_scm(request: SynthesizeRequest):
    with service_errors("synthesize"):
        g = ScopedGraph.from_document(request.graph)
        paths, params, scm = synthesize(g, request.decision, request.context, request.k_override)
        compliant = expected_utility(scm, reference_policy(scm), get_settings().threads)
        return SynthesisResult(
            decision=request.decision,
            context=request.context,
            k=params.k,
            b=params.b,
            c=params.c,
            k_override=params.k_override,
            paths=paths.describe(),
            compliant_utility=Rational.of(compliant),
            scm=json.loads(scm.to_json()),
        )


@app.post("/meu", response_model=MEUModel)
def maximum_expected_utility(request: MEURequest):
    with service_errors("meu"):
        scm = FiniteSCM(request.scm)
        scope = scm.default_scope()
        if request.scope_edits:
            scope = apply_scope_edits(scope, request.scope_edits)
        return meu_model(meu(scm, scope, request.budget, get_settings().threads))


@app.post("/voi", response_model=VoIModel)
def value_of_information(request: VoIRequest):
    """MEU with the context, MEU without it, and their difference."""
    with service_errors("voi"):
        scm = FiniteSCM(request.scm)
        with_context, without_context = voi_detail(
            scm, None, request.decision, request.context, request.budget, get_settings().threads)
        return voi_model(request.decision, request.context, with_context, without_context)
