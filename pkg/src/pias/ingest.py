"""Fetch and parse registry studies and PubMed abstracts, and link the two.

All fetchers go through an injectable Transport so tests (and offline runs)
can use bundled fixture directories instead of live endpoints. Live endpoint
URLs are configuration: pass a base URL starting with "fixture:" to read
canned responses from disk.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Protocol
from urllib.parse import urlencode, urlsplit

import requests

from .errors import FetchError, NotFoundError, ParseError

log = logging.getLogger(__name__)

REGISTRY_BASE_URL = "https://clinicaltrials.gov/api/v2"
EUTILS_BASE_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"

# Search terms used to pull the oncology slice of the registry.
DEFAULT_KEYWORDS = [
    "cancer", "neoplasm", "tumor", "oncology", "malignancy", "neoplasia",
    "neoplastic syndrome", "neoplastic disease", "neoplastic growth",
    "malignant growth",
]

NCT_PATTERN = re.compile(r"^NCT\d{8}$")
PAGE_SIZE = 200


class Phase(str, Enum):
    EARLY_PHASE1 = "EarlyPhase1"
    PHASE1 = "Phase1"
    PHASE2 = "Phase2"
    PHASE3 = "Phase3"
    PHASE4 = "Phase4"
    NOT_APPLICABLE = "NotApplicable"


PHASE_ORDER = [Phase.EARLY_PHASE1, Phase.PHASE1, Phase.PHASE2, Phase.PHASE3, Phase.PHASE4]

_PHASE_ALIASES = {
    "EARLY_PHASE1": Phase.EARLY_PHASE1,
    "PHASE1": Phase.PHASE1,
    "PHASE2": Phase.PHASE2,
    "PHASE3": Phase.PHASE3,
    "PHASE4": Phase.PHASE4,
    "NA": Phase.NOT_APPLICABLE,
}


class StudyStatus(str, Enum):
    COMPLETED = "Completed"
    TERMINATED = "Terminated"
    OTHER = "Other"


class StudyType(str, Enum):
    INTERVENTIONAL = "Interventional"
    OBSERVATIONAL = "Observational"
    OTHER = "Other"


@dataclass(frozen=True)
class CTStudy:
    nct_id: str
    phases: frozenset
    status: StudyStatus
    intervention_names: tuple
    linked_pmids: tuple
    study_type: StudyType
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not NCT_PATTERN.match(self.nct_id):
            raise ValueError(f"bad registry identifier: {self.nct_id!r}")
        if len(set(self.linked_pmids)) != len(self.linked_pmids):
            raise ValueError(f"duplicate linked PMIDs on {self.nct_id}")


@dataclass(frozen=True)
class Article:
    pmid: str
    pub_date: date
    title: str
    abstract: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.pmid.isdigit():
            raise ValueError(f"bad PMID: {self.pmid!r}")

    @property
    def has_abstract(self) -> bool:
        return bool(self.abstract.strip())


@dataclass(frozen=True)
class FetchPolicy:
    max_requests_per_second: float = 3.0
    max_retries: int = 4
    backoff: float = 1.0
    jitter: bool = True
    timeout: float = 30.0

    def __post_init__(self):
        if self.max_requests_per_second <= 0:
            raise ValueError("rate must be positive")
        if self.max_retries < 0:
            raise ValueError("retries must be >= 0")


def default_policy() -> FetchPolicy:
    """Default fetch policy; an NCBI API key raises the rate limit to 10/s."""
    rate = 10.0 if os.environ.get("NCBI_API_KEY") else 3.0
    return FetchPolicy(max_requests_per_second=rate)


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------


def canonical_request(url: str, params: dict | None = None) -> str:
    """Stable key for a request: final path segment plus sorted query string."""
    path = urlsplit(url).path if "://" in url else url
    name = path.rstrip("/").rsplit("/", 1)[-1]
    query = urlencode(sorted((params or {}).items()))
    return f"{name}?{query}"


class Transport(Protocol):
    def get(self, url: str, params: dict | None = None) -> bytes: ...


class RateLimiter:
    """Sliding one-second window limiter, safe under concurrent use.

    The clock and sleep functions are injectable so tests can drive it with
    a fake clock.
    """

    def __init__(self, max_per_second: float, clock=time.monotonic, sleep=time.sleep):
        self.limit = max(1, int(max_per_second))
        self._clock = clock
        self._sleep = sleep
        self._window: deque = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._window and self._window[0] <= now - 1.0:
                    self._window.popleft()
                if len(self._window) < self.limit:
                    self._window.append(now)
                    return
                wait = self._window[0] + 1.0 - now
            self._sleep(max(wait, 1e-4))


class HttpTransport:
    """requests-backed transport with rate limiting and exponential-backoff
    retries. 4xx other than 429 fails immediately; 404 raises NotFoundError."""

    def __init__(self, policy: FetchPolicy | None = None, session=None,
                 clock=time.monotonic, sleep=time.sleep):
        self.policy = policy or default_policy()
        self.session = session or requests.Session()
        self.limiter = RateLimiter(self.policy.max_requests_per_second, clock=clock, sleep=sleep)
        self._sleep = sleep
        self._rng = random.Random(0)

    def get(self, url: str, params: dict | None = None) -> bytes:
        last_status = None
        for attempt in range(self.policy.max_retries + 1):
            self.limiter.acquire()
            try:
                resp = self.session.get(url, params=params, timeout=self.policy.timeout)
                last_status = resp.status_code
                if resp.status_code == 200:
                    return resp.content
                if resp.status_code == 404:
                    raise NotFoundError(f"{url} not found", status=404)
                if 400 <= resp.status_code < 500 and resp.status_code != 429:
                    raise FetchError(f"request to {url} rejected", status=resp.status_code)
            except requests.RequestException as exc:
                log.warning("request to %s failed: %s", url, exc)
            if attempt < self.policy.max_retries:
                delay = self.policy.backoff * (2**attempt)
                if self.policy.jitter:
                    delay += self._rng.uniform(0, self.policy.backoff)
                self._sleep(delay)
        raise FetchError(f"request to {url} failed after {self.policy.max_retries + 1} attempts",
                         status=last_status)


class FixtureTransport:
    """Serves canned responses from a directory with an index.json mapping
    canonical request keys to file names."""

    def __init__(self, root):
        self.root = Path(root)
        index_path = self.root / "index.json"
        if not index_path.exists():
            raise FetchError(f"fixture directory {self.root} has no index.json")
        self.index = json.loads(index_path.read_text(encoding="utf-8"))

    def get(self, url: str, params: dict | None = None) -> bytes:
        key = canonical_request(url, params)
        name = self.index.get(key)
        if name is None:
            raise NotFoundError(f"no fixture for {key}", status=404)
        return (self.root / name).read_bytes()


class CachingTransport:
    """Content-addressed on-disk cache in front of another transport."""

    def __init__(self, inner: Transport, cache_dir):
        self.inner = inner
        self.cache_dir = Path(cache_dir)

    def get(self, url: str, params: dict | None = None) -> bytes:
        digest = hashlib.sha256(
            (url + "?" + urlencode(sorted((params or {}).items()))).encode("utf-8")
        ).hexdigest()
        path = self.cache_dir / digest[:2] / digest
        if path.exists():
            return path.read_bytes()
        body = self.inner.get(url, params)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(body)
        return body


def make_transport(base_url: str, policy: FetchPolicy | None = None,
                   cache_dir=None) -> Transport:
    """Build the right transport for a base URL; 'fixture:<dir>' reads canned
    responses, anything else goes over HTTP (optionally disk-cached)."""
    if base_url.startswith("fixture:"):
        return FixtureTransport(base_url[len("fixture:"):])
    transport: Transport = HttpTransport(policy)
    if cache_dir:
        transport = CachingTransport(transport, cache_dir)
    return transport


def resolve_base(base_url: str) -> str:
    """Request-building base for a possibly fixture-scheme URL."""
    if base_url.startswith("fixture:"):
        return "fixture"
    return base_url


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_ct_study(raw: bytes) -> CTStudy:
    """Parse one registry study record. A missing phase list maps to
    {NotApplicable}; malformed records raise ParseError with a byte offset."""
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed study record: {exc.msg}", offset=exc.pos) from exc
    try:
        proto = record["protocolSection"]
        nct_id = proto["identificationModule"]["nctId"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"study record missing field: {exc}", offset=0) from exc

    design = proto.get("designModule", {})
    raw_phases = design.get("phases") or []
    phases = frozenset(_PHASE_ALIASES.get(p, Phase.NOT_APPLICABLE) for p in raw_phases)
    if not phases:
        phases = frozenset({Phase.NOT_APPLICABLE})

    status_raw = proto.get("statusModule", {}).get("overallStatus", "")
    status = {
        "COMPLETED": StudyStatus.COMPLETED,
        "TERMINATED": StudyStatus.TERMINATED,
    }.get(status_raw.upper(), StudyStatus.OTHER)

    stype_raw = str(design.get("studyType", "")).upper()
    study_type = {
        "INTERVENTIONAL": StudyType.INTERVENTIONAL,
        "OBSERVATIONAL": StudyType.OBSERVATIONAL,
    }.get(stype_raw, StudyType.OTHER)

    names = []
    for item in proto.get("armsInterventionsModule", {}).get("interventions", []) or []:
        name = (item or {}).get("name", "").strip()
        if name:
            names.append(name)

    pmids = []
    for ref in proto.get("referencesModule", {}).get("references", []) or []:
        pmid = str((ref or {}).get("pmid", "")).strip()
        if pmid.isdigit() and pmid not in pmids:
            pmids.append(pmid)

    try:
        return CTStudy(
            nct_id=nct_id,
            phases=phases,
            status=status,
            intervention_names=tuple(names),
            linked_pmids=tuple(pmids),
            study_type=study_type,
        )
    except ValueError as exc:
        raise ParseError(str(exc), offset=0) from exc


def _json_strings(value) -> list:
    out = []
    if isinstance(value, str):
        out.append(value)
    elif isinstance(value, dict):
        for v in value.values():
            out.extend(_json_strings(v))
    elif isinstance(value, list):
        for v in value:
            out.extend(_json_strings(v))
    return out


_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}


def _parse_part(node, default: int) -> int:
    if node is None or not (node.text or "").strip():
        return default
    text = node.text.strip()
    if text.isdigit():
        return int(text)
    return _MONTHS.get(text[:3].lower(), default)


def _parse_pub_date(article_el) -> date:
    """Publication date with missing month/day completed as January/1st."""
    for xpath in ("./ArticleDate", "./Journal/JournalIssue/PubDate"):
        el = article_el.find(xpath)
        if el is None:
            continue
        year_el = el.find("Year")
        if year_el is not None and (year_el.text or "").strip().isdigit():
            return date(
                int(year_el.text.strip()),
                _parse_part(el.find("Month"), 1),
                _parse_part(el.find("Day"), 1),
            )
        medline = el.find("MedlineDate")
        if medline is not None and medline.text:
            match = re.search(r"\d{4}", medline.text)
            if match:
                return date(int(match.group(0)), 1, 1)
    raise ParseError("article record has no parseable date", offset=0)


def parse_pubmed_article(raw: bytes) -> Article:
    """Parse one citation-XML record into an Article. Records with no
    Abstract element come back with an empty abstract (flagged via
    has_abstract)."""
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        raise ParseError(f"malformed citation XML: {exc}", offset=exc.position[1]) from exc
    node = root.find(".//PubmedArticle")
    if node is None:
        raise NotFoundError("no article in citation response", status=404)
    citation = node.find("MedlineCitation")
    pmid_el = citation.find("PMID") if citation is not None else None
    article_el = citation.find("Article") if citation is not None else None
    if pmid_el is None or article_el is None:
        raise ParseError("citation record missing PMID or Article", offset=0)

    title = "".join((article_el.find("ArticleTitle").itertext())
                    if article_el.find("ArticleTitle") is not None else "").strip()
    parts = []
    for seg in article_el.findall("./Abstract/AbstractText"):
        text = "".join(seg.itertext()).strip()
        if not text:
            continue
        label = seg.get("Label")
        parts.append(f"{label}: {text}" if label else text)
    return Article(
        pmid=pmid_el.text.strip(),
        pub_date=_parse_pub_date(article_el),
        title=title,
        abstract=" ".join(parts),
    )


# ---------------------------------------------------------------------------
# Fetch operations
# ---------------------------------------------------------------------------


def fetch_cancer_trials(
    keywords,
    statuses,
    policy: FetchPolicy | None = None,
    transport: Transport | None = None,
    base_url: str = REGISTRY_BASE_URL,
):
    """Fetch interventional registry studies whose text matches at least one
    keyword (case-insensitive) and whose status is in statuses.

    Results are deduplicated by registry id. Pagination follows the server's
    nextPageToken.
    """
    keywords = list(keywords)
    statuses = set(statuses)
    if not keywords:
        raise ValueError("keyword list must not be empty")
    if not statuses:
        raise ValueError("status set must not be empty")
    policy = policy or default_policy()
    transport = transport or make_transport(base_url, policy)
    base = resolve_base(base_url)

    terms = [k.lower() for k in keywords]
    status_filter = "|".join(sorted(s.name for s in statuses))
    studies = []
    seen = set()
    page_token = None
    while True:
        params = {
            "query.term": " OR ".join(keywords),
            "filter.overallStatus": status_filter,
            "pageSize": str(PAGE_SIZE),
        }
        if page_token:
            params["pageToken"] = page_token
        body = transport.get(f"{base}/studies", params)
        try:
            payload = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed study search page: {exc.msg}", offset=exc.pos) from exc
        for record in payload.get("studies", []):
            blob = " ".join(_json_strings(record)).lower()
            if not any(term in blob for term in terms):
                continue
            study = parse_ct_study(json.dumps(record).encode("utf-8"))
            if study.study_type is not StudyType.INTERVENTIONAL:
                continue
            if study.status not in statuses:
                continue
            if study.nct_id in seen:
                continue
            seen.add(study.nct_id)
            studies.append(study)
        page_token = payload.get("nextPageToken")
        if not page_token:
            break
    return studies


def _eutils_params(extra: dict, api_key: str | None) -> dict:
    params = dict(extra)
    key = api_key if api_key is not None else os.environ.get("NCBI_API_KEY")
    if key:
        params["api_key"] = key
    return params


def link_articles(
    study: CTStudy,
    policy: FetchPolicy | None = None,
    transport: Transport | None = None,
    base_url: str = EUTILS_BASE_URL,
    api_key: str | None = None,
):
    """Union of the study's own reference PMIDs and a literature search on the
    registry id, deduplicated and sorted ascending. No hits is an empty list,
    not an error."""
    policy = policy or default_policy()
    transport = transport or make_transport(base_url, policy)
    base = resolve_base(base_url)
    params = _eutils_params(
        {"db": "pubmed", "term": study.nct_id, "retmode": "json", "retmax": "500"},
        api_key,
    )
    body = transport.get(f"{base}/esearch.fcgi", params)
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed search response: {exc.msg}", offset=exc.pos) from exc
    hits = payload.get("esearchresult", {}).get("idlist", []) or []
    pmids = {p for p in study.linked_pmids}
    pmids.update(str(h) for h in hits if str(h).isdigit())
    return sorted(pmids, key=int)


def fetch_abstract(
    pmid: str,
    policy: FetchPolicy | None = None,
    transport: Transport | None = None,
    base_url: str = EUTILS_BASE_URL,
    api_key: str | None = None,
) -> Article:
    """Fetch and parse one citation record."""
    if not str(pmid).isdigit():
        raise ValueError(f"PMID must be numeric, got {pmid!r}")
    policy = policy or default_policy()
    transport = transport or make_transport(base_url, policy)
    base = resolve_base(base_url)
    params = _eutils_params({"db": "pubmed", "id": str(pmid), "retmode": "xml"}, api_key)
    body = transport.get(f"{base}/efetch.fcgi", params)
    try:
        return parse_pubmed_article(body)
    except NotFoundError:
        raise NotFoundError(f"PMID {pmid} not found", status=404) from None
