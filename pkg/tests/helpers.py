"""Shared test scaffolding: canned registry/PubMed fixtures and fakes."""

import json
from pathlib import Path

from pias.ingest import canonical_request


def study_record(nct, phases=("PHASE2",), status="COMPLETED",
                 study_type="INTERVENTIONAL", interventions=("Drug A",),
                 pmids=(), title="A cancer study"):
    return {
        "protocolSection": {
            "identificationModule": {"nctId": nct, "briefTitle": title},
            "statusModule": {"overallStatus": status},
            "designModule": {"studyType": study_type, "phases": list(phases)},
            "armsInterventionsModule": {
                "interventions": [{"type": "DRUG", "name": n} for n in interventions],
            },
            "referencesModule": {
                "references": [{"pmid": str(p), "type": "RESULT"} for p in pmids],
            },
        }
    }


def studies_page(records, next_token=None):
    page = {"studies": records}
    if next_token:
        page["nextPageToken"] = next_token
    return json.dumps(page).encode("utf-8")


def esearch_json(ids):
    return json.dumps({"esearchresult": {"idlist": [str(i) for i in ids]}}).encode("utf-8")


def pubmed_xml(pmid, year=2019, month="05", day="01", title="Title",
               abstract="An abstract sentence.", label=None):
    date_parts = f"<Year>{year}</Year>"
    if month is not None:
        date_parts += f"<Month>{month}</Month>"
    if day is not None:
        date_parts += f"<Day>{day}</Day>"
    if abstract is None:
        abstract_xml = ""
    elif label:
        abstract_xml = f'<Abstract><AbstractText Label="{label}">{abstract}</AbstractText></Abstract>'
    else:
        abstract_xml = f"<Abstract><AbstractText>{abstract}</AbstractText></Abstract>"
    return f"""<?xml version="1.0" ?>
<PubmedArticleSet>
  <PubmedArticle>
    <MedlineCitation>
      <PMID>{pmid}</PMID>
      <Article>
        <Journal><JournalIssue><PubDate>{date_parts}</PubDate></JournalIssue></Journal>
        <ArticleTitle>{title}</ArticleTitle>
        {abstract_xml}
      </Article>
    </MedlineCitation>
  </PubmedArticle>
</PubmedArticleSet>
""".encode("utf-8")


def empty_pubmed_xml():
    return b'<?xml version="1.0" ?><PubmedArticleSet></PubmedArticleSet>'


def write_fixture_dir(root, entries):
    """entries maps (url_suffix, params) -> bytes; returns a fixture base URL."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    index = {}
    for i, ((suffix, params), body) in enumerate(entries.items()):
        name = f"resp{i:03d}.bin"
        (root / name).write_bytes(body)
        index[canonical_request(suffix, dict(params))] = name
    (root / "index.json").write_text(json.dumps(index, indent=1), encoding="utf-8")
    return f"fixture:{root}"


def registry_search_params(keywords, statuses, page_token=None):
    params = {
        "query.term": " OR ".join(keywords),
        "filter.overallStatus": "|".join(sorted(s.upper() for s in statuses)),
        "pageSize": "200",
    }
    if page_token:
        params["pageToken"] = page_token
    return params


def esearch_params(term):
    return {"db": "pubmed", "term": term, "retmode": "json", "retmax": "500"}


def efetch_params(pmid):
    return {"db": "pubmed", "id": str(pmid), "retmode": "xml"}


class FakeClock:
    """Manual clock whose sleep() advances time; drives the rate limiter."""

    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


class FixedScorer:
    """Maps each text to a score from a dict (default for unknown texts)."""

    def __init__(self, table=None, default=0.5):
        self.table = table or {}
        self.default = default

    def score_batch(self, texts):
        return [self.table.get(t, self.default) for t in texts]


class ShiftedScorer:
    """Wraps a scorer, shifting every score by a constant. Callers keep the
    shifted scores inside [0, 1]."""

    def __init__(self, inner, delta):
        self.inner = inner
        self.delta = delta

    def score_batch(self, texts):
        return [s + self.delta for s in self.inner.score_batch(texts)]
