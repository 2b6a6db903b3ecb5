"""Deterministic synthetic corpora with planted outcome signal.

Each intervention gets registry studies across trial phases and one abstract
per article; one sentence per abstract carries outcome signal. Per article the
signal is truthful (class-consistent) with probability 1 - noise, otherwise it
is either adversarial (the opposite class's phrasing) or hedged (no usable
signal). Noise can vary by phase, which makes phase-restricted experiments
easier or harder by construction.

Used by the test suite as its end-to-end fixture and handy for demo runs.
"""

from __future__ import annotations

import random
from datetime import date

from .corpus import Intervention, build_intervention_records
from .ingest import Article, CTStudy, Phase, StudyStatus, StudyType

NAME_STEMS = [
    "vela", "dorna", "quili", "masto", "ferri", "nexi", "palto", "tezi",
    "orlu", "cabi", "denu", "rilo", "sapro", "lumi", "ganta", "ibru",
]
NAME_SUFFIXES = ["mab", "nib", "tide", "stat", "pine", "zole", "cept", "fos"]

FILLER_TEMPLATES = [
    "Patients were enrolled at multiple centers across several regions.",
    "Eligible adults received {name} or an active comparator in a randomized design.",
    "Baseline characteristics were balanced between the treatment arms.",
    "The protocol was approved by the institutional review boards of all sites.",
    "Median follow-up at the data cutoff exceeded two years.",
    "Randomization was stratified by region and prior therapy.",
    "Dosing followed the standard weekly schedule with planned safety reviews.",
]

POSITIVE_TEMPLATES = [
    "Median overall survival improved significantly with {name} compared with control.",
    "Treatment with {name} significantly prolonged progression free survival (hazard ratio 0.{hr}).",
    "The primary endpoint was met, with a significantly higher objective response rate for {name}.",
    "{name} demonstrated a significant improvement in disease free survival compared with control.",
    "Complete response rates were significantly higher in the {name} group (p = 0.00{p}).",
    "Durable remission was achieved with {name} and toxicity remained manageable.",
]

NEGATIVE_TEMPLATES = [
    "The trial was stopped early for futility after a planned interim analysis of {name}.",
    "Treatment with {name} did not improve overall survival compared with control.",
    "Grade 3 or higher adverse events were markedly more frequent with {name}.",
    "The primary endpoint was not met, with no meaningful difference in response rate.",
    "Enrollment was halted because of unacceptable toxicity in the {name} arm.",
    "Efficacy of {name} was insufficient to continue accrual beyond the interim analysis.",
]

HEDGED_TEMPLATES = [
    "Outcomes for {name} were recorded and are reported descriptively.",
    "Further studies of {name} may be warranted in this population.",
    "Results for the secondary endpoints of {name} are summarized in the supplement.",
    "Interpretation of the {name} findings awaits longer follow-up.",
]

POST_APPROVAL_TEMPLATES = [
    "Routine post marketing surveillance of {name} confirmed the established safety profile.",
    "Long term registry follow-up of {name} after approval showed consistent outcomes.",
]

# Per-phase probability that an article's outcome sentence misrepresents the
# intervention's true class (split between adversarial and hedged sentences).
UNIFORM_NOISE = {Phase.PHASE1: 0.2, Phase.PHASE2: 0.2, Phase.PHASE3: 0.2}
PHASE_GRADED_NOISE = {Phase.PHASE1: 0.55, Phase.PHASE2: 0.25, Phase.PHASE3: 0.05}

_PHASE_YEAR = {Phase.PHASE1: 2014, Phase.PHASE2: 2017, Phase.PHASE3: 2019}


def _fill(template: str, name: str, rng: random.Random) -> str:
    return template.format(
        name=name,
        hr=rng.randint(40, 79),
        p=rng.randint(1, 9),
    )


def _outcome_sentence(name: str, approved: bool, noise: float,
                      adversarial: float, rng: random.Random) -> str:
    truthful = rng.random() >= noise
    if truthful:
        pool = POSITIVE_TEMPLATES if approved else NEGATIVE_TEMPLATES
    elif rng.random() < adversarial:
        pool = NEGATIVE_TEMPLATES if approved else POSITIVE_TEMPLATES
    else:
        pool = HEDGED_TEMPLATES
    return _fill(rng.choice(pool), name, rng)


def _abstract(name: str, outcome: str, rng: random.Random) -> str:
    fillers = [_fill(rng.choice(FILLER_TEMPLATES), name, rng)
               for _ in range(rng.randint(2, 3))]
    position = rng.randint(0, len(fillers))
    sentences = fillers[:position] + [outcome] + fillers[position:]
    return " ".join(sentences)


def synthetic_corpus(
    n_interventions: int = 120,
    seed: int = 0,
    noise: dict | None = None,
    adversarial: float = 0.5,
    with_post_approval_article: bool = True,
) -> list:
    """Build a labeled synthetic corpus via the regular record constructor.

    Alternating approved/terminated labels; approved interventions carry a
    Phase-4 study (whose only article is a post-approval giveaway, exercising
    the exclusion rule). A share of terminated interventions stops at phase 1
    or 2, giving phase-to-phase experiments both outcome classes.
    """
    noise = noise or UNIFORM_NOISE
    rng = random.Random(seed)
    studies = []
    articles = {}
    next_pmid = 10_000_001
    next_nct = 90_000_001

    for idx in range(n_interventions):
        approved = idx % 2 == 0
        stem = NAME_STEMS[idx % len(NAME_STEMS)]
        suffix = NAME_SUFFIXES[(idx // len(NAME_STEMS)) % len(NAME_SUFFIXES)]
        name = f"{stem}{suffix}"
        if idx >= len(NAME_STEMS) * len(NAME_SUFFIXES):
            name = f"{name}{idx}"

        if approved:
            reach = 3
        else:
            reach = rng.choices([1, 2, 3], weights=[0.2, 0.3, 0.5])[0]
        phases = [Phase.PHASE1, Phase.PHASE2, Phase.PHASE3][:reach]

        for pos, phase in enumerate(phases):
            terminal = (not approved) and pos == len(phases) - 1
            pmids = []
            for _ in range(rng.randint(1, 3)):
                pmid = str(next_pmid)
                next_pmid += 1
                year = _PHASE_YEAR[phase] + rng.randint(0, 2)
                outcome = _outcome_sentence(name, approved, noise[phase], adversarial, rng)
                articles[pmid] = Article(
                    pmid=pmid,
                    pub_date=date(year, rng.randint(1, 12), rng.randint(1, 28)),
                    title=f"A {phase.value.lower()} study of {name}.",
                    abstract=_abstract(name, outcome, rng),
                )
                pmids.append(pmid)
            studies.append(CTStudy(
                nct_id=f"NCT{next_nct}",
                phases=frozenset({phase}),
                status=StudyStatus.TERMINATED if terminal else StudyStatus.COMPLETED,
                intervention_names=(name,),
                linked_pmids=tuple(pmids),
                study_type=StudyType.INTERVENTIONAL,
            ))
            next_nct += 1

        if approved:
            pmids = ()
            if with_post_approval_article:
                pmid = str(next_pmid)
                next_pmid += 1
                articles[pmid] = Article(
                    pmid=pmid,
                    pub_date=date(2022, rng.randint(1, 12), rng.randint(1, 28)),
                    title=f"Post approval experience with {name}.",
                    abstract=_abstract(name, _fill(rng.choice(POST_APPROVAL_TEMPLATES), name, rng), rng),
                )
                pmids = (pmid,)
            studies.append(CTStudy(
                nct_id=f"NCT{next_nct}",
                phases=frozenset({Phase.PHASE4}),
                status=StudyStatus.COMPLETED,
                intervention_names=(name,),
                linked_pmids=pmids,
                study_type=StudyType.INTERVENTIONAL,
            ))
            next_nct += 1

    return build_intervention_records(studies, articles)


def synthetic_annotations(n_evidence: int = 150, n_other: int = 700, seed: int = 1) -> list:
    """(sentence, is_evidence) pairs from the same sentence distribution as
    the corpus: strong outcome statements are evidence; filler and hedged
    reporting are not."""
    rng = random.Random(seed)
    pairs = []
    for i in range(n_evidence):
        name = f"{NAME_STEMS[rng.randrange(len(NAME_STEMS))]}{NAME_SUFFIXES[rng.randrange(len(NAME_SUFFIXES))]}"
        pool = POSITIVE_TEMPLATES if i % 2 == 0 else NEGATIVE_TEMPLATES
        pairs.append((_fill(rng.choice(pool), name, rng), True))
    for _ in range(n_other):
        name = f"{NAME_STEMS[rng.randrange(len(NAME_STEMS))]}{NAME_SUFFIXES[rng.randrange(len(NAME_SUFFIXES))]}"
        pool = FILLER_TEMPLATES if rng.random() < 0.8 else HEDGED_TEMPLATES
        pairs.append((_fill(rng.choice(pool), name, rng), False))
    return pairs


def planted_corpus(seed: int = 0, n_interventions: int = 120) -> list:
    """Fixture with uniform per-article noise; the multi-article modes should
    beat the single-sentence baselines here."""
    return synthetic_corpus(n_interventions=n_interventions, seed=seed, noise=UNIFORM_NOISE)


def phase_graded_corpus(seed: int = 0, n_interventions: int = 120) -> list:
    """Fixture whose signal quality rises with the trial phase."""
    return synthetic_corpus(n_interventions=n_interventions, seed=seed, noise=PHASE_GRADED_NOISE)
