"""Sequential-covering rule learner over ground knowledge bases.

The hypothesis language keeps concepts as constants and the sample as the
single (implicit) variable, so coverage checking is ground set membership.
Each seed's bottom clause is simply its atom set; generalization searches
literal subsets of that bottom clause with a beam, best-first by positive
coverage, then body length, then lexicographic body order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import EmptyPositives, ParseError, UnknownSample
from .kb import Atom, KnowledgeBase, UNARY_PREDICATE, BINARY_PREDICATES
from .model import SampleRecord

SAMPLE_VAR = "A"


@dataclass(frozen=True, order=True)
class Literal:
    """Body literal: predicate over one or two signed concept constants."""

    predicate: str
    args: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if self.predicate == UNARY_PREDICATE and len(self.args) == 1:
            pass
        elif self.predicate in BINARY_PREDICATES and len(self.args) == 2:
            pass
        else:
            raise ValueError(
                f"literal {self.predicate!r} cannot take {len(self.args)} concept args"
            )
        for cid, sign in self.args:
            if not isinstance(cid, int) or sign not in ("pos", "neg"):
                raise ValueError(f"bad literal argument {(cid, sign)!r}")

    def concept_ids(self) -> tuple[int, ...]:
        return tuple(cid for cid, _ in self.args)

    def instantiate(self, sample_id: str) -> Atom:
        terms = tuple((sign, sample_id, cid) for cid, sign in self.args)
        return Atom(self.predicate, (sample_id, *terms))


def atom_to_literal(atom: Atom) -> Literal:
    return Literal(atom.predicate, tuple((t[2], t[0]) for t in atom.args[1:]))


@dataclass(frozen=True)
class Clause:
    """One rule: a literal conjunction plus cached coverage over the KB.

    ground_sample marks an Aleph-style ground unit clause that covers
    exactly that sample; body is empty in that case.
    """

    body: tuple[Literal, ...]
    covered_pos: frozenset[str] = frozenset()
    covered_neg: frozenset[str] = frozenset()
    ground_sample: str | None = None

    def concept_ids(self) -> frozenset[int]:
        return frozenset(cid for lit in self.body for cid in lit.concept_ids())

    def predicates(self) -> frozenset[str]:
        return frozenset(lit.predicate for lit in self.body)


@dataclass(frozen=True)
class LearnConfig:
    max_body: int = 3
    min_pos: int = 1
    noise: int = 0
    beam_width: int = 8
    aleph_compat_ground_clauses: bool = False

    def __post_init__(self):
        if self.max_body < 1 or self.min_pos < 1 or self.beam_width < 1:
            raise ValueError("max_body, min_pos and beam_width must be positive")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class ConstraintSet:
    forbidden_concepts: frozenset[int] = frozenset()
    forbidden_relations: frozenset[str] = frozenset()
    forbidden_literals: frozenset[Literal] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "forbidden_concepts", frozenset(self.forbidden_concepts))
        object.__setattr__(self, "forbidden_relations", frozenset(self.forbidden_relations))
        object.__setattr__(self, "forbidden_literals", frozenset(self.forbidden_literals))

    def allows(self, literal: Literal) -> bool:
        if literal.predicate in self.forbidden_relations:
            return False
        if literal in self.forbidden_literals:
            return False
        return not any(cid in self.forbidden_concepts for cid in literal.concept_ids())

    def merged(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(
            self.forbidden_concepts | other.forbidden_concepts,
            self.forbidden_relations | other.forbidden_relations,
            self.forbidden_literals | other.forbidden_literals,
        )


@dataclass(frozen=True)
class Theory:
    clauses: tuple[Clause, ...]
    uncovered_pos: tuple[str, ...]
    config: LearnConfig

    def concept_ids(self) -> frozenset[int]:
        ids: frozenset[int] = frozenset()
        for c in self.clauses:
            ids |= c.concept_ids()
        return ids


def covers(clause: Clause, sample_id: str, facts: frozenset[Atom]) -> bool:
    """Ground coverage: every body literal instantiated with the sample is a fact."""
    if clause.ground_sample is not None:
        return sample_id == clause.ground_sample
    return all(lit.instantiate(sample_id) in facts for lit in clause.body)


def bottom_clause(seed: str, kb: KnowledgeBase, constraints: ConstraintSet) -> tuple[Literal, ...]:
    """The seed's atoms as literals, minus forbidden ones, canonically ordered."""
    if seed not in kb.facts:
        raise UnknownSample(f"seed {seed!r} not in the knowledge base")
    literals = {atom_to_literal(a) for a in kb.facts[seed]}
    return tuple(sorted(lit for lit in literals if constraints.allows(lit)))


def _coverage_bits(literals, sample_ids, kb) -> dict[Literal, int]:
    bits = {}
    for lit in literals:
        b = 0
        for i, sid in enumerate(sample_ids):
            if lit.instantiate(sid) in kb.facts[sid]:
                b |= 1 << i
        bits[lit] = b
    return bits


def _ids_from_bits(bits: int, sample_ids) -> frozenset[str]:
    return frozenset(sid for i, sid in enumerate(sample_ids) if bits >> i & 1)


def search_clause(
    bottom: tuple[Literal, ...], kb: KnowledgeBase, cfg: LearnConfig
) -> Clause | None:
    """Beam search over subsets of the bottom clause.

    Candidates are ranked by (positive coverage desc, body length asc,
    lexicographic body asc); the best candidate with covered_neg <= noise
    and covered_pos >= min_pos wins. Returns None when no subset of length
    <= max_body is consistent.
    """
    bottom = tuple(sorted(set(bottom)))
    if not bottom:
        return None
    pos_ids, neg_ids = kb.positives, kb.negatives
    pos_bits = _coverage_bits(bottom, pos_ids, kb)
    neg_bits = _coverage_bits(bottom, neg_ids, kb)

    best: tuple | None = None  # (key, body, pb, nb)

    def consider(body, pb, nb):
        nonlocal best
        if pb.bit_count() >= cfg.min_pos and nb.bit_count() <= cfg.noise:
            key = (-pb.bit_count(), len(body), body)
            if best is None or key < best[0]:
                best = (key, body, pb, nb)

    seen: set[tuple[Literal, ...]] = set()
    level = []
    for lit in bottom:
        body = (lit,)
        seen.add(body)
        pb, nb = pos_bits[lit], neg_bits[lit]
        consider(body, pb, nb)
        if pb.bit_count() >= cfg.min_pos:
            level.append((body, pb, nb))

    def rank(item):
        body, pb, _ = item
        return (-pb.bit_count(), len(body), body)

    beam = sorted(level, key=rank)[: cfg.beam_width]
    for _ in range(2, cfg.max_body + 1):
        nxt = []
        for body, pb, nb in beam:
            for lit in bottom:
                if lit in body:
                    continue
                new_body = tuple(sorted(body + (lit,)))
                if new_body in seen:
                    continue
                seen.add(new_body)
                npb = pb & pos_bits[lit]
                nnb = nb & neg_bits[lit]
                consider(new_body, npb, nnb)
                if npb.bit_count() >= cfg.min_pos:
                    nxt.append((new_body, npb, nnb))
        if not nxt:
            break
        beam = sorted(nxt, key=rank)[: cfg.beam_width]

    if best is None:
        return None
    _, body, pb, nb = best
    return Clause(body, _ids_from_bits(pb, pos_ids), _ids_from_bits(nb, neg_ids))


def induce(
    kb: KnowledgeBase, cfg: LearnConfig = LearnConfig(), constraints: ConstraintSet = ConstraintSet()
) -> Theory:
    """Sequential covering: seed from the first uncovered positive, search,
    remove everything the accepted clause covers, repeat until none remain.

    Seeds whose search fails are listed in uncovered_pos (or, with
    aleph_compat_ground_clauses, kept as ground unit clauses).
    """
    if not kb.positives:
        raise EmptyPositives("cannot induce from zero positive examples")
    remaining = list(kb.positives)
    clauses: list[Clause] = []
    uncovered: list[str] = []
    while remaining:
        seed = remaining[0]
        bottom = bottom_clause(seed, kb, constraints)
        found = search_clause(bottom, kb, cfg) if bottom else None
        if found is None:
            if cfg.aleph_compat_ground_clauses:
                clauses.append(
                    Clause((), frozenset({seed}), frozenset(), ground_sample=seed)
                )
            else:
                uncovered.append(seed)
            remaining.pop(0)
        else:
            clauses.append(found)
            remaining = [s for s in remaining if s not in found.covered_pos]
    return Theory(tuple(clauses), tuple(uncovered), cfg)


def explainer_truth(theory: Theory, sample_id: str, facts: frozenset[Atom]) -> str:
    """The surrogate label: positive iff some clause covers the sample."""
    for clause in theory.clauses:
        if covers(clause, sample_id, facts):
            return "positive"
    return "negative"


def literal_to_text(lit: Literal) -> str:
    terms = ", ".join(f"{sign}({SAMPLE_VAR}, c{cid})" for cid, sign in lit.args)
    return f"{lit.predicate}({SAMPLE_VAR}, {terms})"


def clause_to_text(clause: Clause) -> str:
    if clause.ground_sample is not None:
        return f"is_class({clause.ground_sample})."
    if not clause.body:
        return f"is_class({SAMPLE_VAR})."
    body = ", ".join(literal_to_text(lit) for lit in clause.body)
    return f"is_class({SAMPLE_VAR}) :- {body}."


def theory_to_text(theory: Theory) -> str:
    lines = [clause_to_text(c) for c in theory.clauses]
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_literal_text(text: str, line_no: int) -> Literal:
    text = text.strip()
    open_idx = text.find("(")
    if open_idx < 0 or not text.endswith(")"):
        raise ParseError(f"malformed literal {text!r}", line=line_no)
    predicate = text[:open_idx].strip()
    inner = text[open_idx + 1 : -1]
    parts = _split_top_level(inner)
    if not parts or parts[0].strip() != SAMPLE_VAR:
        raise ParseError(f"literal must start with the sample variable: {text!r}", line=line_no)
    args = []
    for part in parts[1:]:
        part = part.strip()
        for sign in ("pos", "neg"):
            prefix = sign + "("
            if part.startswith(prefix) and part.endswith(")"):
                fields = [p.strip() for p in part[len(prefix) : -1].split(",")]
                if len(fields) == 2 and fields[0] == SAMPLE_VAR and fields[1].startswith("c"):
                    args.append((int(fields[1][1:]), sign))
                    break
        else:
            raise ParseError(f"malformed signed concept term {part!r}", line=line_no)
    try:
        return Literal(predicate, tuple(args))
    except ValueError as exc:
        raise ParseError(str(exc), line=line_no) from exc


def _split_top_level(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def theory_from_text(text: str, config: LearnConfig = LearnConfig()) -> Theory:
    """Parse the logic-program form back into a theory (coverage caches empty)."""
    clauses = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not line.endswith("."):
            raise ParseError("clause must end with a period", line=line_no)
        line = line[:-1]
        if ":-" in line:
            head, _, body_text = line.partition(":-")
            if head.strip() != f"is_class({SAMPLE_VAR})":
                raise ParseError(f"unexpected clause head {head.strip()!r}", line=line_no)
            literals = tuple(
                _parse_literal_text(part, line_no) for part in _split_top_level(body_text)
            )
            clauses.append(Clause(tuple(sorted(literals))))
        else:
            head = line.strip()
            if not head.startswith("is_class(") or not head.endswith(")"):
                raise ParseError(f"unexpected clause {head!r}", line=line_no)
            arg = head[len("is_class(") : -1].strip()
            if arg == SAMPLE_VAR:
                clauses.append(Clause(()))
            else:
                clauses.append(Clause((), frozenset({arg}), frozenset(), ground_sample=arg))
    return Theory(tuple(clauses), (), config)


def theory_to_json(theory: Theory) -> str:
    doc = {
        "clauses": [
            {
                "body": [
                    {"predicate": lit.predicate, "args": [[cid, sign] for cid, sign in lit.args]}
                    for lit in c.body
                ],
                "covered_pos": sorted(c.covered_pos),
                "covered_neg": sorted(c.covered_neg),
                "ground_sample": c.ground_sample,
            }
            for c in theory.clauses
        ],
        "uncovered_pos": list(theory.uncovered_pos),
        "config": {
            "max_body": theory.config.max_body,
            "min_pos": theory.config.min_pos,
            "noise": theory.config.noise,
            "beam_width": theory.config.beam_width,
            "aleph_compat_ground_clauses": theory.config.aleph_compat_ground_clauses,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def theory_from_json(text: str) -> Theory:
    doc = json.loads(text)
    cfg = LearnConfig(**doc["config"])
    clauses = []
    for c in doc["clauses"]:
        body = tuple(
            Literal(lit["predicate"], tuple((int(a[0]), a[1]) for a in lit["args"]))
            for lit in c["body"]
        )
        clauses.append(
            Clause(
                body,
                frozenset(c["covered_pos"]),
                frozenset(c["covered_neg"]),
                c.get("ground_sample"),
            )
        )
    return Theory(tuple(clauses), tuple(doc["uncovered_pos"]), cfg)


def recompute_coverage(theory: Theory, kb: KnowledgeBase) -> Theory:
    """Rebuild coverage caches against a knowledge base (used after parsing)."""
    clauses = []
    for c in theory.clauses:
        cp = frozenset(s for s in kb.positives if covers(c, s, kb.facts[s]))
        cn = frozenset(s for s in kb.negatives if covers(c, s, kb.facts[s]))
        clauses.append(replace(c, covered_pos=cp, covered_neg=cn))
    return replace(theory, clauses=tuple(clauses))
